#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pngrasp/quality.hpp"
#include "test_support.hpp"

#include <numbers>
#include <sstream>

using namespace pngrasp;
using namespace pngrasp::testing;

namespace {

std::vector<Wrench> sphere_antipodal_wrenches(double radius, double mu, int k, double patch) {
  const std::array<Contact, 2> c{Contact{Vec3(-radius, 0, 0), Vec3::UnitX(), mu},
                                 Contact{Vec3(radius, 0, 0), -Vec3::UnitX(), mu}};
  std::vector<Wrench> w = primitive_wrenches(c, Vec3::Zero(), k, 1.0 / radius);
  for (const Wrench& t : torsional_wrenches(c, patch, 1.0 / radius)) w.push_back(t);
  return w;
}

std::vector<Wrench> scaled(const std::vector<Wrench>& w, double s) {
  std::vector<Wrench> out;
  for (const Wrench& x : w) out.push_back(Wrench{s * x.force, s * x.torque});
  return out;
}

// Two contacts roughly facing each other across a random axis.
std::array<Contact, 2> random_contact_pair(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> half(5.0, 30.0), tilt(0.0, 0.8), mu(0.05, 0.8);
  const Vec3 axis = random_unit(rng);
  const Vec3 mid = random_point(rng, 10.0);
  std::array<Contact, 2> out;
  for (int s = 0; s < 2; ++s) {
    const double sign = s == 0 ? -1.0 : 1.0;
    const Vec3 pos = mid + sign * half(rng) * axis + random_point(rng, 3.0);
    Vec3 n = -sign * axis;
    const Vec3 perp = any_orthogonal(n);
    n = Eigen::AngleAxisd(tilt(rng), Eigen::AngleAxisd(2 * std::numbers::pi * tilt(rng), n) * perp) * n;
    out[s] = Contact{pos, n.normalized(), mu(rng)};
  }
  return out;
}

}  // namespace

TEST(FrictionCone, ZeroFrictionCollapsesToNormal) {
  const auto dirs = friction_cone(Contact{Vec3::Zero(), Vec3(0, 1, 0), 0.0}, 8);
  ASSERT_EQ(dirs.size(), 8u);
  for (const Vec3& d : dirs) EXPECT_LT((d - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(FrictionCone, EdgesLieOnTheConeAndAverageToTheNormal) {
  const Contact c{Vec3::Zero(), Vec3::UnitZ(), 0.2};
  const auto dirs = friction_cone(c, 8);
  Vec3 mean = Vec3::Zero();
  for (const Vec3& d : dirs) {
    EXPECT_NEAR(d.norm(), 1.0, 1e-12);
    EXPECT_NEAR(std::acos(std::clamp(d.z(), -1.0, 1.0)), std::atan(0.2), 1e-9);
    mean += d;
  }
  EXPECT_LT(mean.normalized().cross(Vec3::UnitZ()).norm(), 1e-12);
  EXPECT_THROW(friction_cone(c, 2), Error);
}

TEST(PrimitiveWrenches, CountsAndTorqueAtOrigin) {
  const std::array<Contact, 2> c{Contact{Vec3(1, 2, 3), Vec3::UnitX(), 0.3},
                                 Contact{Vec3(5, 2, 3), -Vec3::UnitX(), 0.3}};
  const auto w = primitive_wrenches(c, Vec3(1, 2, 3), 8, 0.1);
  ASSERT_EQ(w.size(), 16u);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(w[i].torque.norm(), 0.0);
  for (int i = 8; i < 16; ++i) EXPECT_GT(w[i].torque.norm(), 0.0);
}

TEST(PrimitiveWrenches, TranslationInvariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_contact_pair(rng);
    const Vec3 origin = random_point(rng, 20.0);
    const Vec3 shift = random_point(rng, 500.0);
    std::array<Contact, 2> moved = c;
    for (Contact& x : moved) x.position += shift;
    const auto a = primitive_wrenches(c, origin, 8, 0.05);
    const auto b = primitive_wrenches(moved, origin + shift, 8, 0.05);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT((a[i].vector() - b[i].vector()).norm(), 1e-10);
  }
}

TEST(ConvexHull3, MatchesBruteForceSupportingPlanes) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vec3> pts;
    const int n = 8 + trial;
    for (int i = 0; i < n; ++i) pts.push_back(random_point(rng, 10.0));
    const auto hull = ConvexHull<3>::build(pts);
    for (const auto& f : hull.facets()) {
      for (const Vec3& p : pts) EXPECT_LE(f.normal.dot(p) - f.offset, 1e-8);
      for (int v : f.vertices) EXPECT_NEAR(f.normal.dot(pts[v]), f.offset, 1e-8);
    }
    // Brute force: planes through triples with every point on one side.
    std::vector<std::pair<Vec3, double>> planes;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c) {
          Vec3 nrm = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
          if (nrm.norm() < 1e-12) continue;
          nrm.normalize();
          double lo = 0, hi = 0;
          for (const Vec3& p : pts) {
            const double d = nrm.dot(p - pts[a]);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
          }
          if (hi <= 1e-9) planes.emplace_back(nrm, nrm.dot(pts[a]));
          else if (lo >= -1e-9) planes.emplace_back(-nrm, -nrm.dot(pts[a]));
        }
    for (int q = 0; q < 50; ++q) {
      const Vec3 x = random_point(rng, 12.0);
      double expect = std::numeric_limits<double>::infinity();
      for (const auto& [nrm, off] : planes) expect = std::min(expect, off - nrm.dot(x));
      EXPECT_NEAR(hull.interior_distance(x), expect, 1e-9);
    }
  }
}

TEST(ConvexHull6, CrossPolytopeAndHypercube) {
  using P = ConvexHull<6>::Point;
  std::vector<P> cross;
  for (int i = 0; i < 6; ++i) {
    cross.push_back(P::Unit(i));
    cross.push_back(-P::Unit(i));
  }
  const auto h1 = ConvexHull<6>::build(cross);
  EXPECT_EQ(h1.facets().size(), 64u);
  EXPECT_NEAR(h1.interior_distance(P::Zero()), 1.0 / std::sqrt(6.0), 1e-9);

  // Non-simplicial facets: every 2-face is degenerate for a plain simplex hull.
  std::vector<P> cube;
  for (int m = 0; m < 64; ++m) {
    P p;
    for (int i = 0; i < 6; ++i) p[i] = (m >> i) & 1 ? 1.0 : -1.0;
    cube.push_back(p);
  }
  const auto h2 = ConvexHull<6>::build(cube);
  EXPECT_NEAR(h2.interior_distance(P::Zero()), 1.0, 1e-6);
  for (const auto& f : h2.facets())
    for (const P& p : cube) EXPECT_LE(f.normal.dot(p) - f.offset, 1e-6);
}

TEST(ConvexHull6, FlatInputThrowsHullFailure) {
  using P = ConvexHull<6>::Point;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<P> pts;
  for (int i = 0; i < 30; ++i) {
    P p;
    for (int k = 0; k < 5; ++k) p[k] = u(rng);
    p[5] = 0.0;
    pts.push_back(p);
  }
  try {
    ConvexHull<6>::build(pts);
    FAIL() << "expected HullFailure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HullFailure);
  }
}

TEST(FerrariCanny, ParallelForcesGiveZero) {
  std::vector<Wrench> w;
  for (int i = 0; i < 10; ++i) w.push_back(Wrench{Vec3::UnitZ(), Vec3::Zero()});
  const auto r = ferrari_canny(w);
  EXPECT_EQ(r.q_fc, 0.0);
  EXPECT_LT(r.rank, 6);
  EXPECT_THROW(ferrari_canny(std::vector<Wrench>{}), Error);
}

TEST(FerrariCanny, HardPointContactPairIsNeverForceClosure) {
  // Every wrench has zero moment about the contact line: rank 5 at most.
  const auto w = sphere_antipodal_wrenches(25.0, 0.2, 8, 0.0);
  const auto r = ferrari_canny(w);
  EXPECT_LE(r.rank, 5);
  EXPECT_EQ(r.q_fc, 0.0);
}

TEST(FerrariCanny, SphereAntipodalMatchesSupportOracle) {
  const auto w = sphere_antipodal_wrenches(25.0, 0.2, 8, 5.0);
  const auto r = ferrari_canny(w);
  ASSERT_GT(r.q_fc, 0.0);
  const double oracle = oracle::support_function_distance(w, 10000, 7);
  EXPECT_LE(std::abs(r.q_fc - oracle) / r.q_fc, 0.05) << r.q_fc << " vs " << oracle;
  EXPECT_GE(oracle, r.q_fc - 1e-9);
}

TEST(FerrariCanny, HullHomothety) {
  const auto w = sphere_antipodal_wrenches(25.0, 0.3, 8, 5.0);
  const double base = ferrari_canny(w).unclamped;
  ASSERT_GT(base, 0.0);
  for (double s : {0.25, 2.0, 7.5}) EXPECT_NEAR(ferrari_canny(scaled(w, s)).unclamped, s * base, 1e-9 * s);
}

TEST(FerrariCanny, SignAgreesWithLinearFeasibilityOracle) {
  std::mt19937_64 rng(2024);
  QualityConfig cfg;
  int positives = 0, negatives = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_contact_pair(rng);
    const Vec3 origin = 0.5 * (c[0].position + c[1].position) + random_point(rng, 4.0);
    const double lambda = 1.0 / 40.0;
    std::vector<Wrench> w = primitive_wrenches(c, origin, cfg.cone_edges, lambda);
    for (const Wrench& t : torsional_wrenches(c, cfg.patch_radius, lambda)) w.push_back(t);
    const auto r = ferrari_canny(w);
    const double margin = oracle::force_closure_margin(w);
    const bool oracle_fc = margin > 1e-9;
    EXPECT_EQ(r.q_fc > 0, oracle_fc) << "trial " << trial << " q=" << r.q_fc << " t=" << margin;
    (oracle_fc ? positives : negatives)++;
    if (r.q_fc > 0) {
      const double sf = oracle::support_function_distance(w, 10000, trial);
      EXPECT_LE(std::abs(r.q_fc - sf) / r.q_fc, 0.05) << "trial " << trial << " " << r.q_fc << " vs " << sf;
      if (trial < 40) EXPECT_NEAR(r.q_fc, oracle::brute_force_boundary_distance(w), 1e-8) << "trial " << trial;
    }
  }
  EXPECT_GE(positives, 20);
  EXPECT_GE(negatives, 20);
}

TEST(CombinedMetric, Examples) {
  const auto zero = combined_metric(0.0);
  EXPECT_EQ(zero.q_b, 0);
  EXPECT_EQ(zero.q_c, 0.0);
  const auto pos = combined_metric(0.03);
  EXPECT_EQ(pos.q_b, 1);
  EXPECT_DOUBLE_EQ(pos.q_c, 0.03);
  try {
    combined_metric(-0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainError);
  }
  EXPECT_THROW(combined_metric(std::nan("")), Error);
}

TEST(FindContacts, CubeFreeSpaceAndOversize) {
  const GripperModel gripper;
  const IndexedMesh cube(make_cube(40.0));
  Grasp g;
  g.point = Vec3(0, 0, 20);
  g.approach = -Vec3::UnitZ();
  g.opening = Vec3::UnitX();
  g.depth = 20.0;
  const auto c = find_contacts(g, cube, gripper);
  ASSERT_TRUE(c.has_value());
  EXPECT_NEAR((*c)[0].position.x(), -20.0, 1e-9);
  EXPECT_LT(((*c)[0].inward_normal - Vec3::UnitX()).norm(), 1e-12);
  EXPECT_NEAR((*c)[1].position.x(), 20.0, 1e-9);
  EXPECT_LT(((*c)[1].inward_normal + Vec3::UnitX()).norm(), 1e-12);

  Grasp away = g;
  away.point = Vec3(500, 0, 0);
  EXPECT_FALSE(find_contacts(away, cube, gripper).has_value());

  const IndexedMesh big(make_cube(80.0));
  g.point = Vec3(0, 0, 40);
  EXPECT_FALSE(find_contacts(g, big, gripper).has_value());
}

TEST(GraspQuality, Examples) {
  const GripperModel gripper;
  const IndexedMesh cube(make_cube(40.0));
  const GraspTarget target = GraspTarget::make(cube, Vec3::Zero(), 0.2);
  Grasp g;
  g.point = Vec3(0, 0, 20);
  g.approach = -Vec3::UnitZ();
  g.opening = Vec3::UnitX();
  g.depth = 20.0;
  const auto r = grasp_quality(g, target, gripper);
  EXPECT_EQ(r.q_b, 1);
  EXPECT_GT(r.q_fc, 0.0);
  const auto contacts = *find_contacts(g, cube, gripper);
  const auto w = grasp_wrenches(contacts, target, QualityConfig{});
  EXPECT_GT(oracle::force_closure_margin(w), 1e-9);
  EXPECT_LE(std::abs(r.q_fc - oracle::support_function_distance(w, 10000, 1)) / r.q_fc, 0.05);

  Grasp away = g;
  away.point = Vec3(0, 0, 500);
  const auto z = grasp_quality(away, target, gripper);
  EXPECT_EQ(z.q_fc, 0.0);
  EXPECT_EQ(z.q_b, 0);
  EXPECT_EQ(z.q_c, 0.0);

  // A single frictional contact cannot resist every wrench.
  const std::array<Contact, 1> single{contacts[0]};
  std::vector<Wrench> one = primitive_wrenches(single, Vec3::Zero(), 8, target.torque_scale);
  for (const Wrench& t : torsional_wrenches(single, 5.0, target.torque_scale)) one.push_back(t);
  EXPECT_EQ(ferrari_canny(one).q_fc, 0.0);
}

TEST(GraspQuality, RigidInvariance) {
  const GripperModel gripper;
  const TriMesh sphere = make_sphere(25.0, 32);
  const TriMesh box = make_box(30, 40, 20);
  std::mt19937_64 rng(8);
  int positive = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const TriMesh& base = trial % 2 ? sphere : box;
    const IndexedMesh a(base);
    const RigidTransform T = random_transform(rng, 300.0);
    const IndexedMesh b(base.transformed(T));
    Grasp g;
    g.point = random_point(rng, 8.0);
    g.approach = random_unit(rng);
    g.opening = any_orthogonal(g.approach);
    g.depth = 0.0;
    const double qa = grasp_quality(g, GraspTarget::make(a, Vec3::Zero(), 0.4), gripper).q_fc;
    const double qb =
        grasp_quality(g.transformed(T), GraspTarget::make(b, T.apply(Vec3::Zero()), 0.4), gripper).q_fc;
    EXPECT_NEAR(qa, qb, 1e-9);
    positive += qa > 0;
  }
  EXPECT_GT(positive, 10);
}

TEST(WrenchDebug, DumpListsWrenchesAndFacets) {
  const auto w = sphere_antipodal_wrenches(25.0, 0.2, 8, 5.0);
  std::ostringstream out;
  dump_wrench_debug(out, w);
  const std::string s = out.str();
  EXPECT_NE(s.find("# wrenches 20"), std::string::npos);
  EXPECT_NE(s.find("# facets"), std::string::npos);
}
