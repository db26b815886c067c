#pragma once

#include "pngrasp/quality/convex_hull.hpp"
#include "pngrasp/quality/wrench.hpp"

#include <Eigen/SVD>

#include <ostream>

namespace pngrasp {

using WrenchHull = ConvexHull<6>;

struct FerrariCannyResult {
  double q_fc = 0.0;        // clamped to [0, 1]
  double unclamped = 0.0;   // distance from the origin to the hull boundary, or 0
  int rank = 0;             // affine rank of the wrench set
  bool hull_failure = false;
};

/// Affine dimension of the wrench point set, by singular values.
inline int wrench_affine_rank(std::span<const Wrench> wrenches, double rel_tol = 1e-9) {
  if (wrenches.empty()) return 0;
  Eigen::Matrix<double, 6, Eigen::Dynamic> m(6, static_cast<int>(wrenches.size()));
  Wrench::Vector6 mean = Wrench::Vector6::Zero();
  for (std::size_t i = 0; i < wrenches.size(); ++i) {
    m.col(static_cast<int>(i)) = wrenches[i].vector();
    mean += m.col(static_cast<int>(i));
  }
  mean /= static_cast<double>(wrenches.size());
  m.colwise() -= mean;
  Eigen::JacobiSVD<Eigen::Matrix<double, 6, Eigen::Dynamic>> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] <= 0) return 0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > rel_tol * s[0]) ++rank;
  return rank;
}

/// Largest radius of an origin-centered ball inside the convex hull of the
/// wrenches; 0 when the origin is not strictly interior or the set is
/// rank deficient. A failed hull also yields 0, flagged in the result.
inline FerrariCannyResult ferrari_canny(std::span<const Wrench> wrenches, double tol = 1e-10) {
  require(!wrenches.empty(), ErrorCode::InvalidArgument, "ferrari_canny needs at least one wrench");
  FerrariCannyResult out;
  out.rank = wrench_affine_rank(wrenches);
  if (out.rank < 6) return out;
  std::vector<WrenchHull::Point> pts;
  pts.reserve(wrenches.size());
  for (const Wrench& w : wrenches) pts.push_back(w.vector());
  try {
    const WrenchHull hull = WrenchHull::build(pts, tol);
    const double d = hull.interior_distance(WrenchHull::Point::Zero());
    if (d > hull.tolerance() + hull.joggle()) out.unclamped = d;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::HullFailure) throw;
    out.hull_failure = true;
  }
  out.q_fc = std::clamp(out.unclamped, 0.0, 1.0);
  return out;
}

struct QualityResult {
  double q_fc = 0.0;
  int q_b = 0;
  double q_c = 0.0;
  bool hull_failure = false;
};

/// Binary and combined metrics from the continuous one.
inline QualityResult combined_metric(double q_fc) {
  require(q_fc >= 0 && !std::isnan(q_fc), ErrorCode::DomainError, "q_fc must be non-negative");
  QualityResult r;
  r.q_fc = q_fc;
  r.q_b = q_fc > 0 ? 1 : 0;
  r.q_c = r.q_b == 1 ? q_fc : 0.0;
  return r;
}

/// Plain-text dump of a wrench set and its hull facets for offline inspection.
inline void dump_wrench_debug(std::ostream& out, std::span<const Wrench> wrenches) {
  out << "# wrenches " << wrenches.size() << "\n";
  out.precision(12);
  for (const Wrench& w : wrenches) {
    const auto v = w.vector();
    for (int i = 0; i < 6; ++i) out << (i ? " " : "w ") << v[i];
    out << "\n";
  }
  if (wrench_affine_rank(wrenches) < 6) {
    out << "# hull degenerate\n";
    return;
  }
  std::vector<WrenchHull::Point> pts;
  for (const Wrench& w : wrenches) pts.push_back(w.vector());
  try {
    const WrenchHull hull = WrenchHull::build(pts);
    out << "# facets " << hull.facets().size() << "\n";
    for (const auto& f : hull.facets()) {
      out << "f";
      for (int v : f.vertices) out << " " << v;
      for (int i = 0; i < 6; ++i) out << " " << f.normal[i];
      out << " " << f.offset << "\n";
    }
  } catch (const Error&) {
    out << "# hull failure\n";
  }
}

}  // namespace pngrasp
