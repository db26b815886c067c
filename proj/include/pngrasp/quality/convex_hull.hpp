#pragma once

#include "pngrasp/common.hpp"

#include <array>
#include <random>
#include <span>

namespace pngrasp {

/// Incremental (quickhull-ordered) convex hull in D dimensions. Facets are
/// simplices stored with outward unit normals: every hull point satisfies
/// normal . x <= offset (+ tolerance). Near-degenerate inputs are retried
/// with a small deterministic joggle of the coordinates.
template <int D>
class ConvexHull {
  static_assert(D >= 2, "hull dimension must be at least 2");

 public:
  using Point = Eigen::Matrix<double, D, 1>;

  struct Facet {
    std::array<int, D> vertices;
    std::array<int, D> neighbors;  // neighbors[k] lies across the ridge opposite vertices[k]
    Point normal;
    double offset = 0.0;
  };

  /// Throws Error(HullFailure) when the points do not span D dimensions or
  /// the construction fails at every joggle level.
  static ConvexHull build(std::span<const Point> points, double rel_tol = 1e-10) {
    require(points.size() >= static_cast<std::size_t>(D + 1), ErrorCode::HullFailure,
            "convex hull needs at least D + 1 points");
    double scale = 0.0;
    for (const Point& p : points) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    require(scale > 0 && std::isfinite(scale), ErrorCode::HullFailure, "degenerate hull input");

    {
      ConvexHull probe;
      probe.points_.assign(points.begin(), points.end());
      probe.eps_ = rel_tol * scale;
      std::vector<int> simplex;
      require(probe.initial_simplex(simplex), ErrorCode::HullFailure, "hull input does not span full dimension");
    }

    std::vector<Point> work(points.begin(), points.end());
    std::mt19937_64 rng(0x5eedULL);
    double joggle = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      if (attempt > 0) {
        joggle = scale * std::pow(10.0, -12 + 1.5 * attempt);
        std::uniform_real_distribution<double> u(-joggle, joggle);
        for (std::size_t i = 0; i < work.size(); ++i)
          for (int k = 0; k < D; ++k) work[i][k] = points[i][k] + u(rng);
      }
      ConvexHull hull;
      hull.eps_ = rel_tol * scale;
      hull.joggle_ = joggle;
      if (hull.construct(work)) {
        hull.compact();
        return hull;
      }
    }
    fail(ErrorCode::HullFailure, "convex hull construction did not converge");
  }

  const std::vector<Facet>& facets() const { return facets_; }
  const std::vector<Point>& points() const { return points_; }
  double tolerance() const { return eps_; }
  double joggle() const { return joggle_; }

  /// Signed distance from q to the boundary: positive inside.
  double interior_distance(const Point& q) const {
    double best = std::numeric_limits<double>::infinity();
    for (const Facet& f : facets_) best = std::min(best, f.offset - f.normal.dot(q));
    return best;
  }

 private:
  ConvexHull() = default;

  double distance(const Facet& f, const Point& p) const { return f.normal.dot(p) - f.offset; }

  // Plane through the facet's vertices, oriented away from interior_. The
  // normal is the part of (base - interior_) orthogonal to the facet's
  // edges, by twice-applied modified Gram-Schmidt.
  bool make_plane(Facet& f) const {
    const Point& base = points_[f.vertices[0]];
    std::array<Point, D - 1> q;
    double max_edge = 0.0;
    for (int k = 1; k < D; ++k) {
      q[k - 1] = points_[f.vertices[k]] - base;
      max_edge = std::max(max_edge, q[k - 1].norm());
    }
    const double floor = 1e-10 * std::max(max_edge, eps_);
    for (int k = 0; k < D - 1; ++k) {
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j < k; ++j) q[k] -= q[j].dot(q[k]) * q[j];
      const double len = q[k].norm();
      if (len <= floor) return false;
      q[k] /= len;
    }
    Point normal = base - interior_;
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < D - 1; ++j) normal -= q[j].dot(normal) * q[j];
    const double len = normal.norm();
    if (len <= eps_) return false;
    normal /= len;
    const double offset = normal.dot(base);
    if (offset - normal.dot(interior_) <= eps_) return false;
    f.normal = normal;
    f.offset = offset;
    return true;
  }

  bool initial_simplex(std::vector<int>& simplex) const {
    const int n = static_cast<int>(points_.size());
    Point centroid = Point::Zero();
    for (const Point& p : points_) centroid += p;
    centroid /= n;
    int first = 0;
    double far = -1;
    for (int i = 0; i < n; ++i) {
      const double d = (points_[i] - centroid).squaredNorm();
      if (d > far) {
        far = d;
        first = i;
      }
    }
    simplex = {first};
    std::vector<Point> basis;
    for (int k = 0; k < D; ++k) {
      int pick = -1;
      double best = 0.0;
      for (int i = 0; i < n; ++i) {
        Point r = points_[i] - points_[first];
        for (const Point& b : basis) r -= r.dot(b) * b;
        const double d = r.norm();
        if (d > best) {
          best = d;
          pick = i;
        }
      }
      if (pick < 0 || best <= 1e3 * eps_) return false;
      Point r = points_[pick] - points_[first];
      for (const Point& b : basis) r -= r.dot(b) * b;
      basis.push_back(r.normalized());
      simplex.push_back(pick);
    }
    return true;
  }

  bool construct(const std::vector<Point>& pts) {
    points_ = pts;
    std::vector<int> simplex;
    if (!initial_simplex(simplex)) return false;
    interior_ = Point::Zero();
    for (int idx : simplex) interior_ += points_[idx];
    interior_ /= (D + 1);

    facets_.clear();
    alive_.clear();
    outside_.clear();
    for (int i = 0; i <= D; ++i) {
      Facet f;
      int slot = 0;
      for (int j = 0; j <= D; ++j) {
        if (j == i) continue;
        f.vertices[slot] = simplex[j];
        f.neighbors[slot] = j;  // facet j omits simplex[j]
        ++slot;
      }
      if (!make_plane(f)) return false;
      facets_.push_back(f);
      alive_.push_back(true);
      outside_.emplace_back();
    }

    std::vector<char> used(points_.size(), 0);
    for (int idx : simplex) used[idx] = 1;
    for (int i = 0; i < static_cast<int>(points_.size()); ++i) {
      if (used[i]) continue;
      assign_outside(i, 0, static_cast<int>(facets_.size()));
    }

    std::vector<int> visible, stack;
    std::vector<char> mark;
    std::vector<Ridge> ridges;
    std::size_t cursor = 0;  // facets below the cursor have nothing pending
    for (std::size_t guard = 0; guard < 4 * points_.size() + 64; ++guard) {
      int face = -1;
      for (; cursor < facets_.size(); ++cursor) {
        if (alive_[cursor] && !outside_[cursor].empty()) {
          face = static_cast<int>(cursor);
          break;
        }
      }
      if (face < 0) return true;

      int apex = outside_[face][0];
      double far = distance(facets_[face], points_[apex]);
      for (int p : outside_[face]) {
        const double d = distance(facets_[face], points_[p]);
        if (d > far) {
          far = d;
          apex = p;
        }
      }

      // Visible region by flood fill from `face`.
      mark.assign(facets_.size(), 0);
      visible.clear();
      stack = {face};
      mark[face] = 1;
      while (!stack.empty()) {
        const int f = stack.back();
        stack.pop_back();
        visible.push_back(f);
        for (int nb : facets_[f].neighbors) {
          if (mark[nb]) continue;
          if (distance(facets_[nb], points_[apex]) > eps_) {
            mark[nb] = 1;
            stack.push_back(nb);
          } else {
            mark[nb] = 2;  // horizon side, may be revisited from another ridge
          }
        }
      }
      for (auto& m : mark)
        if (m == 2) m = 0;

      // One new facet per horizon ridge.
      const int first_new = static_cast<int>(facets_.size());
      ridges.clear();
      for (int f : visible) {
        for (int k = 0; k < D; ++k) {
          const int nb = facets_[f].neighbors[k];
          if (mark[nb] == 1) continue;
          Facet nf;
          nf.vertices = facets_[f].vertices;
          nf.vertices[k] = apex;
          nf.neighbors.fill(-1);
          nf.neighbors[k] = nb;
          if (!make_plane(nf)) return false;
          const int id = static_cast<int>(facets_.size());
          // Repoint the horizon facet at the new one.
          bool relinked = false;
          for (int& back : facets_[nb].neighbors) {
            if (back == f) {
              back = id;
              relinked = true;
              break;
            }
          }
          if (!relinked) return false;
          facets_.push_back(nf);
          alive_.push_back(true);
          outside_.emplace_back();
          for (int j = 0; j < D; ++j) {
            if (j == k) continue;
            std::array<int, D - 1> key;
            int s = 0;
            for (int m = 0; m < D; ++m)
              if (m != j) key[s++] = nf.vertices[m];
            std::sort(key.begin(), key.end());
            ridges.push_back(Ridge{pack_ridge(key), key, id, j});
          }
        }
      }
      // New facets pair up across their shared ridges.
      std::sort(ridges.begin(), ridges.end(),
                [](const Ridge& a, const Ridge& b) {
                  return a.packed != b.packed ? a.packed < b.packed : a.key < b.key;
                });
      if (ridges.size() % 2 != 0) return false;
      for (std::size_t i = 0; i < ridges.size(); i += 2) {
        const Ridge& a = ridges[i];
        const Ridge& b = ridges[i + 1];
        if (a.key != b.key || (i + 2 < ridges.size() && ridges[i + 2].key == a.key)) return false;
        facets_[a.facet].neighbors[a.slot] = b.facet;
        facets_[b.facet].neighbors[b.slot] = a.facet;
      }
      for (int f = first_new; f < static_cast<int>(facets_.size()); ++f)
        for (int nb : facets_[f].neighbors)
          if (nb < 0) return false;

      const int last_new = static_cast<int>(facets_.size());
      for (int f : visible) {
        alive_[f] = false;
        for (int p : outside_[f]) {
          if (p != apex) assign_outside(p, first_new, last_new);
        }
        outside_[f].clear();
      }
    }
    return false;
  }

  struct Ridge {
    std::uint64_t packed;  // order-preserving prefix of key, for fast sorting
    std::array<int, D - 1> key;
    int facet;
    int slot;
  };

  static std::uint64_t pack_ridge(const std::array<int, D - 1>& key) {
    constexpr int bits = 64 / (D - 1) < 16 ? 64 / (D - 1) : 16;
    constexpr std::uint64_t cap = (std::uint64_t{1} << bits) - 1;
    std::uint64_t out = 0;
    for (int v : key) out = (out << bits) | std::min<std::uint64_t>(static_cast<std::uint64_t>(v), cap);
    return out;
  }

  void assign_outside(int p, int from, int to) {
    int best = -1;
    double best_d = eps_;
    for (int f = from; f < to; ++f) {
      if (!alive_[f]) continue;
      const double d = distance(facets_[f], points_[p]);
      if (d > best_d) {
        best_d = d;
        best = f;
      }
    }
    if (best >= 0) outside_[best].push_back(p);
  }

  void compact() {
    std::vector<int> remap(facets_.size(), -1);
    std::vector<Facet> kept;
    for (std::size_t f = 0; f < facets_.size(); ++f) {
      if (!alive_[f]) continue;
      remap[f] = static_cast<int>(kept.size());
      kept.push_back(facets_[f]);
    }
    for (Facet& f : kept)
      for (int& nb : f.neighbors) nb = remap[nb];
    facets_ = std::move(kept);
    alive_.clear();
    outside_.clear();
  }

  std::vector<Point> points_;
  std::vector<Facet> facets_;
  std::vector<char> alive_;
  std::vector<std::vector<int>> outside_;
  Point interior_ = Point::Zero();
  double eps_ = 0.0;
  double joggle_ = 0.0;
};

}  // namespace pngrasp
