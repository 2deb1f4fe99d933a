#pragma once

// Support geometry. In 1+1D the spacelike-separation decision is exact: the
// difference set B (-) A of two convex polygons is the convex hull of the
// pairwise vertex differences, and separation holds iff that polygon misses
// both closed light cones {u>=0, v>=0} and {u<=0, v<=0} in the light-cone
// coordinates u = t-x, v = t+x. In 3+1D only a sufficient certificate is
// attempted and Unknown is a valid answer.

#include "modlab/spectral.hpp"

namespace modlab {

struct ConvexHull {
  int dim = 0;
  std::vector<Vec> vertices;  // in convex position; 2D hulls are CCW ordered
};

enum class Separation { Separated, NotSeparated, Unknown };

inline const char* to_string(Separation s) {
  switch (s) {
    case Separation::Separated: return "separated";
    case Separation::NotSeparated: return "not_separated";
    default: return "unknown";
  }
}

namespace detail {

inline double cross2(const Vec& o, const Vec& a, const Vec& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew monotone chain; collinear points dropped so every vertex is extreme.
inline std::vector<Vec> hull_2d(std::vector<Vec> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n <= 2) return pts;
  std::vector<Vec> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

// Clip a convex polygon by the half-plane {p : n.p >= 0} (n in (u,v) coords
// already applied to the points). Returns whether anything is left.
inline bool clip_halfplane(std::vector<Vec>& poly, double nu, double nv) {
  if (poly.empty()) return false;
  auto side = [&](const Vec& p) { return nu * p[0] + nv * p[1]; };
  if (poly.size() == 1) return side(poly[0]) >= 0.0 ? true : (poly.clear(), false);
  std::vector<Vec> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& a = poly[i];
    const Vec& b = poly[(i + 1) % n];
    double sa = side(a), sb = side(b);
    if (sa >= 0.0) out.push_back(a);
    if ((sa < 0.0) != (sb < 0.0)) {
      double t = sa / (sa - sb);
      out.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
    }
  }
  // Degenerate two-point "polygon" (a segment) duplicates each vertex when the
  // modulo walk runs both directions; harmless for emptiness testing.
  poly = std::move(out);
  return !poly.empty();
}

inline bool polygon_meets_quadrant(const std::vector<Vec>& poly_uv, int sign) {
  std::vector<Vec> p = poly_uv;
  if (!clip_halfplane(p, sign, 0.0)) return false;
  if (!clip_halfplane(p, 0.0, sign)) return false;
  return !p.empty();
}

}  // namespace detail

inline ConvexHull make_hull(int dim, std::vector<Vec> points) {
  if (points.empty()) throw EmptySupport("make_hull: no points");
  ConvexHull h;
  h.dim = dim;
  h.vertices = (dim == 2) ? detail::hull_2d(std::move(points)) : std::move(points);
  return h;
}

inline ConvexHull hull_of_box(const Box& b) {
  const int d = b.dim();
  std::vector<Vec> corners;
  const int total = 1 << d;
  for (int c = 0; c < total; ++c) {
    Vec v(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a)
      v[static_cast<std::size_t>(a)] = ((c >> a) & 1) ? b.hi[static_cast<std::size_t>(a)] : b.lo[static_cast<std::size_t>(a)];
    corners.push_back(std::move(v));
  }
  return make_hull(d, std::move(corners));
}

// Convex hull of all grid nodes with |f| >= theta * max|f|.
inline ConvexHull support_hull(const GridFunction& f, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw InvariantViolation("support_hull: need 0 < theta < 1");
  const double peak = f.max_abs();
  if (peak == 0.0) throw EmptySupport("support_hull: function is identically zero");
  const double cut = theta * peak;
  const GridSpec& g = f.spec();
  std::vector<Vec> pts;
  std::vector<int> idx;
  for (std::size_t i = 0; i < f.data().size(); ++i) {
    if (std::abs(f.data()[i]) < cut) continue;
    f.unflatten(i, idx);
    Vec x(static_cast<std::size_t>(g.dim()));
    for (int a = 0; a < g.dim(); ++a) x[static_cast<std::size_t>(a)] = g.coord(a, idx[static_cast<std::size_t>(a)]);
    pts.push_back(std::move(x));
  }
  if (pts.empty()) throw EmptySupport("support_hull: no samples above threshold");
  if (g.dim() == 2) return make_hull(2, std::move(pts));
  // d > 2: bounding-box over-approximation (documented accuracy caveat).
  Box b{pts[0], pts[0]};
  for (const auto& p : pts)
    for (std::size_t a = 0; a < p.size(); ++a) {
      b.lo[a] = std::min(b.lo[a], p[a]);
      b.hi[a] = std::max(b.hi[a], p[a]);
    }
  return hull_of_box(b);
}

// Analytic support polytope: exact bounding polytopes for bumps and formal
// sums of bumps; anything else must go through the grid path.
inline ConvexHull analytic_support_polytope(const ModulationFunction& f) {
  if (const auto* b = f.get_if<BumpFunction>()) {
    Box box;
    box.lo = b->center;
    box.hi = b->center;
    for (std::size_t a = 0; a < b->center.size(); ++a) {
      box.lo[a] -= b->radii[a];
      box.hi[a] += b->radii[a];
    }
    return hull_of_box(box);
  }
  if (const auto* s = f.get_if<FormalSum>()) {
    std::vector<Vec> pts;
    int d = f.dim();
    for (const auto& t : s->terms) {
      if (std::abs(t.weight) == 0.0) continue;
      auto h = analytic_support_polytope(*t.fn);
      pts.insert(pts.end(), h.vertices.begin(), h.vertices.end());
    }
    if (pts.empty()) throw EmptySupport("analytic_support_polytope: empty sum");
    return make_hull(d, std::move(pts));
  }
  throw Error("analytic_support_polytope: only compact-support variants have one");
}

inline Separation spacelike_separated(const ConvexHull& A, const ConvexHull& B) {
  if (A.vertices.empty() || B.vertices.empty())
    throw EmptySupport("spacelike_separated: empty hull");
  if (A.dim != B.dim) throw InvariantViolation("spacelike_separated: dimension mismatch");

  if (A.dim == 2) {
    // Exact: difference polygon versus the two closed cones.
    std::vector<Vec> diffs;
    diffs.reserve(A.vertices.size() * B.vertices.size());
    for (const auto& a : A.vertices)
      for (const auto& b : B.vertices) {
        double dt = b[0] - a[0], dx = b[1] - a[1];
        diffs.push_back({dt - dx, dt + dx});  // light-cone coordinates (u, v)
      }
    std::vector<Vec> D = detail::hull_2d(std::move(diffs));
    const bool fwd = detail::polygon_meets_quadrant(D, +1);
    const bool bwd = detail::polygon_meets_quadrant(D, -1);
    return (fwd || bwd) ? Separation::NotSeparated : Separation::Separated;
  }

  // d != 2: sufficient certificates only.
  bool all_spacelike = true;
  for (const auto& a : A.vertices)
    for (const auto& b : B.vertices) {
      Vec d(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
      if (!is_spacelike(d)) all_spacelike = false;
    }
  if (!all_spacelike) return Separation::NotSeparated;

  // Separating spatial hyperplane with slope bound: for direction e, the
  // spatial gap must exceed the largest time difference.
  double dt_max = 0.0;
  for (const auto& a : A.vertices)
    for (const auto& b : B.vertices) dt_max = std::max(dt_max, std::abs(b[0] - a[0]));
  const std::size_t ds = A.vertices[0].size() - 1;
  std::vector<Vec> dirs;
  for (std::size_t i = 0; i < ds; ++i) {
    Vec e(ds, 0.0);
    e[i] = 1.0;
    dirs.push_back(e);
  }
  {  // centroid direction
    Vec e(ds, 0.0);
    double n2 = 0.0;
    for (std::size_t i = 0; i < ds; ++i) {
      double ca = 0.0, cb = 0.0;
      for (const auto& a : A.vertices) ca += a[i + 1];
      for (const auto& b : B.vertices) cb += b[i + 1];
      e[i] = cb / static_cast<double>(B.vertices.size()) - ca / static_cast<double>(A.vertices.size());
      n2 += e[i] * e[i];
    }
    if (n2 > 0) {
      for (auto& v : e) v /= std::sqrt(n2);
      dirs.push_back(e);
    }
  }
  for (const auto& e : dirs) {
    auto proj = [&](const Vec& p) {
      double s = 0.0;
      for (std::size_t i = 0; i < ds; ++i) s += e[i] * p[i + 1];
      return s;
    };
    double amax = -1e300, bmin = 1e300;
    for (const auto& a : A.vertices) amax = std::max(amax, proj(a));
    for (const auto& b : B.vertices) bmin = std::min(bmin, proj(b));
    if (bmin - amax > dt_max) return Separation::Separated;
    double bmax = -1e300, amin = 1e300;
    for (const auto& b : B.vertices) bmax = std::max(bmax, proj(b));
    for (const auto& a : A.vertices) amin = std::min(amin, proj(a));
    if (amin - bmax > dt_max) return Separation::Separated;
  }
  return Separation::Unknown;
}

}  // namespace modlab
