#pragma once

// Uniform Minkowski-space grids and complex grid functions. Axis 0 is time.
// Position nodes are x_i = -L + i*(2L/N); the conjugate momentum grid is
// k_j = (j - N/2)*pi/L, so both sides share the same power-of-two layout.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <ostream>

#include "modlab/core.hpp"

namespace modlab {

// Axis-aligned box; the support bookkeeping for every grid object.
struct Box {
  Vec lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool empty() const { return lo.empty(); }

  bool contains(const Box& inner) const {
    for (std::size_t a = 0; a < lo.size(); ++a)
      if (inner.lo[a] < lo[a] || inner.hi[a] > hi[a]) return false;
    return true;
  }
  Box minkowski_sum(const Box& o) const {
    Box out = *this;
    for (std::size_t a = 0; a < lo.size(); ++a) {
      out.lo[a] += o.lo[a];
      out.hi[a] += o.hi[a];
    }
    return out;
  }
  Box scaled(double s) const {
    Box out = *this;
    for (std::size_t a = 0; a < lo.size(); ++a) {
      out.lo[a] = lo[a] * s;
      out.hi[a] = hi[a] * s;
      if (out.lo[a] > out.hi[a]) std::swap(out.lo[a], out.hi[a]);
    }
    return out;
  }
  Box translated(const Vec& shift) const {
    Box out = *this;
    for (std::size_t a = 0; a < lo.size(); ++a) {
      out.lo[a] += shift[a];
      out.hi[a] += shift[a];
    }
    return out;
  }
  Box united(const Box& o) const {
    if (empty()) return o;
    if (o.empty()) return *this;
    Box out = *this;
    for (std::size_t a = 0; a < lo.size(); ++a) {
      out.lo[a] = std::min(lo[a], o.lo[a]);
      out.hi[a] = std::max(hi[a], o.hi[a]);
    }
    return out;
  }
  // Largest |dt| minus smallest spatial gap decides box-level causality; see
  // hull.hpp for the exact polygon test this over-approximates.
  static bool spacelike_separated(const Box& a, const Box& b) {
    double dt_max = std::max(b.hi[0] - a.lo[0], a.hi[0] - b.lo[0]);
    dt_max = std::max(dt_max, 0.0);
    double gap2 = 0.0;
    for (std::size_t ax = 1; ax < a.lo.size(); ++ax) {
      double g = std::max(std::max(b.lo[ax] - a.hi[ax], a.lo[ax] - b.hi[ax]), 0.0);
      gap2 += g * g;
    }
    return gap2 > dt_max * dt_max;
  }
};

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(Vec half_width, std::vector<int> points)
      : half_width_(std::move(half_width)), points_(std::move(points)) {
    if (half_width_.size() != points_.size() || half_width_.empty())
      throw InvariantViolation("GridSpec: axis count mismatch");
    for (std::size_t a = 0; a < points_.size(); ++a) {
      if (half_width_[a] <= 0) throw InvariantViolation("GridSpec: half width must be positive");
      if (!is_pow2(points_[a]) || points_[a] < 2)
        throw InvariantViolation("GridSpec: points per axis must be a power of two >= 2");
    }
  }
  static GridSpec uniform(int dim, double half_width, int points) {
    return GridSpec(Vec(static_cast<std::size_t>(dim), half_width),
                    std::vector<int>(static_cast<std::size_t>(dim), points));
  }

  int dim() const { return static_cast<int>(points_.size()); }
  int points(int axis) const { return points_[static_cast<std::size_t>(axis)]; }
  double half_width(int axis) const { return half_width_[static_cast<std::size_t>(axis)]; }
  double spacing(int axis) const { return 2.0 * half_width(axis) / points(axis); }
  double momentum_spacing(int axis) const { return std::numbers::pi / half_width(axis); }
  double nyquist(int axis) const { return std::numbers::pi / spacing(axis); }
  double coord(int axis, int i) const { return -half_width(axis) + i * spacing(axis); }
  double momentum(int axis, int j) const { return (j - points(axis) / 2) * momentum_spacing(axis); }

  std::size_t size() const {
    std::size_t n = 1;
    for (int p : points_) n *= static_cast<std::size_t>(p);
    return n;
  }
  std::size_t spatial_size() const { return size() / static_cast<std::size_t>(points_[0]); }

  Box box() const {
    Box b;
    b.lo = half_width_;
    b.hi = half_width_;
    for (auto& v : b.lo) v = -v;
    return b;
  }
  bool operator==(const GridSpec& o) const {
    return half_width_ == o.half_width_ && points_ == o.points_;
  }

 private:
  Vec half_width_;
  std::vector<int> points_;
};

class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(GridSpec spec, std::vector<Complex> samples, Box support)
      : spec_(std::move(spec)), data_(std::move(samples)), support_(std::move(support)) {
    if (data_.size() != spec_.size()) throw InvariantViolation("GridFunction: sample count");
    if (!spec_.box().contains(support_))
      throw InvariantViolation("GridFunction: support box exceeds grid box");
  }

  const GridSpec& spec() const { return spec_; }
  const std::vector<Complex>& data() const { return data_; }
  std::vector<Complex>& data() { return data_; }
  const Box& support() const { return support_; }
  void set_support(Box b) { support_ = std::move(b); }

  // Row-major flat index, axis 0 slowest.
  std::size_t flat(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < spec_.dim(); ++a)
      f = f * static_cast<std::size_t>(spec_.points(a)) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
    return f;
  }
  void unflatten(std::size_t f, std::vector<int>& idx) const {
    idx.resize(static_cast<std::size_t>(spec_.dim()));
    for (int a = spec_.dim() - 1; a >= 0; --a) {
      int n = spec_.points(a);
      idx[static_cast<std::size_t>(a)] = static_cast<int>(f % static_cast<std::size_t>(n));
      f /= static_cast<std::size_t>(n);
    }
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  // Tight bounding box of samples with |f| > eps_rel * max|f|.
  Box measured_support(double eps_rel) const {
    double cut = eps_rel * max_abs();
    int d = spec_.dim();
    std::vector<int> lo(static_cast<std::size_t>(d), 0), hi(static_cast<std::size_t>(d), -1);
    std::vector<int> idx;
    bool any = false;
    for (std::size_t f = 0; f < data_.size(); ++f) {
      if (std::abs(data_[f]) <= cut) continue;
      unflatten(f, idx);
      if (!any) {
        for (int a = 0; a < d; ++a) lo[static_cast<std::size_t>(a)] = hi[static_cast<std::size_t>(a)] = idx[static_cast<std::size_t>(a)];
        any = true;
      } else {
        for (int a = 0; a < d; ++a) {
          lo[static_cast<std::size_t>(a)] = std::min(lo[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(a)]);
          hi[static_cast<std::size_t>(a)] = std::max(hi[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(a)]);
        }
      }
    }
    Box b;
    b.lo.resize(static_cast<std::size_t>(d));
    b.hi.resize(static_cast<std::size_t>(d));
    if (!any) {
      for (int a = 0; a < d; ++a) b.lo[static_cast<std::size_t>(a)] = b.hi[static_cast<std::size_t>(a)] = 0.0;
      return b;
    }
    for (int a = 0; a < d; ++a) {
      b.lo[static_cast<std::size_t>(a)] = spec_.coord(a, lo[static_cast<std::size_t>(a)]);
      b.hi[static_cast<std::size_t>(a)] = spec_.coord(a, hi[static_cast<std::size_t>(a)]);
    }
    return b;
  }

 private:
  GridSpec spec_;
  std::vector<Complex> data_;
  Box support_;
};

// ---------------------------------------------------------------------------
// Flat binary container: magic "MODF", version u32, d, N per axis, L per axis
// as 64-bit floats; payload row-major complex128, little-endian.

namespace detail {
template <class T>
void write_le(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T read_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ParseError("MODF: truncated file");
  return v;
}
}  // namespace detail

inline void save_modf(const GridFunction& f, std::ostream& os) {
  os.write("MODF", 4);
  detail::write_le<std::uint32_t>(os, 1u);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.spec().dim()));
  for (int a = 0; a < f.spec().dim(); ++a)
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.spec().points(a)));
  for (int a = 0; a < f.spec().dim(); ++a) detail::write_le<double>(os, f.spec().half_width(a));
  for (const auto& v : f.data()) {
    detail::write_le<double>(os, v.real());
    detail::write_le<double>(os, v.imag());
  }
}

inline void save_modf(const GridFunction& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open for write: " + path);
  save_modf(f, os);
}

inline GridFunction load_modf(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MODF", 4) != 0) throw ParseError("MODF: bad magic");
  auto version = detail::read_le<std::uint32_t>(is);
  if (version != 1u) throw ParseError("MODF: unsupported version");
  auto d = detail::read_le<std::uint32_t>(is);
  if (d == 0 || d > 8) throw ParseError("MODF: bad dimension");
  std::vector<int> pts(d);
  for (auto& p : pts) p = static_cast<int>(detail::read_le<std::uint32_t>(is));
  Vec hw(d);
  for (auto& w : hw) w = detail::read_le<double>(is);
  GridSpec spec(hw, pts);
  std::vector<Complex> data(spec.size());
  for (auto& v : data) {
    double re = detail::read_le<double>(is);
    double im = detail::read_le<double>(is);
    v = Complex(re, im);
  }
  GridFunction out(spec, std::move(data), spec.box());
  out.set_support(out.measured_support(1e-10));
  return out;
}

inline GridFunction load_modf(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open for read: " + path);
  return load_modf(is);
}

// CSV export of a 1+1D grid function: columns t,x,re,im.
inline void export_csv(const GridFunction& f, std::ostream& os) {
  if (f.spec().dim() != 2) throw UnsupportedDimension("CSV export is for 1+1D grids");
  os << "t,x,re,im\n";
  const int nt = f.spec().points(0), nx = f.spec().points(1);
  for (int it = 0; it < nt; ++it)
    for (int ix = 0; ix < nx; ++ix) {
      const Complex v = f.data()[static_cast<std::size_t>(it) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix)];
      os << fmt_double(f.spec().coord(0, it)) << ',' << fmt_double(f.spec().coord(1, ix)) << ','
         << fmt_double(v.real()) << ',' << fmt_double(v.imag()) << '\n';
    }
}

}  // namespace modlab
