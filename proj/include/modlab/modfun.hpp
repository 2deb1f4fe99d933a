#pragma once

// Modulation functions: the smearing functions labelling every field
// operator. Analytic variants (Gaussian packets, smooth compact bumps) have
// closed-form evaluation, translation, scaling and conjugation; grid-backed
// functions carry sampled data; formal sums give complex-linear combinations.
//
// Carrier convention: a carrier wavevector p multiplies the envelope by
// e^{-i p.x} (Minkowski dot), so the transform of the packet concentrates at
// k = p and positive-frequency packets have p0 > 0.

#include <functional>
#include <memory>
#include <variant>

#include "modlab/grid.hpp"

namespace modlab {

class ModulationFunction;

struct GaussianPacket {
  Complex amplitude{1.0, 0.0};
  Vec center;
  Vec widths;   // per-axis sigma, all positive
  Vec carrier;  // wavevector p

  double envelope(const Vec& x) const {
    double q = 0.0;
    for (std::size_t a = 0; a < center.size(); ++a) {
      double u = (x[a] - center[a]) / widths[a];
      q += u * u;
    }
    return std::exp(-0.5 * q);
  }
};

// C-infinity compact support profile exp(-1/(1-r^2)) inside the ellipsoid.
struct BumpFunction {
  Complex amplitude{1.0, 0.0};
  Vec center;
  Vec radii;
  Vec carrier;

  double envelope(const Vec& x) const {
    double r2 = 0.0;
    for (std::size_t a = 0; a < center.size(); ++a) {
      double u = (x[a] - center[a]) / radii[a];
      r2 += u * u;
    }
    if (r2 >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r2));
  }
};

struct GridBacked {
  std::shared_ptr<const GridFunction> grid;
};

struct FormalSum {
  struct Term {
    Complex weight;
    std::shared_ptr<const ModulationFunction> fn;
  };
  std::vector<Term> terms;
};

class ModulationFunction {
 public:
  using Node = std::variant<GaussianPacket, BumpFunction, GridBacked, FormalSum>;

  ModulationFunction() : node_(GaussianPacket{}) {}
  ModulationFunction(GaussianPacket g) : node_(std::move(g)) {}
  ModulationFunction(BumpFunction b) : node_(std::move(b)) {}
  ModulationFunction(GridBacked g) : node_(std::move(g)) {}
  ModulationFunction(FormalSum s) : node_(std::move(s)) {}
  static ModulationFunction from_grid(GridFunction g) {
    return ModulationFunction(GridBacked{std::make_shared<GridFunction>(std::move(g))});
  }

  const Node& node() const { return node_; }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&node_);
  }
  int dim() const;

  Complex evaluate(const Vec& x) const;
  ModulationFunction conjugate() const;
  // f_a(x) = f(x+a); exact for analytic variants (grid path in spectral.hpp).
  ModulationFunction translate_analytic(const Vec& a) const;
  // f^(alpha)(x) = f(x/alpha); exact for analytic variants.
  ModulationFunction scale_analytic(double alpha) const;

  bool is_analytic() const;
  // Box with |f| > eps_rel * (local peak); exact for bumps, Gaussian tails cut
  // at the threshold radius, conservative union for sums.
  Box effective_support(double eps_rel) const;
  double max_carrier(int axis) const;

 private:
  Node node_;
};

namespace detail {
inline Complex carrier_phase(const Vec& p, const Vec& x) {
  if (p.empty()) return {1.0, 0.0};
  return std::polar(1.0, -minkowski_dot(p, x));
}
inline Complex interpolate(const GridFunction& g, const Vec& x);
}  // namespace detail

inline int ModulationFunction::dim() const {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianPacket> || std::is_same_v<T, BumpFunction>)
          return static_cast<int>(n.center.size());
        else if constexpr (std::is_same_v<T, GridBacked>)
          return n.grid->spec().dim();
        else {
          if (n.terms.empty()) throw InvariantViolation("FormalSum: empty sum has no dimension");
          return n.terms.front().fn->dim();
        }
      },
      node_);
}

inline Complex ModulationFunction::evaluate(const Vec& x) const {
  return std::visit(
      [&](const auto& n) -> Complex {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianPacket> || std::is_same_v<T, BumpFunction>) {
          double env = n.envelope(x);
          if (env == 0.0) return {0.0, 0.0};
          return n.amplitude * env * detail::carrier_phase(n.carrier, x);
        } else if constexpr (std::is_same_v<T, GridBacked>) {
          return detail::interpolate(*n.grid, x);
        } else {
          Complex s{0.0, 0.0};
          for (const auto& t : n.terms) s += t.weight * t.fn->evaluate(x);
          return s;
        }
      },
      node_);
}

inline ModulationFunction ModulationFunction::conjugate() const {
  return std::visit(
      [&](const auto& n) -> ModulationFunction {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianPacket> || std::is_same_v<T, BumpFunction>) {
          T out = n;
          out.amplitude = std::conj(n.amplitude);
          for (auto& p : out.carrier) p = -p;
          return ModulationFunction(out);
        } else if constexpr (std::is_same_v<T, GridBacked>) {
          GridFunction g = *n.grid;
          for (auto& v : g.data()) v = std::conj(v);
          return from_grid(std::move(g));
        } else {
          FormalSum out;
          out.terms.reserve(n.terms.size());
          for (const auto& t : n.terms)
            out.terms.push_back({std::conj(t.weight),
                                 std::make_shared<ModulationFunction>(t.fn->conjugate())});
          return ModulationFunction(std::move(out));
        }
      },
      node_);
}

inline ModulationFunction ModulationFunction::translate_analytic(const Vec& a) const {
  return std::visit(
      [&](const auto& n) -> ModulationFunction {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianPacket> || std::is_same_v<T, BumpFunction>) {
          T out = n;
          for (std::size_t i = 0; i < a.size(); ++i) out.center[i] = n.center[i] - a[i];
          if (!n.carrier.empty()) out.amplitude *= std::polar(1.0, -minkowski_dot(n.carrier, a));
          return ModulationFunction(out);
        } else if constexpr (std::is_same_v<T, FormalSum>) {
          FormalSum out;
          for (const auto& t : n.terms)
            out.terms.push_back(
                {t.weight, std::make_shared<ModulationFunction>(t.fn->translate_analytic(a))});
          return ModulationFunction(std::move(out));
        } else {
          throw Error("translate_analytic: grid-backed functions use spectral translation");
        }
      },
      node_);
}

inline ModulationFunction ModulationFunction::scale_analytic(double alpha) const {
  if (!(alpha > 0.0)) throw InvariantViolation("scale: alpha must be positive");
  return std::visit(
      [&](const auto& n) -> ModulationFunction {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianPacket> || std::is_same_v<T, BumpFunction>) {
          T out = n;
          for (std::size_t i = 0; i < n.center.size(); ++i) {
            out.center[i] = n.center[i] * alpha;
            if constexpr (std::is_same_v<T, GaussianPacket>)
              out.widths[i] = n.widths[i] * alpha;
            else
              out.radii[i] = n.radii[i] * alpha;
            if (!out.carrier.empty()) out.carrier[i] = n.carrier[i] / alpha;
          }
          return ModulationFunction(out);
        } else if constexpr (std::is_same_v<T, FormalSum>) {
          FormalSum out;
          for (const auto& t : n.terms)
            out.terms.push_back(
                {t.weight, std::make_shared<ModulationFunction>(t.fn->scale_analytic(alpha))});
          return ModulationFunction(std::move(out));
        } else {
          throw Error("scale_analytic: grid-backed functions use spectral scaling");
        }
      },
      node_);
}

inline bool ModulationFunction::is_analytic() const {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GridBacked>)
          return false;
        else if constexpr (std::is_same_v<T, FormalSum>) {
          for (const auto& t : n.terms)
            if (!t.fn->is_analytic()) return false;
          return true;
        } else
          return true;
      },
      node_);
}

inline Box ModulationFunction::effective_support(double eps_rel) const {
  return std::visit(
      [&](const auto& n) -> Box {
        using T = std::decay_t<decltype(n)>;
        Box b;
        if constexpr (std::is_same_v<T, GaussianPacket>) {
          double r = std::sqrt(-2.0 * std::log(eps_rel));
          b.lo = n.center;
          b.hi = n.center;
          for (std::size_t a = 0; a < n.center.size(); ++a) {
            b.lo[a] -= r * n.widths[a];
            b.hi[a] += r * n.widths[a];
          }
          return b;
        } else if constexpr (std::is_same_v<T, BumpFunction>) {
          b.lo = n.center;
          b.hi = n.center;
          for (std::size_t a = 0; a < n.center.size(); ++a) {
            b.lo[a] -= n.radii[a];
            b.hi[a] += n.radii[a];
          }
          return b;
        } else if constexpr (std::is_same_v<T, GridBacked>) {
          return n.grid->support();
        } else {
          Box u;
          for (const auto& t : n.terms) {
            if (std::abs(t.weight) == 0.0) continue;
            u = u.united(t.fn->effective_support(eps_rel));
          }
          if (u.empty()) {
            // identically zero sum: degenerate support at the origin
            if (n.terms.empty()) throw EmptySupport("FormalSum: empty sum");
            const int d = n.terms.front().fn->dim();
            u.lo.assign(static_cast<std::size_t>(d), 0.0);
            u.hi.assign(static_cast<std::size_t>(d), 0.0);
          }
          return u;
        }
      },
      node_);
}

inline double ModulationFunction::max_carrier(int axis) const {
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianPacket> || std::is_same_v<T, BumpFunction>) {
          return n.carrier.empty() ? 0.0 : std::abs(n.carrier[static_cast<std::size_t>(axis)]);
        } else if constexpr (std::is_same_v<T, GridBacked>) {
          return 0.0;  // grid content is judged spectrally, not by declared carrier
        } else {
          double m = 0.0;
          for (const auto& t : n.terms) m = std::max(m, t.fn->max_carrier(axis));
          return m;
        }
      },
      node_);
}

namespace detail {

// Multilinear interpolation, zero outside the grid box.
inline Complex interpolate(const GridFunction& g, const Vec& x) {
  const GridSpec& s = g.spec();
  const int d = s.dim();
  std::vector<int> base(static_cast<std::size_t>(d));
  Vec frac(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    double u = (x[static_cast<std::size_t>(a)] + s.half_width(a)) / s.spacing(a);
    if (u < 0.0 || u > s.points(a) - 1) return {0.0, 0.0};
    double fl = std::floor(u);
    int i = static_cast<int>(fl);
    if (i >= s.points(a) - 1) {
      i = s.points(a) - 2;
      fl = i;
    }
    base[static_cast<std::size_t>(a)] = i;
    frac[static_cast<std::size_t>(a)] = u - fl;
  }
  Complex acc{0.0, 0.0};
  const int corners = 1 << d;
  std::vector<int> idx(static_cast<std::size_t>(d));
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      const bool hi = (c >> a) & 1;
      idx[static_cast<std::size_t>(a)] = base[static_cast<std::size_t>(a)] + (hi ? 1 : 0);
      w *= hi ? frac[static_cast<std::size_t>(a)] : 1.0 - frac[static_cast<std::size_t>(a)];
    }
    if (w != 0.0) acc += w * g.data()[g.flat(idx)];
  }
  return acc;
}

}  // namespace detail

// Convenience builders.
inline ModulationFunction gaussian(Complex amplitude, Vec center, Vec widths, Vec carrier) {
  GaussianPacket g;
  g.amplitude = amplitude;
  g.center = std::move(center);
  g.widths = std::move(widths);
  g.carrier = std::move(carrier);
  for (double w : g.widths)
    if (!(w > 0)) throw InvariantViolation("GaussianPacket: widths must be positive");
  return ModulationFunction(std::move(g));
}

inline ModulationFunction bump(Complex amplitude, Vec center, Vec radii, Vec carrier) {
  BumpFunction b;
  b.amplitude = amplitude;
  b.center = std::move(center);
  b.radii = std::move(radii);
  b.carrier = std::move(carrier);
  for (double r : b.radii)
    if (!(r > 0)) throw InvariantViolation("BumpFunction: radii must be positive");
  return ModulationFunction(std::move(b));
}

inline ModulationFunction formal_sum(std::vector<std::pair<Complex, ModulationFunction>> terms) {
  FormalSum s;
  for (auto& [w, f] : terms)
    s.terms.push_back({w, std::make_shared<ModulationFunction>(std::move(f))});
  return ModulationFunction(std::move(s));
}

// A real cosine packet: (e^{-ip.x} + e^{+ip.x})/2 times the envelope.
inline ModulationFunction cosine_gaussian(double amplitude, Vec center, Vec widths, Vec carrier) {
  Vec neg = carrier;
  for (auto& v : neg) v = -v;
  return formal_sum({{Complex(0.5 * amplitude, 0.0), gaussian({1, 0}, center, widths, carrier)},
                     {Complex(0.5 * amplitude, 0.0), gaussian({1, 0}, center, widths, neg)}});
}

}  // namespace modlab
