#pragma once

// Mass-shell pre-inner products and commutator kernels. The delta function
// 2*pi*delta(k.k - m^2)*theta(k0) is integrated out analytically, leaving the
// spatial-momentum quadrature
//   (f,g)_m = hbar * sum_q [dq/(2pi)]^{d-1} conj(ftilde(w_q,q)) gtilde(w_q,q) / (2 w_q)
// with w_q = sqrt(m^2+|q|^2) and ftilde evaluated by shell slices that are
// exact in the time frequency. Truncation at the grid Nyquist momentum is
// accounted for by a reported tail bound (octave-decay estimate of |f~ g~|).

#include <map>

#include "modlab/keys.hpp"

namespace modlab {

struct MassShell {
  double m = 1.0;
  MassShell() = default;
  explicit MassShell(double mass) : m(mass) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvariantViolation("MassShell: m must be finite and >= 0");
  }
};

// K(f,g) = sum_k w_k prod_l (f,g)_{m_kl}
struct KernelSpec {
  struct Term {
    double weight = 1.0;
    std::vector<double> masses;
  };
  std::vector<Term> terms;

  static KernelSpec single_mass(double m) { return {{Term{1.0, {m}}}}; }
  void validate() const {
    if (terms.empty()) throw InvariantViolation("KernelSpec: needs at least one term");
    for (const auto& t : terms) {
      if (!(t.weight > 0.0)) throw InvariantViolation("KernelSpec: weights must be positive");
      if (t.masses.empty()) throw InvariantViolation("KernelSpec: each term needs a factor");
      for (double m : t.masses) MassShell{m};
    }
  }
  std::vector<double> distinct_masses() const {
    std::vector<double> ms;
    for (const auto& t : terms)
      for (double m : t.masses)
        if (std::find(ms.begin(), ms.end(), m) == ms.end()) ms.push_back(m);
    return ms;
  }
};

struct ChannelSlot {
  LocalFunctional functional;
  Rational alpha{1, 1};
};

// A labelled raising/lowering mode: base function, per-slot local functional
// and exact-rational scaling. |alpha| = sum alpha_j drives the selection rule.
struct Channel {
  ModulationFunction base;
  std::vector<ChannelSlot> slots;

  Rational alpha_total() const {
    if (slots.empty()) throw InvariantViolation("Channel: needs at least one slot");
    Rational s{0, 1};
    for (const auto& sl : slots) {
      if (!sl.alpha.positive()) throw InvariantViolation("Channel: alpha must be positive");
      s = s + sl.alpha;
    }
    return s;
  }
  Channel conjugated() const { return Channel{base.conjugate(), slots}; }
};

inline Channel plain_channel(ModulationFunction f) {
  return Channel{std::move(f), {ChannelSlot{LocalFunctional::identity(), Rational{1, 1}}}};
}

inline std::string channel_key(const Channel& c) {
  std::string out = "ch{" + function_key(c.base);
  for (const auto& s : c.slots) out += "|" + functional_key(s.functional) + "@" + s.alpha.str();
  out.push_back('}');
  return out;
}

struct InnerResult {
  Complex value{0.0, 0.0};
  double tail_bound = 0.0;
  std::vector<std::string> flags;
};

// ---------------------------------------------------------------------------
// Shell slices

// f~(sign*w_q, q) on the spatial momentum grid: spatial axes are transformed
// by FFT, the time axis by an explicit phase sum (exact in the frequency).
inline std::vector<Complex> shell_slice(const GridFunction& f, double m, int sign = +1) {
  const GridSpec& gs = f.spec();
  std::vector<Complex> data = f.data();
  for (int a = 1; a < gs.dim(); ++a) detail::axis_fourier(data, gs, a, true);
  const std::size_t S = gs.spatial_size();
  const int nt = gs.points(0);
  const double dt = gs.spacing(0);
  const double t0 = gs.coord(0, 0);
  std::vector<Complex> out(S);
  parallel_for(S, [&](std::size_t q) {
    // spatial flat index -> omega
    std::size_t rest = q;
    double q2 = 0.0;
    for (int a = gs.dim() - 1; a >= 1; --a) {
      int n = gs.points(a);
      int j = static_cast<int>(rest % static_cast<std::size_t>(n));
      rest /= static_cast<std::size_t>(n);
      double k = gs.momentum(a, j);
      q2 += k * k;
    }
    const double w = std::sqrt(m * m + q2);
    Complex ph = std::polar(1.0, sign * w * t0);
    const Complex step = std::polar(1.0, sign * w * dt);
    Complex acc{0.0, 0.0};
    for (int t = 0; t < nt; ++t) {
      acc += ph * data[static_cast<std::size_t>(t) * S + q];
      ph *= step;
    }
    out[q] = acc * dt;
  });
  return out;
}

inline std::vector<Complex> shell_slice(const ModulationFunction& f, const GridSpec& grid,
                                        double m, int sign = +1) {
  return shell_slice(ensure_grid(f, grid), m, sign);
}

// f~(alpha*(sign*w_q, q)) via per-axis nonuniform DFT; alpha = 1 falls back
// to the FFT path.
inline std::vector<Complex> shell_slice_scaled(const GridFunction& f, double m, double alpha,
                                               int sign = +1) {
  if (alpha == 1.0) return shell_slice(f, m, sign);
  const GridSpec& gs = f.spec();
  std::vector<Complex> data = f.data();
  for (int a = 1; a < gs.dim(); ++a) data = detail::axis_nudft(data, gs, a, alpha);
  const std::size_t S = gs.spatial_size();
  const int nt = gs.points(0);
  const double dt = gs.spacing(0);
  const double t0 = gs.coord(0, 0);
  std::vector<Complex> out(S);
  parallel_for(S, [&](std::size_t q) {
    std::size_t rest = q;
    double q2 = 0.0;
    for (int a = gs.dim() - 1; a >= 1; --a) {
      int n = gs.points(a);
      int j = static_cast<int>(rest % static_cast<std::size_t>(n));
      rest /= static_cast<std::size_t>(n);
      double k = gs.momentum(a, j);
      q2 += k * k;
    }
    const double w = std::sqrt(m * m + q2);
    Complex ph = std::polar(1.0, sign * alpha * w * t0);
    const Complex step = std::polar(1.0, sign * alpha * w * dt);
    Complex acc{0.0, 0.0};
    for (int t = 0; t < nt; ++t) {
      acc += ph * data[static_cast<std::size_t>(t) * S + q];
      ph *= step;
    }
    out[q] = acc * dt;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Shell engine: caches per-(channel, mass) on-shell transforms.

class ShellEngine {
 public:
  ShellEngine(GridSpec grid, double hbar = 1.0) : grid_(std::move(grid)), hbar_(hbar) {
    if (!(hbar_ > 0.0)) throw InvariantViolation("ShellEngine: hbar must be positive");
  }

  const GridSpec& grid() const { return grid_; }
  double hbar() const { return hbar_; }

  // Channel on-shell transform C(w_q, q) = prod_j alpha_j^d hj~(alpha_j*(w_q,q)).
  const std::vector<Complex>& channel_transform(const Channel& c, double mass) {
    const std::string key = channel_key(c) + "#m" + fmt_double(mass);
    if (auto it = slice_cache_.find(key); it != slice_cache_.end()) return it->second;
    std::vector<Complex> prod(grid_.spatial_size(), Complex{1.0, 0.0});
    for (const auto& slot : c.slots) {
      ModulationFunction h = apply_local_functional(c.base, slot.functional, grid_);
      const double a = slot.alpha.value();
      GridFunction hg = ensure_grid(h, grid_);
      std::vector<Complex> sl = shell_slice_scaled(hg, mass, a, +1);
      const double jac = std::pow(a, grid_.dim());
      for (std::size_t i = 0; i < prod.size(); ++i) prod[i] *= jac * sl[i];
    }
    return slice_cache_.emplace(key, std::move(prod)).first->second;
  }

  // Single-shell pre-inner product of two channel transforms.
  InnerResult shell_inner(const Channel& c1, const Channel& c2, double mass) {
    const auto& F = channel_transform(c1, mass);
    const auto& G = channel_transform(c2, mass);
    return quadrature(F, G, mass);
  }

  // K(c1,c2) = sum_k w_k prod_l (c1,c2)_{m_kl}; the selection rule is decided
  // exactly on rationals before any quadrature runs.
  InnerResult kernel_inner(const Channel& c1, const Channel& c2, const KernelSpec& K) {
    K.validate();
    if (c1.alpha_total() != c2.alpha_total())
      return InnerResult{Complex{0.0, 0.0}, 0.0, {"selection_rule_zero"}};
    InnerResult total;
    for (const auto& term : K.terms) {
      Complex prod{term.weight, 0.0};
      double tail_acc = 0.0;  // first-order combination of factor tails
      std::vector<Complex> vals;
      std::vector<double> tails;
      for (double m : term.masses) {
        InnerResult r = shell_inner(c1, c2, m);
        vals.push_back(r.value);
        tails.push_back(r.tail_bound);
        for (const auto& fl : r.flags) total.flags.push_back(fl);
        prod *= r.value;
      }
      for (std::size_t l = 0; l < vals.size(); ++l) {
        double rest = term.weight;
        for (std::size_t j = 0; j < vals.size(); ++j)
          if (j != l) rest *= std::abs(vals[j]);
        tail_acc += tails[l] * rest;
      }
      total.value += prod;
      total.tail_bound += tail_acc;
    }
    return total;
  }

  // [xi_c1, xi_c2] = (c1*, c2) - (c2*, c1).
  InnerResult commutator(const Channel& c1, const Channel& c2, const KernelSpec& K) {
    InnerResult a = kernel_inner(c1.conjugated(), c2, K);
    InnerResult b = kernel_inner(c2.conjugated(), c1, K);
    InnerResult out;
    out.value = a.value - b.value;
    out.tail_bound = a.tail_bound + b.tail_bound;
    out.flags = a.flags;
    out.flags.insert(out.flags.end(), b.flags.begin(), b.flags.end());
    return out;
  }

  double channel_norm(const Channel& c, const KernelSpec& K) {
    return std::sqrt(std::abs(kernel_inner(c, c, K).value));
  }

 private:
  GridSpec grid_;
  double hbar_;
  std::map<std::string, std::vector<Complex>> slice_cache_;

  // omega and octave classification per spatial flat index
  struct ShellGeom {
    std::vector<double> omega;
    std::vector<int> octave;  // 0 = inner, 1 = previous octave, 2 = top octave
    std::vector<double> wmult;  // quadrature weight multiplier (zero-mode rule)
    std::size_t zero_node = static_cast<std::size_t>(-1);
  };
  std::map<std::string, ShellGeom> geom_cache_;

  const ShellGeom& geom(double mass) {
    const std::string key = fmt_double(mass);
    if (auto it = geom_cache_.find(key); it != geom_cache_.end()) return it->second;
    ShellGeom g;
    const std::size_t S = grid_.spatial_size();
    g.omega.resize(S);
    g.octave.assign(S, 0);
    g.wmult.assign(S, 1.0);
    std::vector<int> idx(static_cast<std::size_t>(grid_.dim() - 1));
    for (std::size_t q = 0; q < S; ++q) {
      std::size_t rest = q;
      double q2 = 0.0;
      bool zero = true;
      int oct = 0;
      for (int a = grid_.dim() - 1; a >= 1; --a) {
        int n = grid_.points(a);
        int j = static_cast<int>(rest % static_cast<std::size_t>(n));
        rest /= static_cast<std::size_t>(n);
        double k = grid_.momentum(a, j);
        q2 += k * k;
        if (j != n / 2) zero = false;
        double ak = std::abs(k), ny = grid_.nyquist(a);
        if (ak >= 0.5 * ny)
          oct = std::max(oct, 2);
        else if (ak >= 0.25 * ny)
          oct = std::max(oct, 1);
      }
      g.omega[q] = std::sqrt(mass * mass + q2);
      g.octave[q] = oct;
      if (zero) g.zero_node = q;
    }
    if (mass == 0.0 && g.zero_node != static_cast<std::size_t>(-1)) {
      // Principal-value style rule: skip the singular node, halve its axis
      // neighbours. Massless kernels are only valid when the numerator
      // vanishes there; kernel_inner checks that before using the weights.
      g.wmult[g.zero_node] = 0.0;
      std::size_t stride = 1;
      for (int a = grid_.dim() - 1; a >= 1; --a) {
        const std::size_t n = static_cast<std::size_t>(grid_.points(a));
        const std::size_t half = n / 2;
        const std::size_t base = g.zero_node;
        if (half + 1 < n) g.wmult[base + stride] = 0.5;
        if (half >= 1) g.wmult[base - stride] = 0.5;
        stride *= n;
      }
    }
    return geom_cache_.emplace(key, std::move(g)).first->second;
  }

  InnerResult quadrature(const std::vector<Complex>& F, const std::vector<Complex>& G,
                         double mass) {
    const ShellGeom& gm = geom(mass);
    double measure = 1.0;
    for (int a = 1; a < grid_.dim(); ++a)
      measure *= grid_.momentum_spacing(a) / (2.0 * std::numbers::pi);
    InnerResult out;
    if (mass == 0.0 && gm.zero_node != static_cast<std::size_t>(-1)) {
      double peak = 0.0;
      for (std::size_t q = 0; q < F.size(); ++q)
        peak = std::max(peak, std::abs(std::conj(F[q]) * G[q]));
      const double at_zero = std::abs(std::conj(F[gm.zero_node]) * G[gm.zero_node]);
      if (at_zero > 1e-10 * peak)
        throw QuadratureDivergence(
            "massless kernel: integrand is singular at q=0 with non-vanishing numerator");
      out.flags.push_back("massless_zero_mode_skipped");
    }
    Complex acc{0.0, 0.0};
    double tail_top = 0.0, tail_prev = 0.0;
    for (std::size_t q = 0; q < F.size(); ++q) {
      const double w = gm.wmult[q];
      if (w == 0.0) continue;
      const Complex term = std::conj(F[q]) * G[q] / (2.0 * gm.omega[q]) * (w * measure);
      acc += term;
      if (gm.octave[q] == 2)
        tail_top += std::abs(term);
      else if (gm.octave[q] == 1)
        tail_prev += std::abs(term);
    }
    out.value = hbar_ * acc;
    double ratio = tail_prev > 0.0 ? std::min(tail_top / tail_prev, 0.9) : (tail_top > 0.0 ? 0.9 : 0.0);
    out.tail_bound = hbar_ * tail_top * (tail_prev > 0.0 ? ratio / (1.0 - ratio) : 1.0);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Free-function API

inline InnerResult mass_shell_inner_detailed(const ModulationFunction& f,
                                             const ModulationFunction& g, double m,
                                             const GridSpec& grid, double hbar = 1.0) {
  ShellEngine eng(grid, hbar);
  return eng.shell_inner(plain_channel(f), plain_channel(g), m);
}

inline Complex mass_shell_inner(const ModulationFunction& f, const ModulationFunction& g,
                                double m, const GridSpec& grid, double hbar = 1.0) {
  return mass_shell_inner_detailed(f, g, m, grid, hbar).value;
}

inline InnerResult kernel_eval_detailed(const KernelSpec& K, const ModulationFunction& f,
                                        const ModulationFunction& g, const GridSpec& grid,
                                        double hbar = 1.0) {
  ShellEngine eng(grid, hbar);
  return eng.kernel_inner(plain_channel(f), plain_channel(g), K);
}

inline Complex kernel_eval(const KernelSpec& K, const ModulationFunction& f,
                           const ModulationFunction& g, const GridSpec& grid, double hbar = 1.0) {
  return kernel_eval_detailed(K, f, g, grid, hbar).value;
}

inline InnerResult channel_inner(const Channel& c1, const Channel& c2, const KernelSpec& K,
                                 const GridSpec& grid, double hbar = 1.0) {
  ShellEngine eng(grid, hbar);
  return eng.kernel_inner(c1, c2, K);
}

inline InnerResult field_commutator(const Channel& c1, const Channel& c2, const KernelSpec& K,
                                    const GridSpec& grid, double hbar = 1.0) {
  ShellEngine eng(grid, hbar);
  return eng.commutator(c1, c2, K);
}

struct GramReport {
  int n = 0;
  std::vector<Complex> matrix;  // row-major n x n, G_ij = (c_i, c_j)_K
  double min_eigenvalue = 0.0;
  double trace = 0.0;
  double tolerance = 0.0;
  bool psd = false;
};

}  // namespace modlab
