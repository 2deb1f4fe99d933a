#pragma once

// Grid-side operations on modulation functions: sampling, the Fourier pair,
// mass-shell slices (exact in the time frequency), convolution powers,
// rational scaling, local nonlinear functionals and the Klein-Gordon
// multiplier. Aliasing guards: eps_alias = 1e-10 relative for support
// detection, eta_alias = 1e-6 spectral energy fraction in the top octave.

#include "modlab/fft.hpp"
#include "modlab/modfun.hpp"

namespace modlab {

inline constexpr double kEpsAlias = 1e-10;
inline constexpr double kEtaAlias = 1e-6;

struct SpectralFunction {
  GridSpec grid;  // momentum-side layout mirrors the position grid
  std::vector<Complex> data;
  std::string provenance;

  std::size_t flat(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < grid.dim(); ++a)
      f = f * static_cast<std::size_t>(grid.points(a)) +
          static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
    return f;
  }
};

// ---------------------------------------------------------------------------
// Transforms

inline SpectralFunction fourier_transform(const GridFunction& f, std::string provenance = {}) {
  SpectralFunction out{f.spec(), f.data(), std::move(provenance)};
  for (int a = 0; a < f.spec().dim(); ++a) detail::axis_fourier(out.data, f.spec(), a, true);
  return out;
}

inline GridFunction inverse_fourier(const SpectralFunction& F, Box support) {
  std::vector<Complex> data = F.data;
  for (int a = 0; a < F.grid.dim(); ++a) detail::axis_fourier(data, F.grid, a, false);
  return GridFunction(F.grid, std::move(data), std::move(support));
}

// Fraction of spectral energy carried by modes in the top octave of any axis
// (|k_axis| >= nyquist/2).
inline double top_octave_energy_fraction(const SpectralFunction& F) {
  const GridSpec& g = F.grid;
  double total = 0.0, top = 0.0;
  std::vector<int> idx;
  GridFunction shape(g, std::vector<Complex>(g.size()), g.box());  // index helper
  for (std::size_t f = 0; f < F.data.size(); ++f) {
    double e = std::norm(F.data[f]);
    total += e;
    shape.unflatten(f, idx);
    for (int a = 0; a < g.dim(); ++a) {
      if (std::abs(g.momentum(a, idx[static_cast<std::size_t>(a)])) >= 0.5 * g.nyquist(a)) {
        top += e;
        break;
      }
    }
  }
  return total > 0.0 ? top / total : 0.0;
}

// Largest |k_axis| with spectral amplitude above eps_rel * peak.
inline double max_resolved_momentum(const SpectralFunction& F, int axis, double eps_rel = kEpsAlias) {
  const GridSpec& g = F.grid;
  double peak = 0.0;
  for (const auto& v : F.data) peak = std::max(peak, std::abs(v));
  double cut = eps_rel * peak;
  double kmax = 0.0;
  GridFunction shape(g, std::vector<Complex>(g.size()), g.box());
  std::vector<int> idx;
  for (std::size_t f = 0; f < F.data.size(); ++f) {
    if (std::abs(F.data[f]) <= cut) continue;
    shape.unflatten(f, idx);
    kmax = std::max(kmax, std::abs(g.momentum(axis, idx[static_cast<std::size_t>(axis)])));
  }
  return kmax;
}

// ---------------------------------------------------------------------------
// Sampling

inline GridFunction sample_to_grid(const ModulationFunction& f, const GridSpec& grid,
                                   bool aliasing_check = true) {
  if (f.dim() != grid.dim())
    throw InvariantViolation("sample_to_grid: dimension mismatch");
  const Box eff = f.effective_support(kEpsAlias);
  if (!grid.box().contains(eff))
    throw SupportOverflow("sample_to_grid: effective support exceeds the grid box");
  for (int a = 0; a < grid.dim(); ++a)
    if (f.max_carrier(a) > grid.nyquist(a))
      throw AliasingError("sample_to_grid: carrier wavevector above the Nyquist momentum");

  std::vector<Complex> data(grid.size());
  const int d = grid.dim();
  const std::size_t rows = grid.size() / static_cast<std::size_t>(grid.points(d - 1));
  const std::size_t ncols = static_cast<std::size_t>(grid.points(d - 1));
  parallel_for(rows, [&](std::size_t row) {
    std::vector<int> idx(static_cast<std::size_t>(d));
    std::size_t rest = row;
    for (int a = d - 2; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(rest % static_cast<std::size_t>(grid.points(a)));
      rest /= static_cast<std::size_t>(grid.points(a));
    }
    Vec x(static_cast<std::size_t>(d));
    for (int a = 0; a < d - 1; ++a) x[static_cast<std::size_t>(a)] = grid.coord(a, idx[static_cast<std::size_t>(a)]);
    for (std::size_t c = 0; c < ncols; ++c) {
      x[static_cast<std::size_t>(d - 1)] = grid.coord(d - 1, static_cast<int>(c));
      data[row * ncols + c] = f.evaluate(x);
    }
  });

  GridFunction out(grid, std::move(data), grid.box());
  out.set_support(out.measured_support(kEpsAlias));
  if (aliasing_check) {
    double frac = top_octave_energy_fraction(fourier_transform(out));
    if (frac > kEtaAlias)
      throw AliasingError("sample_to_grid: top-octave spectral energy fraction " +
                          fmt_double(frac) + " exceeds " + fmt_double(kEtaAlias));
  }
  return out;
}

inline GridFunction from_callable(const GridSpec& grid,
                                  const std::function<Complex(const Vec&)>& fn) {
  std::vector<Complex> data(grid.size());
  const int d = grid.dim();
  GridFunction shape(grid, std::vector<Complex>(grid.size()), grid.box());
  std::vector<int> idx;
  Vec x(static_cast<std::size_t>(d));
  for (std::size_t f = 0; f < data.size(); ++f) {
    shape.unflatten(f, idx);
    for (int a = 0; a < d; ++a) x[static_cast<std::size_t>(a)] = grid.coord(a, idx[static_cast<std::size_t>(a)]);
    data[f] = fn(x);
  }
  GridFunction out(grid, std::move(data), grid.box());
  out.set_support(out.measured_support(kEpsAlias));
  return out;
}

inline GridFunction ensure_grid(const ModulationFunction& f, const GridSpec& grid) {
  if (const auto* g = f.get_if<GridBacked>()) {
    if (g->grid->spec() == grid) return *g->grid;
  }
  return sample_to_grid(f, grid);
}

// ---------------------------------------------------------------------------
// Translation and conjugation (grid functions go through the spectral side)

inline ModulationFunction translate(const ModulationFunction& f, const Vec& a,
                                    const GridSpec* grid_hint = nullptr) {
  if (f.is_analytic()) {
    auto out = f.translate_analytic(a);
    if (grid_hint && !grid_hint->box().contains(out.effective_support(kEpsAlias)))
      throw SupportOverflow("translate: shifted support leaves the grid box");
    return out;
  }
  const auto* gb = f.get_if<GridBacked>();
  if (!gb) throw Error("translate: unsupported modulation function variant");
  const GridFunction& g = *gb->grid;
  Box moved = g.support().translated([&] {
    Vec s = a;
    for (auto& v : s) v = -v;
    return s;
  }());
  if (!g.spec().box().contains(moved))
    throw SupportOverflow("translate: shifted support leaves the grid box");
  SpectralFunction F = fourier_transform(g);
  GridFunction shape(F.grid, std::vector<Complex>(F.grid.size()), F.grid.box());
  std::vector<int> idx;
  Vec k(static_cast<std::size_t>(F.grid.dim()));
  for (std::size_t i = 0; i < F.data.size(); ++i) {
    shape.unflatten(i, idx);
    for (int ax = 0; ax < F.grid.dim(); ++ax)
      k[static_cast<std::size_t>(ax)] = F.grid.momentum(ax, idx[static_cast<std::size_t>(ax)]);
    F.data[i] *= std::polar(1.0, -minkowski_dot(k, a));
  }
  return ModulationFunction::from_grid(inverse_fourier(F, moved));
}

inline ModulationFunction conjugate(const ModulationFunction& f) { return f.conjugate(); }

// ---------------------------------------------------------------------------
// Convolution powers: transform, raise to the n-th power, transform back.
// The declared support is the n-fold Minkowski sum of the input support.
// When that box pokes out of the grid the result is accepted only if the
// boundary planes carry no visible mass (tails of non-compact inputs inflate
// the box without actual wraparound); real circular wrap is rejected.

namespace detail {

inline double boundary_plane_ratio(const GridFunction& f) {
  const GridSpec& gs = f.spec();
  const double peak = f.max_abs();
  if (peak == 0.0) return 0.0;
  double edge = 0.0;
  std::vector<int> idx;
  for (std::size_t i = 0; i < f.data().size(); ++i) {
    f.unflatten(i, idx);
    bool on_edge = false;
    for (int a = 0; a < gs.dim(); ++a)
      if (idx[static_cast<std::size_t>(a)] == 0 ||
          idx[static_cast<std::size_t>(a)] == gs.points(a) - 1)
        on_edge = true;
    if (on_edge) edge = std::max(edge, std::abs(f.data()[i]));
  }
  return edge / peak;
}

inline constexpr double kWrapGuard = 1e-8;

inline Box clip_to_grid(Box b, const GridSpec& grid) {
  for (int a = 0; a < grid.dim(); ++a) {
    b.lo[static_cast<std::size_t>(a)] =
        std::max(b.lo[static_cast<std::size_t>(a)], -grid.half_width(a));
    b.hi[static_cast<std::size_t>(a)] =
        std::min(b.hi[static_cast<std::size_t>(a)], grid.half_width(a));
  }
  return b;
}

inline GridFunction accept_or_overflow(GridFunction out, Box declared, const char* who) {
  const GridSpec& gs = out.spec();
  if (gs.box().contains(declared)) {
    out.set_support(declared);
    return out;
  }
  if (boundary_plane_ratio(out) > kWrapGuard)
    throw SupportOverflow(std::string(who) + ": result support exceeds the grid box");
  out.set_support(clip_to_grid(std::move(declared), gs));
  return out;
}

}  // namespace detail

inline GridFunction convolve(const GridFunction& f, const GridFunction& g) {
  if (!(f.spec() == g.spec())) throw InvariantViolation("convolve: grids differ");
  Box sum = f.support().minkowski_sum(g.support());
  SpectralFunction F = fourier_transform(f);
  SpectralFunction G = fourier_transform(g);
  for (std::size_t i = 0; i < F.data.size(); ++i) F.data[i] *= G.data[i];
  return detail::accept_or_overflow(inverse_fourier(F, f.spec().box()), sum, "convolve");
}

inline ModulationFunction convolve_power(const ModulationFunction& f, int n,
                                         const GridSpec& grid) {
  if (n < 1) throw InvariantViolation("convolve_power: n must be >= 1");
  if (n == 1) return f;
  GridFunction g = ensure_grid(f, grid);
  Box sum = g.support();
  for (int i = 1; i < n; ++i) sum = sum.minkowski_sum(g.support());
  SpectralFunction F = fourier_transform(g);
  for (auto& v : F.data) v = std::pow(v, n);
  return ModulationFunction::from_grid(
      detail::accept_or_overflow(inverse_fourier(F, grid.box()), sum, "convolve_power"));
}

// ---------------------------------------------------------------------------
// Rational scaling f^(alpha)(x) = f(x/alpha). Grid functions are resampled
// spectrally: ftilde^(alpha)(k) = alpha^d ftilde(alpha k), evaluated by an
// exact nonuniform DFT per axis, so no interpolation error enters.

namespace detail {

// Per-axis semi-discrete transform evaluated at scaled momenta alpha*k_j.
// to_momentum uses the axis sign convention of axis_fourier.
inline std::vector<Complex> axis_nudft(const std::vector<Complex>& data, const GridSpec& spec,
                                       int axis, double alpha) {
  const int d = spec.dim();
  const std::size_t n = static_cast<std::size_t>(spec.points(axis));
  std::size_t stride = 1;
  for (int a = d - 1; a > axis; --a) stride *= static_cast<std::size_t>(spec.points(a));
  const std::size_t lines = data.size() / n;
  std::vector<Complex> out(data.size());
  const double sgn = (axis == 0) ? +1.0 : -1.0;
  const double delta = spec.spacing(axis);
  // Phase table: e^{sgn * i * alpha * k_j * x_m}
  std::vector<Complex> table(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    double kj = alpha * spec.momentum(axis, static_cast<int>(j));
    Complex step = std::polar(1.0, sgn * kj * delta);
    Complex ph = std::polar(1.0, sgn * kj * spec.coord(axis, 0));
    for (std::size_t mm = 0; mm < n; ++mm) {
      table[j * n + mm] = ph;
      ph *= step;
    }
  }
  parallel_for(lines, [&](std::size_t line) {
    std::size_t inner = line % stride;
    std::size_t outer = line / stride;
    const Complex* src = data.data() + outer * stride * n + inner;
    Complex* dst = out.data() + outer * stride * n + inner;
    for (std::size_t j = 0; j < n; ++j) {
      Complex acc{0.0, 0.0};
      const Complex* row = table.data() + j * n;
      for (std::size_t mm = 0; mm < n; ++mm) acc += src[mm * stride] * row[mm];
      dst[j * stride] = acc * delta;
    }
  });
  return out;
}

}  // namespace detail

inline ModulationFunction scale(const ModulationFunction& f, const Rational& alpha,
                                const GridSpec& grid) {
  if (!alpha.positive()) throw InvariantViolation("scale: alpha must be positive");
  const double a = alpha.value();
  if (f.is_analytic()) {
    auto out = f.scale_analytic(a);
    if (!grid.box().contains(out.effective_support(kEpsAlias)))
      throw SupportOverflow("scale: scaled support exceeds the grid box");
    return out;
  }
  const auto* gb = f.get_if<GridBacked>();
  if (!gb) throw Error("scale: unsupported modulation function variant");
  const GridFunction& g = *gb->grid;
  Box scaled_box = g.support().scaled(a);

  // ftilde(alpha k) on the momentum grid, axis by axis; modes with
  // |alpha k| beyond the band carry no resolved content and are zeroed.
  std::vector<Complex> spec_data = g.data();
  const GridSpec& gs = g.spec();
  for (int ax = 0; ax < gs.dim(); ++ax) spec_data = detail::axis_nudft(spec_data, gs, ax, a);
  SpectralFunction F{gs, std::move(spec_data), "scaled"};
  const double jac = std::pow(a, gs.dim());
  GridFunction shape(gs, std::vector<Complex>(gs.size()), gs.box());
  std::vector<int> idx;
  for (std::size_t i = 0; i < F.data.size(); ++i) {
    shape.unflatten(i, idx);
    bool in_band = true;
    for (int ax = 0; ax < gs.dim(); ++ax)
      if (std::abs(a * gs.momentum(ax, idx[static_cast<std::size_t>(ax)])) > gs.nyquist(ax))
        in_band = false;
    F.data[i] = in_band ? F.data[i] * jac : Complex{0.0, 0.0};
  }
  return ModulationFunction::from_grid(
      detail::accept_or_overflow(inverse_fourier(F, gs.box()), scaled_box, "scale"));
}

// ---------------------------------------------------------------------------
// Local functionals

struct LocalFunctional {
  enum class Kind { identity, power, gradient_square };
  Kind kind = Kind::identity;
  int exponent = 1;

  static LocalFunctional identity() { return {}; }
  static LocalFunctional power(int p) {
    if (p < 1) throw InvariantViolation("LocalFunctional: power exponent must be >= 1");
    return {Kind::power, p};
  }
  static LocalFunctional gradient_square() { return {Kind::gradient_square, 2}; }
  bool operator==(const LocalFunctional&) const = default;
};

inline ModulationFunction apply_local_functional(const ModulationFunction& f,
                                                 const LocalFunctional& F,
                                                 const GridSpec& grid) {
  if (F.kind == LocalFunctional::Kind::identity) return f;
  GridFunction g = ensure_grid(f, grid);
  if (F.kind == LocalFunctional::Kind::power) {
    SpectralFunction spec = fourier_transform(g);
    for (int ax = 0; ax < grid.dim(); ++ax) {
      double kres = max_resolved_momentum(spec, ax);
      if (F.exponent * kres > grid.nyquist(ax))
        throw AliasingError("power functional: bandwidth " + fmt_double(F.exponent * kres) +
                            " exceeds the Nyquist momentum on axis " + std::to_string(ax));
    }
    GridFunction out = g;
    for (auto& v : out.data()) v = std::pow(v, F.exponent);
    out.set_support(g.support());
    SpectralFunction check = fourier_transform(out);
    if (top_octave_energy_fraction(check) > kEtaAlias)
      throw AliasingError("power functional: top-octave spectral energy above eta_alias");
    return ModulationFunction::from_grid(std::move(out));
  }
  // gradient_square: d_mu f d^mu f via spectral differentiation.
  SpectralFunction F0 = fourier_transform(g);
  const GridSpec& gs = g.spec();
  GridFunction shape(gs, std::vector<Complex>(gs.size()), gs.box());
  std::vector<int> idx;
  std::vector<Complex> acc(gs.size(), Complex{0.0, 0.0});
  for (int ax = 0; ax < gs.dim(); ++ax) {
    SpectralFunction D = F0;
    for (std::size_t i = 0; i < D.data.size(); ++i) {
      shape.unflatten(i, idx);
      const double k = gs.momentum(ax, idx[static_cast<std::size_t>(ax)]);
      // f(x) = int e^{-i k0 t + i k.x} ftilde: d_t -> -i k0, d_xi -> +i ki
      D.data[i] *= (ax == 0) ? Complex(0.0, -k) : Complex(0.0, k);
    }
    GridFunction da = inverse_fourier(D, g.support());
    const double metric = (ax == 0) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < acc.size(); ++i)
      acc[i] += metric * da.data()[i] * da.data()[i];
  }
  GridFunction out(gs, std::move(acc), g.support());
  return ModulationFunction::from_grid(std::move(out));
}

// ---------------------------------------------------------------------------
// Klein-Gordon spectral multiplier -(k.k - m^2).

inline GridFunction klein_gordon_apply(const GridFunction& f, double m) {
  SpectralFunction F = fourier_transform(f);
  const GridSpec& gs = f.spec();
  GridFunction shape(gs, std::vector<Complex>(gs.size()), gs.box());
  std::vector<int> idx;
  for (std::size_t i = 0; i < F.data.size(); ++i) {
    shape.unflatten(i, idx);
    double kk = 0.0;
    for (int ax = 0; ax < gs.dim(); ++ax) {
      double k = gs.momentum(ax, idx[static_cast<std::size_t>(ax)]);
      kk += (ax == 0) ? k * k : -k * k;
    }
    F.data[i] *= -(kk - m * m);
  }
  return inverse_fourier(F, f.support());
}

inline ModulationFunction klein_gordon_apply(const ModulationFunction& f, double m,
                                             const GridSpec& grid) {
  return ModulationFunction::from_grid(klein_gordon_apply(ensure_grid(f, grid), m));
}

}  // namespace modlab
