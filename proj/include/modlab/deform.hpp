#pragma once

// Conjugation deformations: Hermitian generators S built from number-operator
// style products of channel fields, the deformed field
//   zeta = e^{+iS} xi e^{-iS}
// realized as the truncated adjoint series sum_{j<=K} (i^j/j!) ad_S^j(xi),
// transition amplitudes, resonance sweeps over probe families, and the
// polarization extraction of multilinear components.

#include <functional>

#include "modlab/wick.hpp"

namespace modlab {

struct GeneratorSpec {
  struct Factor {
    Channel channel;
    bool dagger_pair = true;  // true: contributes xi^dag xi; false: bare xi
  };
  struct Term {
    double lambda = 0.0;
    std::vector<Factor> factors;
  };
  std::vector<Term> terms;
  bool symmetrize = false;
};

struct LintWarning {
  std::string code;
  std::string message;
};

struct DeformedField {
  Channel base;
  OperatorPolynomial generator;
  int order = 0;
  OperatorPolynomial result;
};

// Registers every channel a generator will need; call before freezing.
inline void register_generator_channels(const GeneratorSpec& spec, KernelContext& ctx) {
  for (const auto& term : spec.terms)
    for (const auto& f : term.factors) {
      ctx.register_channel(f.channel);
      ctx.register_channel(f.channel.conjugated());
    }
}

// Structural hermiticity: pairwise distinct |alpha| within each term makes the
// factors commute, and each factor must itself be hermitian (dagger pairs
// always are; bare factors need a conjugation-invariant channel).
inline void check_generator_structure(const GeneratorSpec& spec) {
  for (const auto& term : spec.terms) {
    if (term.factors.empty())
      throw InvariantViolation("GeneratorSpec: term without factors");
    for (std::size_t i = 0; i < term.factors.size(); ++i) {
      for (std::size_t j = i + 1; j < term.factors.size(); ++j) {
        if (term.factors[i].channel.alpha_total() == term.factors[j].channel.alpha_total() &&
            !spec.symmetrize)
          throw NonHermitianGenerator(
              "generator term has factors with equal |alpha| and symmetrize=false");
      }
      const auto& f = term.factors[i];
      if (!f.dagger_pair &&
          channel_key(f.channel) != channel_key(f.channel.conjugated()) && !spec.symmetrize)
        throw NonHermitianGenerator(
            "bare generator factor has a non-real channel and symmetrize=false");
    }
  }
}

inline OperatorPolynomial build_generator(const GeneratorSpec& spec, KernelContext& ctx) {
  check_generator_structure(spec);
  register_generator_channels(spec, ctx);
  OperatorPolynomial total;
  for (const auto& term : spec.terms) {
    if (term.lambda == 0.0) continue;
    OperatorPolynomial prod = OperatorPolynomial::scalar({term.lambda, 0.0});
    for (const auto& f : term.factors) {
      OperatorPolynomial xi = make_field(ctx, f.channel);
      if (f.dagger_pair) prod = multiply(prod, adjoint(xi), ctx);
      prod = multiply(prod, xi, ctx);
    }
    total += prod;
  }
  if (spec.symmetrize) {
    OperatorPolynomial sym = total;
    sym += adjoint(total);
    sym *= Complex{0.5, 0.0};
    return sym;
  }
  return total;
}

// Symbolic check adjoint(S) = S; requires a frozen context because equality is
// judged on normal forms.
inline double hermiticity_defect(const OperatorPolynomial& S, const KernelContext& ctx) {
  return poly_distance(normal_order(S, ctx), normal_order(adjoint(S), ctx));
}

inline void verify_generator_hermitian(const OperatorPolynomial& S, const KernelContext& ctx) {
  const double defect = hermiticity_defect(S, ctx);
  const double scale = std::max(S.max_coeff(), 1.0);
  if (defect > 1e-12 * scale)
    throw NonHermitianGenerator("generator fails adjoint(S) = S; defect " + fmt_double(defect));
}

inline std::vector<LintWarning> triviality_lint(const GeneratorSpec& spec,
                                                const Channel& base_channel) {
  std::vector<LintWarning> out;
  if (spec.terms.empty()) {
    out.push_back({"TrivialDeformation", "generator has no terms; zeta = xi"});
    return out;
  }
  const Rational base_alpha = base_channel.alpha_total();
  bool any_match = false;
  for (const auto& term : spec.terms)
    for (const auto& f : term.factors)
      if (f.channel.alpha_total() == base_alpha) any_match = true;
  if (!any_match)
    out.push_back({"TrivialDeformation",
                   "no generator factor shares |alpha| with the base channel; [S, xi] = 0"});
  for (std::size_t i = 1; i < spec.terms.size(); ++i) {
    bool shares = false;
    for (std::size_t j = 0; j < i && !shares; ++j)
      for (const auto& fi : spec.terms[i].factors)
        for (const auto& fj : spec.terms[j].factors)
          if (fi.channel.alpha_total() == fj.channel.alpha_total()) shares = true;
    if (!shares)
      out.push_back({"CommutingTerm", "term " + std::to_string(i) +
                                          " commutes with every previously added term"});
  }
  return out;
}

// zeta = sum_{j=0}^{K} (i^j / j!) ad_S^j(xi_base), normal ordered.
inline DeformedField zeta(KernelContext& ctx, const Channel& base, const OperatorPolynomial& S,
                          int order) {
  if (order < 0) throw InvariantViolation("zeta: order must be >= 0");
  OperatorPolynomial xi = make_field(ctx, base);
  if (!ctx.frozen()) ctx.freeze();
  if (!S.zero()) verify_generator_hermitian(S, ctx);
  OperatorPolynomial result = xi;
  OperatorPolynomial cur = xi;
  Complex fac{1.0, 0.0};
  for (int j = 1; j <= order; ++j) {
    try {
      cur = commutator(S, cur, ctx);
    } catch (const DegreeOverflow& e) {
      throw DegreeOverflow(std::string(e.what()) + "; lower the truncation order K");
    }
    fac *= Complex{0.0, 1.0} / static_cast<double>(j);
    OperatorPolynomial t = cur;
    t *= fac;
    result += t;
  }
  return DeformedField{base, S, order, normal_order(result, ctx)};
}

// |<V| zeta_g^dag zeta_f |V>|^2
inline double transition_amplitude(const DeformedField& zf, const DeformedField& zg,
                                   const KernelContext& ctx) {
  return std::norm(vacuum_overlap(zg.result, zf.result, ctx));
}

// ---------------------------------------------------------------------------
// Polarization

namespace detail {

// Coefficients of the Lagrange basis polynomial L_s over nodes {0..D}:
// returns W[s][r] = coefficient of lambda^r in L_s.
inline std::vector<std::vector<double>> lagrange_coefficients(int D) {
  const int n = D + 1;
  std::vector<std::vector<double>> W(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    std::vector<double> poly{1.0};
    double denom = 1.0;
    for (int r = 0; r < n; ++r) {
      if (r == s) continue;
      // multiply by (lambda - r)
      std::vector<double> next(poly.size() + 1, 0.0);
      for (std::size_t k = 0; k < poly.size(); ++k) {
        next[k + 1] += poly[k];
        next[k] -= static_cast<double>(r) * poly[k];
      }
      poly = std::move(next);
      denom *= static_cast<double>(s - r);
    }
    for (auto& c : poly) c /= denom;
    poly.resize(static_cast<std::size_t>(n), 0.0);
    W[static_cast<std::size_t>(s)] = std::move(poly);
  }
  return W;
}

}  // namespace detail

// The degree-n multilinear component (1/n!) [prod_j d/dlambda_j] sandwich |_0
// of a polynomial sandwich of total degree <= max_total_degree. Exact
// per-variable differentiation on integer nodes; a spare node guards the
// degree assumption.
inline Complex polarize(const std::function<Complex(const Vec&)>& sandwich, int n,
                        int max_total_degree) {
  if (n < 1) throw InvariantViolation("polarize: n must be >= 1");
  const int D = std::max(max_total_degree, 1);
  const auto W = detail::lagrange_coefficients(D);
  const int nodes = D + 1;

  // All sample tuples in {0..D}^n.
  std::size_t count = 1;
  for (int i = 0; i < n; ++i) count *= static_cast<std::size_t>(nodes);
  std::vector<Complex> samples(count);
  Vec lambda(static_cast<std::size_t>(n));
  double max_abs = 0.0;
  for (std::size_t f = 0; f < count; ++f) {
    std::size_t rest = f;
    for (int v = n - 1; v >= 0; --v) {
      lambda[static_cast<std::size_t>(v)] = static_cast<double>(rest % static_cast<std::size_t>(nodes));
      rest /= static_cast<std::size_t>(nodes);
    }
    samples[f] = sandwich(lambda);
    max_abs = std::max(max_abs, std::abs(samples[f]));
  }

  // Mixed first-order coefficient: tensor contraction with the lambda^1 row.
  Complex mixed{0.0, 0.0};
  for (std::size_t f = 0; f < count; ++f) {
    double w = 1.0;
    std::size_t rest = f;
    for (int v = n - 1; v >= 0; --v) {
      const std::size_t s = rest % static_cast<std::size_t>(nodes);
      rest /= static_cast<std::size_t>(nodes);
      w *= W[s][1];
    }
    if (w != 0.0) mixed += w * samples[f];
  }

  // Degree guard: the interpolant must predict the sandwich at the spare node
  // (D+1, ..., D+1).
  {
    Vec check(static_cast<std::size_t>(n), static_cast<double>(D + 1));
    const Complex actual = sandwich(check);
    std::vector<double> ell(static_cast<std::size_t>(nodes));
    for (int s = 0; s < nodes; ++s) {
      double v = 0.0, x = 1.0;
      for (int r = 0; r < nodes; ++r) {
        v += W[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)] * x;
        x *= static_cast<double>(D + 1);
      }
      ell[static_cast<std::size_t>(s)] = v;
    }
    Complex pred{0.0, 0.0};
    for (std::size_t f = 0; f < count; ++f) {
      double w = 1.0;
      std::size_t rest = f;
      for (int v = n - 1; v >= 0; --v) {
        const std::size_t s = rest % static_cast<std::size_t>(nodes);
        rest /= static_cast<std::size_t>(nodes);
        w *= ell[s];
      }
      if (w != 0.0) pred += w * samples[f];
    }
    const double resid = std::abs(pred - actual);
    const double scale = std::max({max_abs, std::abs(actual), 1e-300});
    if (resid > 1e-8 * scale * std::pow(static_cast<double>(D + 1), n))
      throw DegreeMismatch("polarize: samples inconsistent with total degree <= " +
                           std::to_string(D) + " (residual " + fmt_double(resid) + ")");
  }

  double nfact = 1.0;
  for (int j = 2; j <= n; ++j) nfact *= j;
  return mixed / nfact;
}

// Inclusion-exclusion oracle:
// (1/n!) sum_{T subset [n]} (-1)^{n-|T|} [degree-n homogeneous part](1_T).
inline Complex polarize_oracle(const std::function<Complex(const Vec&)>& sandwich, int n,
                               int max_total_degree) {
  const int D = std::max(max_total_degree, n);
  const auto W = detail::lagrange_coefficients(D);
  auto homogeneous_n = [&](const Vec& v) {
    Complex acc{0.0, 0.0};
    Vec scaled(v.size());
    for (int s = 0; s <= D; ++s) {
      for (std::size_t i = 0; i < v.size(); ++i) scaled[i] = static_cast<double>(s) * v[i];
      acc += W[static_cast<std::size_t>(s)][static_cast<std::size_t>(n)] * sandwich(scaled);
    }
    return acc;
  };
  Complex total{0.0, 0.0};
  const std::size_t subsets = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    Vec ind(static_cast<std::size_t>(n), 0.0);
    int card = 0;
    for (int b = 0; b < n; ++b)
      if ((mask >> b) & 1u) {
        ind[static_cast<std::size_t>(b)] = 1.0;
        ++card;
      }
    const double sign = ((n - card) % 2 == 0) ? 1.0 : -1.0;
    total += sign * homogeneous_n(ind);
  }
  double nfact = 1.0;
  for (int j = 2; j <= n; ++j) nfact *= j;
  return total / nfact;
}

// ---------------------------------------------------------------------------
// Resonance sweeps

struct SweepRow {
  double theta = 0.0;
  double amplitude = 0.0;
  int k_order = 0;
  int degree_max = 0;
};

// Applies a generator template to a concrete base function: every factor
// channel keeps its slots but replaces its base.
inline GeneratorSpec instantiate_generator(const GeneratorSpec& tmpl,
                                           const ModulationFunction& base) {
  GeneratorSpec out = tmpl;
  for (auto& term : out.terms)
    for (auto& f : term.factors) f.channel.base = base;
  return out;
}

// zeta_g^dag zeta_f amplitude for one probe; channels registered fresh.
inline double deformed_amplitude(const ModulationFunction& f, const ModulationFunction& g,
                                 const GeneratorSpec& tmpl, int order, const KernelSpec& K,
                                 const GridSpec& grid, double hbar = 1.0, int degree_cap = 16) {
  KernelContext ctx(K, grid, hbar, degree_cap);
  GeneratorSpec gen_f = instantiate_generator(tmpl, f);
  GeneratorSpec gen_g = instantiate_generator(tmpl, g);
  OperatorPolynomial Sf = build_generator(gen_f, ctx);
  OperatorPolynomial Sg = build_generator(gen_g, ctx);
  Channel cf = plain_channel(f), cg = plain_channel(g);
  make_field(ctx, cf);
  make_field(ctx, cg);
  ctx.freeze();
  DeformedField zf = zeta(ctx, cf, Sf, order);
  DeformedField zg = zeta(ctx, cg, Sg, order);
  return transition_amplitude(zf, zg, ctx);
}

inline std::vector<SweepRow> resonance_sweep(
    const ModulationFunction& base, const std::function<ModulationFunction(double)>& probe,
    const GeneratorSpec& tmpl, int order, const std::vector<double>& thetas, const KernelSpec& K,
    const GridSpec& grid, double hbar = 1.0, int degree_cap = 16) {
  std::vector<SweepRow> rows;
  rows.reserve(thetas.size());
  for (double th : thetas) {
    ModulationFunction g = probe(th);
    KernelContext ctx(K, grid, hbar, degree_cap);
    GeneratorSpec gen_f = instantiate_generator(tmpl, base);
    GeneratorSpec gen_g = instantiate_generator(tmpl, g);
    OperatorPolynomial Sf = build_generator(gen_f, ctx);
    OperatorPolynomial Sg = build_generator(gen_g, ctx);
    Channel cf = plain_channel(base), cg = plain_channel(g);
    make_field(ctx, cf);
    make_field(ctx, cg);
    ctx.freeze();
    DeformedField zf = zeta(ctx, cf, Sf, order);
    DeformedField zg = zeta(ctx, cg, Sg, order);
    SweepRow row;
    row.theta = th;
    row.amplitude = transition_amplitude(zf, zg, ctx);
    row.k_order = order;
    row.degree_max = std::max(zf.result.degree(), zg.result.degree());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace modlab
