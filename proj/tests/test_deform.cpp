#include <catch2/catch_amalgamated.hpp>

#include "modlab/deform.hpp"

using namespace modlab;

namespace {
const GridSpec kGrid = GridSpec::uniform(2, 10.0, 64);
const KernelSpec kK = KernelSpec::single_mass(1.0);

ModulationFunction base_fn() { return gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0}); }

Channel scaled_channel(const ModulationFunction& f, long long num, long long den) {
  return Channel{f, {ChannelSlot{LocalFunctional::identity(), Rational{num, den}}}};
}

GeneratorSpec tutorial_generator(const ModulationFunction& f, double lambda) {
  GeneratorSpec g;
  g.terms.push_back({lambda,
                     {{plain_channel(f), true}, {scaled_channel(f, 2, 1), true}}});
  return g;
}
}  // namespace

TEST_CASE("generator with distinct |alpha| is hermitian") {
  KernelContext ctx(kK, kGrid);
  GeneratorSpec spec = tutorial_generator(base_fn(), 0.05);
  OperatorPolynomial S = build_generator(spec, ctx);
  ctx.freeze();
  CHECK(hermiticity_defect(S, ctx) <= 1e-12 * S.max_coeff());
  CHECK_NOTHROW(verify_generator_hermitian(S, ctx));
}

TEST_CASE("equal |alpha| factors are rejected without symmetrize") {
  GeneratorSpec bad;
  bad.terms.push_back({0.1, {{plain_channel(base_fn()), true},
                             {Channel{base_fn(),
                                      {ChannelSlot{LocalFunctional::power(2), Rational{1, 1}}}},
                              true}}});
  KernelContext ctx(kK, kGrid);
  CHECK_THROWS_AS(build_generator(bad, ctx), NonHermitianGenerator);
  bad.symmetrize = true;
  KernelContext ctx2(kK, kGrid);
  OperatorPolynomial S = build_generator(bad, ctx2);
  ctx2.freeze();
  CHECK(hermiticity_defect(S, ctx2) <= 1e-12 * std::max(1.0, S.max_coeff()));
}

TEST_CASE("zero coupling gives the zero polynomial") {
  KernelContext ctx(kK, kGrid);
  OperatorPolynomial S = build_generator(tutorial_generator(base_fn(), 0.0), ctx);
  CHECK(S.zero());
}

TEST_CASE("triviality lint") {
  auto f = base_fn();
  Channel base = plain_channel(f);

  GeneratorSpec empty;
  auto w0 = triviality_lint(empty, base);
  REQUIRE(w0.size() == 1);
  CHECK(w0[0].code == "TrivialDeformation");

  // all factors at |alpha| = 2 against a base at |alpha| = 1
  GeneratorSpec trivial;
  trivial.terms.push_back({0.1, {{scaled_channel(f, 2, 1), true},
                                 {scaled_channel(f, 3, 1), true}}});
  auto w1 = triviality_lint(trivial, base);
  REQUIRE_FALSE(w1.empty());
  CHECK(w1[0].code == "TrivialDeformation");

  // the lint's claim is exact: [S, xi] = 0 as a polynomial
  KernelContext ctx(kK, kGrid);
  OperatorPolynomial S = build_generator(trivial, ctx);
  OperatorPolynomial xi = make_field(ctx, base);
  ctx.freeze();
  CHECK(commutator(S, xi, ctx).zero());

  auto w2 = triviality_lint(tutorial_generator(f, 0.1), base);
  CHECK(w2.empty());

  // a second term sharing no |alpha| with the first draws a warning
  GeneratorSpec two = tutorial_generator(f, 0.1);
  two.terms.push_back({0.1, {{scaled_channel(f, 3, 1), true},
                             {scaled_channel(f, 4, 1), true}}});
  auto w3 = triviality_lint(two, base);
  REQUIRE_FALSE(w3.empty());
  CHECK(w3[0].code == "CommutingTerm");
}

TEST_CASE("zeta reduces to xi when S vanishes or is trivial") {
  auto f = base_fn();
  Channel base = plain_channel(f);

  KernelContext ctx(kK, kGrid);
  OperatorPolynomial xi = make_field(ctx, base);
  ctx.freeze();
  DeformedField z0 = zeta(ctx, base, OperatorPolynomial{}, 3);
  CHECK(z0.result == normal_order(xi, ctx));

  GeneratorSpec trivial;
  trivial.terms.push_back({0.1, {{scaled_channel(f, 2, 1), true},
                                 {scaled_channel(f, 3, 1), true}}});
  KernelContext ctx2(kK, kGrid);
  OperatorPolynomial S = build_generator(trivial, ctx2);
  OperatorPolynomial xi2 = make_field(ctx2, base);
  ctx2.freeze();
  DeformedField zt = zeta(ctx2, base, S, 2);
  CHECK(zt.result == normal_order(xi2, ctx2));
}

TEST_CASE("zeta at K=1 is xi + i [S, xi]") {
  auto f = base_fn();
  Channel base = plain_channel(f);
  KernelContext ctx(kK, kGrid);
  OperatorPolynomial S = build_generator(tutorial_generator(f, 0.05), ctx);
  OperatorPolynomial xi = make_field(ctx, base);
  ctx.freeze();
  DeformedField z1 = zeta(ctx, base, S, 1);
  OperatorPolynomial expect = xi;
  OperatorPolynomial c = commutator(S, xi, ctx);
  c *= Complex{0.0, 1.0};
  expect += c;
  CHECK(poly_distance(z1.result, normal_order(expect, ctx)) < 1e-14);
  CHECK_FALSE(commutator(S, xi, ctx).zero());
}

TEST_CASE("free transition amplitudes") {
  auto f = base_fn();
  auto g = gaussian({1, 0}, {0.3, -0.4}, {1.1, 0.9}, {0.4, 0.2});
  KernelContext ctx(kK, kGrid);
  Channel cf = plain_channel(f), cg = plain_channel(g);
  make_field(ctx, cf);
  make_field(ctx, cg);
  ctx.freeze();
  DeformedField zf = zeta(ctx, cf, {}, 0);
  DeformedField zg = zeta(ctx, cg, {}, 0);
  double amp = transition_amplitude(zf, zg, ctx);
  Complex gf = channel_inner(cg, cf, kK, kGrid).value;
  CHECK(amp == Catch::Approx(std::norm(gf)).epsilon(1e-12));

  DeformedField zff = zeta(ctx, cf, {}, 0);
  double self = transition_amplitude(zff, zff, ctx);
  Complex ff = channel_inner(cf, cf, kK, kGrid).value;
  CHECK(self == Catch::Approx(std::norm(ff)).epsilon(1e-12));
  CHECK(self > 0.0);
}

TEST_CASE("truncation order converges for small couplings") {
  auto f = base_fn();
  auto amp_at = [&](int K) {
    KernelContext ctx(kK, kGrid);
    GeneratorSpec gen = tutorial_generator(f, 0.05);
    OperatorPolynomial S = build_generator(gen, ctx);
    Channel base = plain_channel(f);
    make_field(ctx, base);
    ctx.freeze();
    DeformedField z = zeta(ctx, base, S, K);
    return vev(multiply(adjoint(z.result), z.result, ctx), ctx).real();
  };
  double a1 = amp_at(1), a2 = amp_at(2), a3 = amp_at(3), a4 = amp_at(4), a5 = amp_at(5);
  double d1 = std::abs(a1 - a3), d2 = std::abs(a2 - a4), d3 = std::abs(a3 - a5);
  CHECK(d2 < d1);
  CHECK(d3 < d1);
}

TEST_CASE("polarize on synthetic polynomials") {
  // F(l1,l2) = 3 l1 l2 + l1^2 - 2 l2: bilinear part 3, paper-normalized 3/2
  auto F = [](const Vec& l) {
    return Complex{3 * l[0] * l[1] + l[0] * l[0] - 2 * l[1], 0.0};
  };
  Complex v = polarize(F, 2, 2);
  CHECK(v.real() == Catch::Approx(1.5).margin(1e-12));
  Complex o = polarize_oracle(F, 2, 2);
  CHECK(std::abs(v - o) < 1e-12);

  // linear map has no bilinear part
  auto lin = [](const Vec& l) { return Complex{2.0 * l[0] - l[1], 0.0}; };
  CHECK(std::abs(polarize(lin, 2, 2)) < 1e-14);

  // degree guard: cubic content with claimed degree 2
  auto cubic = [](const Vec& l) { return Complex{l[0] * l[0] * l[0], 0.0}; };
  CHECK_THROWS_AS(polarize(cubic, 1, 2), DegreeMismatch);
}

TEST_CASE("polarize recovers the linear field component") {
  auto f1 = gaussian({1, 0}, {0, 0}, {1, 1}, {0.2, 0.1});
  auto h = gaussian({1, 0}, {0.3, 0.5}, {1.2, 0.8}, {0.1, -0.2});
  auto sandwich = [&](const Vec& lambda) -> Complex {
    FormalSum sum;
    sum.terms.push_back({Complex{lambda[0], 0.0}, std::make_shared<ModulationFunction>(f1)});
    ModulationFunction base{std::move(sum)};
    KernelContext ctx(kK, kGrid);
    Channel cb = plain_channel(base), ch = plain_channel(h);
    make_field(ctx, ch);
    make_field(ctx, cb);
    ctx.freeze();
    ChannelId hid = ctx.register_channel(ch);
    OperatorPolynomial expr = multiply(lowering(hid), make_field(ctx, cb), ctx);
    return vev(expr, ctx);
  };
  Complex v = polarize(sandwich, 1, 1);
  Complex direct = channel_inner(plain_channel(h), plain_channel(f1), kK, kGrid).value;
  CHECK(std::abs(v - direct) < 1e-9 * std::max(1.0, std::abs(direct)));
}

TEST_CASE("bilinear part of the squared-convolution channel") {
  auto f1 = gaussian({1, 0}, {0, -0.4}, {0.9, 0.9}, {0.3, 0.0});
  auto f2 = gaussian({1, 0}, {0, 0.4}, {1.0, 1.1}, {-0.2, 0.1});
  auto h = gaussian({1, 0}, {0.2, 0.0}, {1.1, 1.0}, {0.0, 0.2});
  std::vector<ChannelSlot> conv2{{LocalFunctional::identity(), Rational{1, 1}},
                                 {LocalFunctional::identity(), Rational{1, 1}}};
  // The bra must sit in the |alpha| = 2 family or the selection rule zeroes
  // the sandwich; use the two-slot h channel (an h*h mode).
  Channel ch{h, conv2};
  auto sandwich = [&](const Vec& lambda) -> Complex {
    FormalSum sum;
    sum.terms.push_back({Complex{lambda[0], 0.0}, std::make_shared<ModulationFunction>(f1)});
    sum.terms.push_back({Complex{lambda[1], 0.0}, std::make_shared<ModulationFunction>(f2)});
    ModulationFunction base{std::move(sum)};
    KernelContext ctx(kK, kGrid);
    Channel cb{base, conv2};
    make_field(ctx, ch);
    make_field(ctx, cb);
    ctx.freeze();
    ChannelId hid = ctx.register_channel(ch);
    OperatorPolynomial expr = multiply(lowering(hid), make_field(ctx, cb), ctx);
    return vev(expr, ctx);
  };
  Complex v = polarize(sandwich, 2, 2);
  Complex oracle = polarize_oracle(sandwich, 2, 2);
  CHECK(std::abs(v - oracle) < 1e-9 * std::max(1.0, std::abs(v)));

  // direct mixed channel: the cross term of (l1 f1 + l2 f2)^{*2} is
  // 2 (f1*f2), so the bilinear part equals the (h*h, f1*f2) quadrature.
  GridFunction g1 = sample_to_grid(f1, kGrid), g2 = sample_to_grid(f2, kGrid);
  GridFunction mixed = convolve(g1, g2);
  auto slh = shell_slice(sample_to_grid(h, kGrid), 1.0);
  auto slm = shell_slice(mixed, 1.0);
  Complex direct{0, 0};
  const double measure = kGrid.momentum_spacing(1) / (2 * std::numbers::pi);
  for (std::size_t q = 0; q < slh.size(); ++q) {
    double k = kGrid.momentum(1, static_cast<int>(q));
    double w = std::sqrt(1.0 + k * k);
    direct += std::conj(slh[q] * slh[q]) * slm[q] / (2.0 * w) * measure;
  }
  CHECK(std::abs(v - direct) < 1e-8 * std::max(1.0, std::abs(direct)));
}

TEST_CASE("resonance sweep peaks at the matching carrier") {
  auto f = gaussian({1, 0}, {0, 0}, {1.4, 1.4}, {1.5, 0.9});
  GeneratorSpec none;
  std::vector<double> thetas{0.5, 0.75, 1.0, 1.25, 1.5};
  auto probe = [&](double th) {
    return gaussian({1, 0}, {0, 0}, {1.4, 1.4}, {1.5 * th, 0.9 * th});
  };
  auto rows = resonance_sweep(f, probe, none, 0, thetas, kK, kGrid);
  REQUIRE(rows.size() == thetas.size());
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].amplitude > rows[best].amplitude) best = i;
  CHECK(rows[best].theta == 1.0);

  auto empty_rows = resonance_sweep(f, probe, none, 0, {}, kK, kGrid);
  CHECK(empty_rows.empty());
}
