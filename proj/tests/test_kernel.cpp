#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "modlab/gram.hpp"

using namespace modlab;

namespace {
const GridSpec kGrid = GridSpec::uniform(2, 10.0, 128);
const GridSpec kGridFine = GridSpec::uniform(2, 10.0, 256);

// 1D adaptive Simpson, independent of the shell machinery.
double simpson_1d(const std::function<double(double)>& f, double a, double b, int n = 4001) {
  double h = (b - a) / (n - 1);
  double acc = f(a) + f(b);
  for (int i = 1; i < n - 1; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

ModulationFunction random_packet(std::mt19937_64& rng, double carrier_max = 1.5) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> w(0.7, 1.4);
  std::uniform_real_distribution<double> c(-carrier_max, carrier_max);
  return gaussian({u(rng), u(rng)}, {u(rng), u(rng)}, {w(rng), w(rng)}, {c(rng), c(rng)});
}
}  // namespace

TEST_CASE("gaussian self inner product against the quadrature oracle") {
  // (f,f) = (pi/e) int e^{-2q^2} / sqrt(1+q^2) dq for the unit gaussian, m=1.
  const double oracle =
      std::numbers::pi / std::numbers::e *
      simpson_1d([](double q) { return std::exp(-2 * q * q) / std::sqrt(1 + q * q); }, -8, 8);
  CHECK(oracle == Catch::Approx(1.3226872821587789).epsilon(1e-10));

  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0});
  Complex v = mass_shell_inner(f, f, 1.0, kGridFine);
  CHECK(std::abs(v.imag()) < 1e-12);
  CHECK(v.real() == Catch::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("shell slice examples") {
  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0});
  GridFunction g = sample_to_grid(f, kGrid);
  auto sl = shell_slice(g, 1.0);
  CHECK(std::abs(sl[64] - Complex{2 * std::numbers::pi * std::exp(-0.5), 0.0}) < 1e-8);

  // m = 0 at q = 0 is the plain integral of f
  auto sl0 = shell_slice(g, 0.0);
  CHECK(std::abs(sl0[64] - Complex{2 * std::numbers::pi, 0.0}) < 1e-8);

  // negative-frequency content never reaches the forward shell
  auto fneg = gaussian({1, 0}, {0, 0}, {1, 1}, {-4.0, 0.0});
  auto slneg = shell_slice(sample_to_grid(fneg, kGrid), 1.0);
  auto fpos = gaussian({1, 0}, {0, 0}, {1, 1}, {4.0, 0.0});
  auto slpos = shell_slice(sample_to_grid(fpos, kGrid), 1.0);
  double peak_neg = 0.0, peak_pos = 0.0;
  for (std::size_t i = 0; i < slneg.size(); ++i) {
    peak_neg = std::max(peak_neg, std::abs(slneg[i]));
    peak_pos = std::max(peak_pos, std::abs(slpos[i]));
  }
  CHECK(peak_neg < 1e-6 * peak_pos);
}

TEST_CASE("forward-spectrum restriction of the pre-inner product") {
  auto fneg = gaussian({1, 0}, {0, 0}, {1, 1}, {-4.0, 0.0});
  auto fpos = gaussian({1, 0}, {0, 0}, {1, 1}, {4.0, 0.0});
  double neg = std::abs(mass_shell_inner(fneg, fneg, 1.0, kGrid));
  double pos = std::abs(mass_shell_inner(fpos, fpos, 1.0, kGrid));
  CHECK(neg < 1e-6 * pos);
}

TEST_CASE("conjugate symmetry and sesquilinearity") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = random_packet(rng);
    auto g = random_packet(rng);
    Complex fg = mass_shell_inner(f, g, 1.0, kGrid);
    Complex gf = mass_shell_inner(g, f, 1.0, kGrid);
    CHECK(std::abs(fg - std::conj(gf)) < 1e-12 * std::max(1.0, std::abs(fg)));

    // linearity in the second slot, antilinearity in the first
    Complex w{0.6, -1.1};
    auto wf = formal_sum({{w, f}});
    Complex lhs1 = mass_shell_inner(g, wf, 1.0, kGrid);
    CHECK(std::abs(lhs1 - w * mass_shell_inner(g, f, 1.0, kGrid)) <
          1e-10 * std::max(1.0, std::abs(lhs1)));
    Complex lhs2 = mass_shell_inner(wf, g, 1.0, kGrid);
    CHECK(std::abs(lhs2 - std::conj(w) * mass_shell_inner(f, g, 1.0, kGrid)) <
          1e-10 * std::max(1.0, std::abs(lhs2)));
  }
}

TEST_CASE("klein-gordon images are null vectors") {
  std::mt19937_64 rng(23);
  const double m = 1.0;
  for (int trial = 0; trial < 3; ++trial) {
    auto h = random_packet(rng);
    auto f = random_packet(rng);
    ModulationFunction kgf = klein_gordon_apply(f, m, kGrid);
    Complex v = mass_shell_inner(h, kgf, m, kGrid);
    double scale = std::sqrt(std::abs(mass_shell_inner(h, h, m, kGrid).real()) *
                             std::abs(mass_shell_inner(f, f, m, kGrid).real()));
    CHECK(std::abs(v) < 1e-8 * scale);
  }
}

TEST_CASE("kernel_eval sums and products of shells") {
  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0.3, 0.2});
  auto g = gaussian({1, 0}, {0.2, -0.3}, {1, 1}, {0.1, -0.4});
  Complex i1 = mass_shell_inner(f, g, 1.0, kGrid);
  Complex i2 = mass_shell_inner(f, g, 2.0, kGrid);

  KernelSpec sum{{KernelSpec::Term{1.0, {1.0}}, KernelSpec::Term{1.0, {2.0}}}};
  CHECK(std::abs(kernel_eval(sum, f, g, kGrid) - (i1 + i2)) < 1e-12);

  KernelSpec prod{{KernelSpec::Term{1.0, {1.0, 2.0}}}};
  CHECK(std::abs(kernel_eval(prod, f, g, kGrid) - i1 * i2) < 1e-12);

  KernelSpec single = KernelSpec::single_mass(1.0);
  CHECK(kernel_eval(single, f, g, kGrid) == i1);

  auto zero = gaussian({0, 0}, {0, 0}, {1, 1}, {0, 0});
  CHECK(kernel_eval(prod, zero, g, kGrid) == Complex{0, 0});

  KernelSpec bad;
  CHECK_THROWS_AS(bad.validate(), InvariantViolation);
}

TEST_CASE("hbar scales each shell factor once") {
  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0});
  KernelSpec prod{{KernelSpec::Term{1.0, {1.0, 2.0}}}};
  Complex v1 = kernel_eval(prod, f, f, kGrid, 1.0);
  Complex v2 = kernel_eval(prod, f, f, kGrid, 2.0);
  CHECK(std::abs(v2 - 4.0 * v1) < 1e-10 * std::abs(v2));
}

TEST_CASE("selection rule is exact") {
  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0});
  Channel c1 = plain_channel(f);
  Channel c2{f, {ChannelSlot{LocalFunctional::identity(), {1, 1}},
                 ChannelSlot{LocalFunctional::identity(), {1, 1}}}};
  InnerResult r = channel_inner(c1, c2, KernelSpec::single_mass(1.0), kGrid);
  CHECK(r.value == Complex{0.0, 0.0});
  REQUIRE_FALSE(r.flags.empty());
  CHECK(r.flags[0] == "selection_rule_zero");

  // matched |alpha| via two half slots against one unit slot is nonzero
  Channel c3{f, {ChannelSlot{LocalFunctional::identity(), {1, 2}},
                 ChannelSlot{LocalFunctional::identity(), {1, 2}}}};
  InnerResult r2 = channel_inner(c1, c3, KernelSpec::single_mass(1.0), kGrid);
  CHECK(std::abs(r2.value) > 1e-6);
}

TEST_CASE("plain channel inner reduces to the mass-shell inner product") {
  auto f = gaussian({1, 0}, {0.1, 0.4}, {1, 1.2}, {0.5, -0.1});
  InnerResult r = channel_inner(plain_channel(f), plain_channel(f),
                                KernelSpec::single_mass(1.0), kGrid);
  CHECK(r.value == mass_shell_inner(f, f, 1.0, kGrid));
}

TEST_CASE("two identity slots square the transform") {
  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0});
  ShellEngine eng(kGrid);
  Channel c2{f, {ChannelSlot{LocalFunctional::identity(), {1, 1}},
                 ChannelSlot{LocalFunctional::identity(), {1, 1}}}};
  const auto& ct = eng.channel_transform(c2, 1.0);
  ModulationFunction conv = convolve_power(f, 2, kGrid);
  auto sl = shell_slice(ensure_grid(conv, kGrid), 1.0);
  double peak = 0.0, err = 0.0;
  for (std::size_t i = 0; i < sl.size(); ++i) {
    peak = std::max(peak, std::abs(sl[i]));
    err = std::max(err, std::abs(sl[i] - ct[i]));
  }
  CHECK(err / peak < 1e-8);
}

TEST_CASE("power slot matches the spectral convolution oracle") {
  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0.6, 0.4});
  ShellEngine eng(kGrid);
  Channel cp{f, {ChannelSlot{LocalFunctional::power(2), {1, 1}}}};
  const auto& ct = eng.channel_transform(cp, 1.0);
  auto direct = shell_slice(ensure_grid(apply_local_functional(f, LocalFunctional::power(2), kGrid),
                                        kGrid),
                            1.0);
  double peak = 0.0, err = 0.0;
  for (std::size_t i = 0; i < direct.size(); ++i) {
    peak = std::max(peak, std::abs(direct[i]));
    err = std::max(err, std::abs(direct[i] - ct[i]));
  }
  CHECK(err / peak < 1e-10);
}

TEST_CASE("translation invariance of kernels") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0.4, -0.2});
  auto g = gaussian({0.5, 0.5}, {0.3, 0.2}, {1.1, 0.9}, {-0.3, 0.5});
  KernelSpec K{{KernelSpec::Term{1.0, {1.0}}, KernelSpec::Term{0.5, {2.0, 1.0}}}};
  Complex base = kernel_eval(K, f, g, kGrid);
  for (int trial = 0; trial < 5; ++trial) {
    Vec a{u(rng), u(rng)};
    Complex moved = kernel_eval(K, f.translate_analytic(a), g.translate_analytic(a), kGrid);
    CHECK(std::abs(moved - base) < 1e-10 * std::abs(base));
  }
}

TEST_CASE("approximate boost invariance in 1+1D") {
  const double chi = 0.3;
  auto f = gaussian({1, 0}, {0, 0}, {1.5, 1.5}, {0.5, 0.3});
  auto g = gaussian({1, 0}, {0.4, -0.6}, {1.2, 1.6}, {0.2, -0.4});
  auto boosted = [&](const ModulationFunction& m) {
    const double ch = std::cosh(chi), sh = std::sinh(chi);
    return ModulationFunction::from_grid(from_callable(kGrid, [&](const Vec& x) {
      // evaluate at the inverse boost of x
      return m.evaluate({ch * x[0] - sh * x[1], -sh * x[0] + ch * x[1]});
    }));
  };
  Complex base = mass_shell_inner(f, g, 1.0, kGrid);
  Complex moved = mass_shell_inner(boosted(f), boosted(g), 1.0, kGrid);
  CHECK(std::abs(moved - base) < 1e-3 * std::abs(base));
}

TEST_CASE("massless kernels demand a vanishing zero mode") {
  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0});
  CHECK_THROWS_AS(mass_shell_inner(f, f, 0.0, kGrid), QuadratureDivergence);

  // antisymmetric combination has ftilde(0) = 0; the skip rule applies
  auto odd = formal_sum({{{1, 0}, gaussian({1, 0}, {0, 1.5}, {1, 1}, {0, 0})},
                         {{-1, 0}, gaussian({1, 0}, {0, -1.5}, {1, 1}, {0, 0})}});
  InnerResult r = mass_shell_inner_detailed(odd, odd, 0.0, kGrid);
  CHECK(std::find(r.flags.begin(), r.flags.end(), "massless_zero_mode_skipped") != r.flags.end());
  CHECK(r.value.real() > 0.0);
}

TEST_CASE("gram matrices are positive semidefinite") {
  std::mt19937_64 rng(5);
  // rank-1: two identical channels
  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0});
  GramReport r1 = gram_matrix({plain_channel(f), plain_channel(f)},
                              KernelSpec::single_mass(1.0), kGrid);
  const double a = r1.matrix[0].real();
  CHECK(r1.psd);
  CHECK(r1.min_eigenvalue == Catch::Approx(0.0).margin(1e-10 * r1.trace));
  CHECK(r1.trace == Catch::Approx(2 * a).epsilon(1e-12));

  // Hadamard-product kernel over random packets
  KernelSpec had{{KernelSpec::Term{1.0, {1.0, 2.0}}}};
  std::vector<Channel> chans;
  for (int i = 0; i < 5; ++i) chans.push_back(plain_channel(random_packet(rng)));
  GramReport r2 = gram_matrix(chans, had, kGrid);
  CHECK(r2.psd);

  // sum-of-products kernel over more packets
  KernelSpec sp{{KernelSpec::Term{1.0, {1.0}}, KernelSpec::Term{0.3, {1.5, 2.0}}}};
  chans.clear();
  for (int i = 0; i < 8; ++i) chans.push_back(plain_channel(random_packet(rng)));
  GramReport r3 = gram_matrix(chans, sp, kGrid);
  CHECK(r3.psd);
}

TEST_CASE("eigenvalue solver against the closed-form cubic on a 3x3 gram") {
  std::mt19937_64 rng(9);
  std::vector<Channel> chans;
  for (int i = 0; i < 3; ++i) chans.push_back(plain_channel(random_packet(rng)));
  GramReport rep = gram_matrix(chans, KernelSpec::single_mass(1.0), kGrid);
  // characteristic cubic of the Hermitian 3x3: x^3 - tr x^2 + c2 x - det
  auto G = [&](int i, int j) { return rep.matrix[static_cast<std::size_t>(i) * 3 + static_cast<std::size_t>(j)]; };
  const double tr = (G(0, 0) + G(1, 1) + G(2, 2)).real();
  const Complex det = G(0, 0) * (G(1, 1) * G(2, 2) - G(1, 2) * G(2, 1)) -
                      G(0, 1) * (G(1, 0) * G(2, 2) - G(1, 2) * G(2, 0)) +
                      G(0, 2) * (G(1, 0) * G(2, 1) - G(1, 1) * G(2, 0));
  const Complex c2c = G(0, 0) * G(1, 1) - G(0, 1) * G(1, 0) + G(0, 0) * G(2, 2) -
                      G(0, 2) * G(2, 0) + G(1, 1) * G(2, 2) - G(1, 2) * G(2, 1);
  const double c2 = c2c.real();
  // trigonometric cubic solution for the smallest root
  const double p = tr * tr / 9.0 - c2 / 3.0;
  const double q = tr * tr * tr / 27.0 - tr * c2 / 6.0 + det.real() / 2.0;
  const double phi = std::acos(std::clamp(q / std::pow(p, 1.5), -1.0, 1.0));
  double xmin = 1e300;
  for (int k = 0; k < 3; ++k) {
    double root = tr / 3.0 + 2.0 * std::sqrt(p) * std::cos((phi + 2.0 * std::numbers::pi * k) / 3.0);
    xmin = std::min(xmin, root);
  }
  CHECK(rep.min_eigenvalue == Catch::Approx(xmin).margin(1e-12 * std::abs(tr)));
}

TEST_CASE("field commutator basics") {
  auto f = gaussian({1, 0}, {0, 0}, {1, 1}, {0.2, 0.1});
  KernelSpec K = KernelSpec::single_mass(1.0);
  InnerResult same = field_commutator(plain_channel(f), plain_channel(f), K, kGrid);
  CHECK(std::abs(same.value) < 1e-12);

  // spacelike-separated real bumps commute within the quadrature tail
  auto b1 = bump({1, 0}, {0.0, -3.0}, {0.8, 1.0}, {0, 0});
  auto b2 = bump({1, 0}, {0.5, 3.0}, {1.0, 0.9}, {0, 0});
  ShellEngine eng(kGrid);
  InnerResult r = eng.commutator(plain_channel(b1), plain_channel(b2), K);
  double scale = eng.channel_norm(plain_channel(b1), K) * eng.channel_norm(plain_channel(b2), K);
  CHECK(std::abs(r.value) <= std::max(r.tail_bound, 1e-8 * scale));

  // overlapping bumps do not
  auto b3 = bump({1, 0}, {1.2, -2.4}, {1.0, 1.0}, {0, 0});
  InnerResult w = eng.commutator(plain_channel(b1), plain_channel(b3), K);
  double wscale = eng.channel_norm(plain_channel(b1), K) * eng.channel_norm(plain_channel(b3), K);
  CHECK(std::abs(w.value) > 1e-3 * wscale);
}
