#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "modlab/propagator.hpp"

using namespace modlab;

TEST_CASE("bessel J0 reference values") {
  CHECK(bessel_j0(0.0) == 1.0);
  CHECK(bessel_j0(0.5) == Catch::Approx(0.93846980724081290).epsilon(1e-13));
  CHECK(bessel_j0(1.0) == Catch::Approx(0.76519768655796655).epsilon(1e-13));
  CHECK(bessel_j0(2.0) == Catch::Approx(0.22389077914123567).epsilon(1e-13));
  CHECK(bessel_j0(5.0) == Catch::Approx(-0.17759677131433830).epsilon(1e-13));
  CHECK(bessel_j0(10.0) == Catch::Approx(-0.24593576445134834).epsilon(1e-13));
  CHECK(bessel_j0(20.0) == Catch::Approx(0.16702466434058315).epsilon(1e-13));
  CHECK(std::abs(bessel_j0(2.404825557695773)) < 1e-13);
}

TEST_CASE("pauli-jordan closed form") {
  CHECK(pauli_jordan({0.0, 1.0}, 1.0) == Complex{0.0, 0.0});
  CHECK(pauli_jordan({0.5, 2.0}, 0.7) == Complex{0.0, 0.0});
  CHECK(pauli_jordan({2.0, 0.0}, 0.0).imag() == Catch::Approx(-0.5));
  CHECK(pauli_jordan({-2.0, 0.0}, 0.0).imag() == Catch::Approx(0.5));
  CHECK(pauli_jordan({2.0, 0.0}, 1.0).imag() == Catch::Approx(-0.5 * bessel_j0(2.0)));
  CHECK_THROWS_AS(pauli_jordan({1.0, 0.0, 0.0, 0.0}, 1.0), UnsupportedDimension);
}

TEST_CASE("green function support and values") {
  CHECK(green_retarded({0.5, 1.0}, 1.0) == 0.0);
  CHECK(green_retarded({-2.0, 0.0}, 1.0) == 0.0);
  CHECK(green_retarded({2.0, 0.0}, 0.0) == 0.5);
  CHECK(green_advanced({-2.0, 0.0}, 0.0) == 0.5);
  CHECK(green_advanced({2.0, 0.0}, 1.0) == 0.0);
}

TEST_CASE("iDelta = -i (G_ret - G_adv) at random points") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::uniform_real_distribution<double> mdist(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    Vec x{u(rng), u(rng)};
    double m = mdist(rng);
    Complex lhs = pauli_jordan(x, m);
    Complex rhs = Complex{0.0, -1.0} * (green_retarded(x, m) - green_advanced(x, m));
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("smeared quadrature oracle agrees with the closed form") {
  const double m = 1.0;
  for (auto [t, x] : {std::pair{2.0, 0.0}, {1.5, 0.5}, {3.0, 1.0}, {2.5, 2.0}}) {
    Complex exact = pauli_jordan({t, x}, m);
    Complex approx = pauli_jordan_quadrature({t, x}, m);
    CHECK(std::abs(exact - approx) < 1e-4);
  }
}
