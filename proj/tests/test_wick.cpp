#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "modlab/wick.hpp"

using namespace modlab;

namespace {
const GridSpec kGrid = GridSpec::uniform(2, 10.0, 64);

struct Fixture {
  KernelContext ctx{KernelSpec::single_mass(1.0), kGrid};
  ChannelId f, g, h;
  Fixture() {
    f = ctx.register_channel(plain_channel(gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0})));
    g = ctx.register_channel(plain_channel(gaussian({1, 0}, {0.4, -0.3}, {1.1, 0.9}, {0.3, 0.2})));
    h = ctx.register_channel(
        plain_channel(gaussian({0.8, 0.2}, {-0.5, 0.8}, {0.9, 1.3}, {-0.2, 0.4})));
    ctx.register_channel(
        plain_channel(gaussian({1, 0}, {0.4, -0.3}, {1.1, 0.9}, {0.3, 0.2}).conjugate()));
    ctx.register_channel(
        plain_channel(gaussian({0.8, 0.2}, {-0.5, 0.8}, {0.9, 1.3}, {-0.2, 0.4}).conjugate()));
    ctx.freeze();
  }
};
}  // namespace

TEST_CASE("make_field on a real base is hermitian") {
  KernelContext ctx(KernelSpec::single_mass(1.0), kGrid);
  Channel c = plain_channel(gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0}));
  OperatorPolynomial xi = make_field(ctx, c);
  ctx.freeze();
  CHECK(xi.size() == 2);
  CHECK(adjoint(xi) == xi);          // real base: f* = f, so a_f + a_f^dag
  CHECK(vev(xi, ctx) == Complex{0, 0});
}

TEST_CASE("make_field on a complex base conjugates under adjoint") {
  KernelContext ctx(KernelSpec::single_mass(1.0), kGrid);
  Channel c = plain_channel(gaussian({1, 0}, {0, 0}, {1, 1}, {0.5, 0.2}));
  OperatorPolynomial xi = make_field(ctx, c);
  OperatorPolynomial xi_conj = make_field(ctx, c.conjugated());
  CHECK(adjoint(xi) == xi_conj);
  CHECK_FALSE(adjoint(xi) == xi);
}

TEST_CASE("commutators of ladder operators") {
  Fixture fx;
  auto& ctx = fx.ctx;
  OperatorPolynomial c1 = commutator(lowering(fx.f), raising(fx.g), ctx);
  REQUIRE(c1.size() == 1);
  CHECK(c1.coefficient({}) == ctx.gram(fx.f, fx.g));

  CHECK(commutator(lowering(fx.f), lowering(fx.g), ctx).zero());
  CHECK(commutator(raising(fx.f), raising(fx.g), ctx).zero());
}

TEST_CASE("adjoint is an involution and an antihomomorphism") {
  Fixture fx;
  auto& ctx = fx.ctx;
  OperatorPolynomial P = multiply(lowering(fx.f), raising(fx.g), ctx);
  P += OperatorPolynomial::scalar({0.3, -0.7});
  P += multiply(raising(fx.h), raising(fx.f), ctx);
  CHECK(adjoint(adjoint(P)) == P);

  OperatorPolynomial Q = multiply(lowering(fx.h), lowering(fx.g), ctx);
  Q += raising(fx.f);
  CHECK(adjoint(multiply(P, Q, ctx)) == multiply(adjoint(Q), adjoint(P), ctx));
}

TEST_CASE("normal ordering single exchange") {
  Fixture fx;
  auto& ctx = fx.ctx;
  OperatorPolynomial P = multiply(lowering(fx.f), raising(fx.g), ctx);
  OperatorPolynomial N = normal_order(P, ctx);
  // a_f a_g^dag = a_g^dag a_f + (f,g)
  CHECK(N.coefficient({}) == ctx.gram(fx.f, fx.g));
  std::vector<LadderOp> swapped{{LadderOp::Kind::raise, fx.g}, {LadderOp::Kind::lower, fx.f}};
  CHECK(N.coefficient(swapped) == Complex{1, 0});
  CHECK(N.size() == 2);

  // already-normal monomials are unchanged
  CHECK(normal_order(N, ctx) == N);
}

TEST_CASE("vacuum expectation values") {
  Fixture fx;
  auto& ctx = fx.ctx;
  CHECK(vev(multiply(lowering(fx.f), raising(fx.g), ctx), ctx) == ctx.gram(fx.f, fx.g));
  CHECK(vev(multiply(raising(fx.f), lowering(fx.g), ctx), ctx) == Complex{0, 0});
  CHECK(vev_pairing_oracle(multiply(raising(fx.f), lowering(fx.g), ctx), ctx) == Complex{0, 0});

  // odd degree vanishes
  OperatorPolynomial odd = multiply(multiply(lowering(fx.f), raising(fx.g), ctx), lowering(fx.h), ctx);
  CHECK(vev(odd, ctx) == Complex{0, 0});
}

TEST_CASE("four-field vev is the full wick sum") {
  Fixture fx;
  auto& ctx = fx.ctx;
  // xi_{c} for real c: a_c + a_c^dag with c = f (real); use f four times with
  // distinct channels mixed in for generality
  OperatorPolynomial xi_f = lowering(fx.f) + raising(fx.f);
  OperatorPolynomial xi_g = lowering(fx.g) + raising(fx.g);
  OperatorPolynomial P = multiply(multiply(xi_f, xi_g, ctx), multiply(xi_f, xi_g, ctx), ctx);
  Complex direct = vev(P, ctx);
  Complex oracle = vev_pairing_oracle(P, ctx);
  CHECK(std::abs(direct - oracle) < 1e-12 * std::max(1.0, std::abs(direct)));
}

TEST_CASE("vev equals the pairing oracle on random polynomials") {
  Fixture fx;
  auto& ctx = fx.ctx;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> deg(0, 8);
  std::uniform_int_distribution<int> ch(0, static_cast<int>(ctx.channel_count()) - 1);
  std::uniform_int_distribution<int> kind(0, 1);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    OperatorPolynomial P;
    for (int mono = 0; mono < 3; ++mono) {
      std::vector<LadderOp> ops;
      int d = deg(rng);
      for (int i = 0; i < d; ++i)
        ops.push_back({kind(rng) ? LadderOp::Kind::raise : LadderOp::Kind::lower,
                       static_cast<ChannelId>(ch(rng))});
      P.add(std::move(ops), {coef(rng), coef(rng)});
    }
    Complex direct = vev(P, ctx);
    Complex oracle = vev_pairing_oracle(P, ctx);
    CHECK(std::abs(direct - oracle) <= 1e-12 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("field commutators are multiples of the identity") {
  Fixture fx;
  auto& ctx = fx.ctx;
  OperatorPolynomial xi1 = lowering(fx.f) + raising(fx.f);
  OperatorPolynomial xi2 = lowering(fx.g) + raising(fx.h);
  OperatorPolynomial c = commutator(xi1, xi2, ctx);
  CHECK(c.degree() == 0);
}

TEST_CASE("jacobi identity") {
  Fixture fx;
  auto& ctx = fx.ctx;
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> ch(0, 2);
  std::uniform_int_distribution<int> kind(0, 1);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  auto rand_poly = [&] {
    OperatorPolynomial P;
    for (int mono = 0; mono < 2; ++mono) {
      std::vector<LadderOp> ops;
      for (int i = 0; i < 2; ++i)
        ops.push_back({kind(rng) ? LadderOp::Kind::raise : LadderOp::Kind::lower,
                       static_cast<ChannelId>(ch(rng))});
      P.add(std::move(ops), {coef(rng), coef(rng)});
    }
    return P;
  };
  for (int trial = 0; trial < 20; ++trial) {
    OperatorPolynomial A = rand_poly(), B = rand_poly(), C = rand_poly();
    OperatorPolynomial J = commutator(A, commutator(B, C, ctx), ctx);
    J += commutator(B, commutator(C, A, ctx), ctx);
    J += commutator(C, commutator(A, B, ctx), ctx);
    OperatorPolynomial zero;
    CHECK(poly_distance(normal_order(J, ctx), zero) < 1e-12);
  }
}

TEST_CASE("vev positivity") {
  Fixture fx;
  auto& ctx = fx.ctx;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> ch(0, static_cast<int>(ctx.channel_count()) - 1);
  std::uniform_int_distribution<int> kind(0, 1);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    OperatorPolynomial P;
    for (int mono = 0; mono < 3; ++mono) {
      std::vector<LadderOp> ops;
      for (int i = 0; i < 3; ++i)
        ops.push_back({kind(rng) ? LadderOp::Kind::raise : LadderOp::Kind::lower,
                       static_cast<ChannelId>(ch(rng))});
      P.add(std::move(ops), {coef(rng), coef(rng)});
    }
    Complex norm2 = vev(multiply(adjoint(P), P, ctx), ctx);
    CHECK(norm2.real() >= -1e-10 * std::max(1.0, std::abs(norm2)));
    CHECK(std::abs(norm2.imag()) < 1e-10 * std::max(1.0, std::abs(norm2)));
  }
}

TEST_CASE("degree cap fails loudly") {
  Fixture fx;
  auto& ctx = fx.ctx;
  OperatorPolynomial big = OperatorPolynomial::scalar({1, 0});
  std::vector<LadderOp> ops(10, LadderOp{LadderOp::Kind::raise, fx.f});
  OperatorPolynomial ten;
  ten.add(ops, {1, 0});
  CHECK_THROWS_AS(multiply(ten, ten, ctx), DegreeOverflow);
}

TEST_CASE("registration dedup and frozen-context guard") {
  KernelContext ctx(KernelSpec::single_mass(1.0), kGrid);
  Channel c = plain_channel(gaussian({1, 0}, {0, 0}, {1, 1}, {0, 0}));
  ChannelId a = ctx.register_channel(c);
  ChannelId b = ctx.register_channel(c);
  CHECK(a == b);
  ctx.freeze();
  CHECK(ctx.register_channel(c) == a);  // existing keys stay available
  Channel other = plain_channel(gaussian({1, 0}, {1, 1}, {1, 1}, {0, 0}));
  CHECK_THROWS_AS(ctx.register_channel(other), InvariantViolation);
  CHECK_THROWS_AS(ctx.channel(99), UnregisteredChannel);
}

TEST_CASE("json serialization golden form") {
  Fixture fx;
  OperatorPolynomial P;
  P.add({{LadderOp::Kind::raise, fx.g}, {LadderOp::Kind::lower, fx.f}}, {0.5, -1.5});
  P.add({}, {2.0, 0.0});
  nlohmann::json j = to_json(P);
  const std::string golden =
      R"([{"coeff":[2.0,0.0],"ops":[]},{"coeff":[0.5,-1.5],"ops":[{"channel_id":1,"kind":"raise"},{"channel_id":0,"kind":"lower"}]}])";
  CHECK(j.dump() == golden);
  CHECK(polynomial_from_json(j) == P);
}
