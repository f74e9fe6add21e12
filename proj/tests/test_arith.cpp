#include <cmath>
#include <random>
#include <sstream>

#include "arith_support.hpp"
#include "doctest.h"
#include "qdyn/errors.hpp"
#include "support.hpp"

using namespace qdyn;
using qdyn::testing::run_basis;

TEST_CASE("fixed-point encoding round-trips") {
  const FixedPointSpec fp(6, 0.5);
  CHECK(fp.modulus() == 64);
  CHECK(fp.max_value() == 63);
  CHECK(fp.dt() == doctest::Approx(2 * M_PI / 64));
  for (std::uint64_t v = 0; v < 64; ++v) CHECK(fp.encode(fp.decode(v)) == v);
  CHECK_THROWS_AS(fp.encode(32.0), DomainError);
  CHECK_THROWS_AS(fp.encode(-1.0), DomainError);
  CHECK_THROWS_AS(fp.encode(NAN), DomainError);
  CHECK_THROWS_AS(FixedPointSpec(0), ValidationError);
}

TEST_CASE("Draper adder is exhaustive at m=3") {
  const auto c = make_adder(3);
  for (std::uint64_t a = 0; a < 8; ++a) {
    for (std::uint64_t b = 0; b < 8; ++b) {
      const auto r = run_basis(c, {{"a", a}, {"b", b}}, {"a", "b"});
      CHECK(r.at("a") == a);
      CHECK(r.at("b") == oracle::add(a, b, 3));
    }
  }
  CHECK(make_adder(4).circuit.ledger().total() == 24);
  Circuit overlap(6);
  CHECK_THROWS_AS(append_draper_add(overlap, {0, 3}, {2, 3}), ValidationError);
}

TEST_CASE("controlled adder is exhaustive at m=3") {
  const auto c = make_controlled_adder(3);
  for (std::uint64_t ctrl = 0; ctrl < 2; ++ctrl) {
    for (std::uint64_t a = 0; a < 8; ++a) {
      for (std::uint64_t b = 0; b < 8; ++b) {
        const auto r = run_basis(c, {{"ctrl", ctrl}, {"a", a}, {"b", b}}, {"b"});
        CHECK(r.at("b") == oracle::controlled_add(ctrl, a, b, 3));
      }
    }
  }
  const auto row = audit_counts(ArithKind::ControlledAdder, 4);
  CHECK(row.measured == 40);
  Circuit bad(7);
  CHECK_THROWS_AS(append_controlled_add(bad, 1, {0, 3}, {3, 3}), ValidationError);
}

TEST_CASE("multiplier keeps the top bits, rounding toward zero") {
  const auto c = make_multiplier(3);
  for (std::uint64_t a = 0; a < 8; ++a) {
    CHECK(run_basis(c, {{"a", a}, {"b", 0}}, {"out"}).at("out") == 0);
    for (std::uint64_t b = 0; b < 8; ++b) {
      CHECK(run_basis(c, {{"a", a}, {"b", b}}, {"out"}).at("out") == (a * b) >> 3);
    }
  }
  CHECK(make_multiplier(4).circuit.ledger().total() == 96);
  // Non-default window.
  const auto w = make_multiplier(4, 2);
  for (std::uint64_t a = 0; a < 16; a += 3) {
    for (std::uint64_t b = 0; b < 16; b += 5) {
      CHECK(run_basis(w, {{"a", a}, {"b", b}}, {"out"}).at("out") == oracle::product(a, b, 2, 4));
    }
  }
}

TEST_CASE("squarer is exhaustive at m=3") {
  const auto c = make_squarer(3);
  for (std::uint64_t a = 0; a < 8; ++a) CHECK(run_basis(c, {{"a", a}}, {"out"}).at("out") == (a * a) >> 3);
}

TEST_CASE("r squared: 1D exhaustive and identical points") {
  const auto c = make_r_squared(3, 1);
  for (std::uint64_t xi = 0; xi < 8; ++xi) {
    for (std::uint64_t xj = 0; xj < 8; ++xj) {
      CHECK(run_basis(c, {{"xi0", xi}, {"xj0", xj}}, {"S"}).at("S") == oracle::r_squared({xi}, {xj}, 3));
    }
  }
  const auto c3 = make_r_squared(4, 3);
  const auto r = run_basis(c3, {{"xi0", 5}, {"xi1", 2}, {"xi2", 7}, {"xj0", 5}, {"xj1", 2}, {"xj2", 7}}, {"S"});
  CHECK(r.at("S") == 0);
  const auto row = audit_counts(ArithKind::RSquared, 4);
  CHECK(row.model == 360);
}

TEST_CASE("inverse square root circuit mirrors the integer iteration") {
  for (int m : {3, 4}) {
    const auto c = make_inv_sqrt(m);
    const int ix = default_integer_bits(m);
    for (std::uint64_t S = 0; S < (1u << m); ++S) {
      CHECK(run_basis(c, {{"S", S}}, {"x"}).at("x") == oracle::inv_sqrt_raw(S, m, ix));
    }
  }
  CHECK(audit_counts(ArithKind::InvSqrt, 4).model == 1248);
  CHECK_THROWS_AS(oracle::inv_sqrt(0, 16, 2), DomainError);
  CHECK_THROWS_AS(make_inv_sqrt(4, 2), ValidationError);
}

TEST_CASE("Newton-Raphson accuracy over the calibrated range") {
  const int m = 16, ix = 2;
  const double ulp = std::ldexp(1.0, -(m - ix));
  // S = 1/4 is a fixed point: 1/sqrt(S) = 2 exactly.
  CHECK(std::abs(oracle::inv_sqrt(std::uint64_t{1} << (m - 2), m, ix) * ulp - 2.0) <= ulp);
  double worst = 0.0;
  bool monotone = true;
  const int samples = 10000;
  for (int k = 0; k < samples; ++k) {
    const double s = 1.0 / 16 + (0.75 - 1.0 / 16) * (k + 0.5) / samples;
    const auto S = static_cast<std::uint64_t>(std::floor(std::ldexp(s, m)));
    const double exact = 1 / std::sqrt(std::ldexp(static_cast<double>(S), -m));
    const auto trace = oracle::inv_sqrt_trace(S, m, ix);
    REQUIRE(trace.size() == 5);
    // Error shrinks every iteration until it reaches the truncation floor,
    // where it may wander by a few ulps but never leaves the floor.
    const double floor = 3e-4 * exact;
    double prev = INFINITY;
    for (auto x : trace) {
      const double err = std::abs(x * ulp - exact);
      if (err > std::max(prev, floor)) monotone = false;
      prev = err;
    }
    worst = std::max(worst, std::abs(trace.back() * ulp - exact) / exact);
  }
  CHECK(worst <= 3e-4);
  CHECK(monotone);
}

TEST_CASE("Coulomb oracle for two and three particles") {
  const int m = 4;
  SUBCASE("pair, exhaustive 1D at m=3") {
    const auto c = make_coulomb(3, 2, 1, {1, 1});
    for (std::uint64_t a = 0; a < 8; ++a) {
      for (std::uint64_t b = 0; b < 8; ++b) {
        const auto r = run_basis(c, {{"p0_0", a}, {"p1_0", b}}, {"out"});
        CHECK(r.at("out") == oracle::coulomb({{a}, {b}}, {1, 1}, 3, 1));
      }
    }
  }
  SUBCASE("unit charges half a unit apart encode 2") {
    const int mm = 8, ix = default_integer_bits(mm);
    const auto c = make_coulomb(mm, 2, 1, {1, 1});
    const auto out = run_basis(c, {{"p0_0", 16}, {"p1_0", 144}}, {"out"}).at("out");
    const double value = std::ldexp(static_cast<double>(out), -(mm - ix));
    CHECK(std::abs(value - 2.0) / 2.0 <= 3e-4 + std::ldexp(1.0, -(mm - ix)));
  }
  SUBCASE("three particles equal the sum of their pairs") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::uint64_t> pos(0, 15);
    const std::vector<std::int64_t> q{1, -2, 3};
    const auto c = make_coulomb(m, 3, 1, q, {.uncompute = true});
    for (int trial = 0; trial < 100; ++trial) {
      const std::uint64_t a = pos(rng), b = pos(rng), d = pos(rng);
      qdyn::testing::BasisRun run;
      const auto r = run_basis(c, {{"p0_0", a}, {"p1_0", b}, {"p2_0", d}}, {"out", "p0_0", "p1_0", "p2_0"}, &run);
      std::uint64_t sum = 0;
      for (auto [i, j, xi, xj] : {std::tuple{0, 1, a, b}, {0, 2, a, d}, {1, 2, b, d}}) {
        sum += oracle::coulomb({{xi}, {xj}}, {q[i], q[j]}, m, default_integer_bits(m));
      }
      CHECK(r.at("out") == (sum & 15));
      CHECK(r.at("p0_0") == a);
      CHECK(run.scratch_clean);
      CHECK(std::abs(run.amplitude - 1.0) < 1e-9);
    }
  }
  const auto row = audit_counts(ArithKind::Coulomb, 4);
  CHECK(row.model - 1.5 * m * m == 1608);
}

TEST_CASE("kinetic oracle squares the signed frequency") {
  const int n = 3, m = 3;
  const auto c = make_kinetic(n, m, 1, {1}, 1);
  for (std::uint64_t k = 0; k < 8; ++k) {
    qdyn::testing::BasisRun run;
    const auto r = run_basis(c, {{"k0", k}}, {"out", "k0"}, &run);
    CHECK(r.at("out") == oracle::kinetic({k}, n, {1}, 1, m));
    CHECK(r.at("k0") == k);
    CHECK(run.scratch_clean);
  }
  CHECK(run_basis(c, {{"k0", 0}}, {"out"}).at("out") == 0);
  // p and -p (wraparound index) give the same value.
  for (std::uint64_t k = 1; k < 4; ++k) {
    CHECK(run_basis(c, {{"k0", k}}, {"out"}).at("out") == run_basis(c, {{"k0", 8 - k}}, {"out"}).at("out"));
  }
  const auto two = make_kinetic(3, 5, 2, {3, 1}, 0);
  CHECK(run_basis(two, {{"k0", 6}, {"k1", 3}}, {"out"}).at("out") == oracle::kinetic({6, 3}, 3, {3, 1}, 0, 5));
}

TEST_CASE("arithmetic circuits are reversible and linear") {
  std::mt19937_64 rng(23);
  for (const auto& c : {make_adder(4), make_controlled_adder(4), make_multiplier(4), make_squarer(5)}) {
    const auto Q = c.layout.total_qubits();
    REQUIRE(Q <= 16);
    const auto v = qdyn::testing::random_state(std::size_t{1} << Q, rng);
    auto s = CircuitState::from_amplitudes(c.layout, v);
    s.apply(c.circuit);
    s.apply(c.circuit.inverse());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(s.amplitudes()[i] - v[i]) < 1e-10);
  }
  // Two-term superposition maps to the superposition of the images.
  const auto c = make_multiplier(3);
  std::uniform_int_distribution<std::uint64_t> pick(0, 7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t a1 = pick(rng), b1 = pick(rng), a2 = pick(rng), b2 = (b1 + 1 + pick(rng) % 7) % 8;
    const Complex w1 = std::polar(0.6, 0.3), w2 = std::polar(0.8, -1.2);
    std::vector<Complex> amps(std::size_t{1} << c.layout.total_qubits());
    amps[a1 | (b1 << 3)] = w1;
    amps[a2 | (b2 << 3)] = w2;
    auto s = CircuitState::from_amplitudes(c.layout, amps);
    s.apply(c.circuit);
    const auto image = [](std::uint64_t a, std::uint64_t b) {
      return a | (b << 3) | (((a * b) & 7) << 6) | (((a * b) >> 3) << 9);
    };
    CHECK(std::abs(s.amplitudes()[image(a1, b1)] - w1) < 1e-10);
    CHECK(std::abs(s.amplitudes()[image(a2, b2)] - w2) < 1e-10);
  }
}

TEST_CASE("audit counts") {
  for (int m : {2, 4, 8}) {
    CHECK(audit_counts(ArithKind::Adder, m).measured == 1.5 * m * m);
    CHECK(audit_counts(ArithKind::ControlledAdder, m).measured == 2.5 * m * m);
    CHECK(audit_counts(ArithKind::Multiply, m).measured == 1.25 * m * m * m + m * m);
  }
  const auto row = audit_counts(ArithKind::Coulomb, 16);
  CHECK(row.ratio >= 0.98);
  CHECK(row.ratio <= 1.02);
  CHECK(audit_counts(ArithKind::Coulomb, 16).elementary_rotation_class == row.elementary_rotation_class);
  CHECK_THROWS_AS(audit_counts(ArithKind::Adder, 1), ValidationError);
  std::ostringstream csv;
  write_audit_csv(csv, {audit_counts(ArithKind::Adder, 4)});
  CHECK(csv.str().rfind("kind,m,measured,formula,ratio", 0) == 0);
  CHECK(csv.str().find("adder,4,24,24,1,") != std::string::npos);
  CHECK(parse_arith_kind("coulomb") == ArithKind::Coulomb);
  CHECK_THROWS_AS(parse_arith_kind("divide"), ValidationError);
}
