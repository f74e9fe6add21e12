#include <sstream>
#include <string>

#include "doctest.h"
#include "qdyn/arith.hpp"
#include "qdyn/errors.hpp"
#include "qdyn/resources.hpp"

using namespace qdyn;

namespace {

// Quarter-gate Coulomb cost per pair, in plain 128-bit arithmetic.
__int128 pair_quarters(__int128 m) { return 75 * m * m * m + 102 * m * m; }

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("Coulomb gate counts") {
  CHECK(coulomb_gates_per_pair(10) == 21300);
  CHECK(coulomb_gates_per_pair(20) == 160200);
  CHECK(coulomb_gates_per_step(2, 10) == coulomb_gates_per_pair(10));
  for (int m = 2; m <= 40; ++m) {
    CHECK(coulomb_gates_per_pair(m) * 4 == Count(BigInt(static_cast<long long>(pair_quarters(m)))));
    // Same closed form the arithmetic audit compares measured tallies against.
    CHECK(coulomb_gates_per_pair(m) * 4 == formula_quarter_gates(ArithKind::Coulomb, m));
    CHECK(coulomb_gates_per_step(7, m) == coulomb_gates_per_pair(m) * 21);
  }
  CHECK(format_count(coulomb_gates_per_pair(3)) == "735.75");
  CHECK(format_count(Count(1, 3)) == "1/3");
  CHECK(format_count(Count(-5, 2)) == "-2.5");
  CHECK_THROWS_AS(coulomb_gates_per_pair(1), ValidationError);
  CHECK_THROWS_AS(coulomb_gates_per_step(1, 10), ValidationError);
}

TEST_CASE("measured Coulomb tally tracks the closed form") {
  const auto row = audit_counts(ArithKind::Coulomb, 16);
  CHECK(row.ratio >= 0.98);
  CHECK(row.ratio <= 1.02);
}

TEST_CASE("qubit counts") {
  CHECK(qubit_count(4, 10, 10) == 100);
  CHECK(qubit_count(10, 10, 10) == 280);
  CHECK(qubit_count(3, 10, 10) == 70);
  for (int m = 2; m < 30; ++m) CHECK(qubit_count(6, 8, m + 1) - qubit_count(6, 8, m) == 4);
  CHECK(qubit_count(2, 10, 10, 1) == 50);
  CHECK_THROWS_AS(qubit_count(2, 10, 10), ValidationError);
  CHECK_THROWS_AS(qubit_count(5, 0, 10), ValidationError);
  CHECK_THROWS_AS(qubit_count(2, 10, 10, 0), ValidationError);
}

TEST_CASE("Born-Oppenheimer interpolation cost") {
  const auto c = bo_gates_per_nuclear_step(15, 9, 20);
  CHECK(c.approx == Count(BigInt("38443359375") * 11000));
  CHECK(c.exact == c.approx * Count(15, 14));
  CHECK(c.registers == BigInt("183063617"));  // ceil(15^8 / 14)
  const auto d1 = bo_gates_per_nuclear_step(7, 1, 6);
  CHECK(d1.exact == Count(49, 6) * Count(5 * 216 + 10 * 36, 4));
  CHECK(d1.registers == 1);
  const auto small = bo_gates_per_nuclear_step(2, 2, 4);
  CHECK(small.exact / small.approx == 2);
  CHECK(small.approx == 4 * Count(5 * 64 + 10 * 16, 4));
  // Counts far past 64 bits stay exact.
  const auto big = bo_gates_per_nuclear_step(30, 40, 32);
  CHECK(big.approx == Count(boost::multiprecision::pow(BigInt(30), 40) * (5 * 32768 + 10 * 1024) / 4));
  CHECK_THROWS_AS(bo_gates_per_nuclear_step(1, 3, 10), ValidationError);
  CHECK_THROWS_AS(bo_gates_per_nuclear_step(15, 0, 10), ValidationError);
}

TEST_CASE("diabatic versus Born-Oppenheimer crossover") {
  CHECK(crossover_atoms(100, 15, 20) == 5);
  CHECK(crossover_atoms(100, 15, 10) == 5);
  const auto at5 = crossover_costs(100, 5, 15, 20);
  CHECK(at5.diabatic == Count(BigInt(127260) * 160200 * 1000));
  CHECK(to_double(at5.diabatic) == doctest::Approx(2.04e13).epsilon(0.005));
  CHECK(to_double(at5.bo) == doctest::Approx(4.23e14).epsilon(0.005));
  const auto at4 = crossover_costs(100, 4, 15, 20);
  CHECK(at4.diabatic > at4.bo);
  for (int z = 1; z <= 100; ++z) {
    CHECK(crossover_atoms(z, 15, 10) == crossover_atoms(z, 15, 20));
    int prev = crossover_atoms(z, 2, 20);
    for (int k = 3; k <= 30; ++k) {
      const int next = crossover_atoms(z, k, 20);
      CHECK(next <= prev);
      prev = next;
    }
  }
  CHECK(MoleculeModel{100, 5}.particles() == 505);
  CHECK(MoleculeModel{1, 2}.nuclear_dof() == 1);
}

TEST_CASE("feasibility frontier") {
  SUBCASE("ten particles fit the 300-qubit, billion-gate machine") {
    const auto r = feasibility_report(BigInt(1000000000), 300, 10, 10, 1000);
    CHECK(r.feasible);
    CHECK(r.max_particles == 10);
    const auto& last = r.rows.back();
    CHECK(last.particles == 11);
    CHECK(!last.fits);
    CHECK(last.total_gates > Count(BigInt(1000000000)));
    CHECK(r.rows[r.rows.size() - 2].total_gates == Count(BigInt(958500000)));
  }
  SUBCASE("qubit budget can bind first") {
    CHECK(feasibility_report(boost::multiprecision::pow(BigInt(10), 30), 300, 10, 10, 1000).max_particles == 10);  // 310 qubits at B = 11
    CHECK(feasibility_report(boost::multiprecision::pow(BigInt(10), 30), 70, 10, 10, 1000).max_particles == 3);
  }
  SUBCASE("budget below one pair-step is infeasible") {
    const auto r = feasibility_report(BigInt(21299), 300, 10, 10, 1);
    CHECK(!r.feasible);
    CHECK(r.max_particles == 0);
    CHECK(r.rows.size() == 1);
  }
  CHECK_THROWS_AS(feasibility_report(BigInt(0), 300, 10, 10, 1), ValidationError);
}

TEST_CASE("figure data") {
  std::ostringstream q, g, x;
  write_qubits_csv(q, {8, 10}, 10, 12);
  write_gates_csv(g, {10, 20}, 1000, 12);
  write_crossover_csv(x, {1, 100}, 15, 20, 1000, 8);
  CHECK(q.str().rfind("n,m,particles,qubits\n", 0) == 0);
  CHECK(count_lines(q.str()) == 1 + 2 * 11);
  CHECK(q.str().find("\n10,10,10,280\n") != std::string::npos);
  CHECK(count_lines(g.str()) == 1 + 2 * 11);
  CHECK(g.str().find("\n10,2,21300,21300000\n") != std::string::npos);
  CHECK(count_lines(x.str()) == 1 + 2 * 7);
  CHECK(x.str().find("\n100,4,404,6,") != std::string::npos);
  CHECK(x.str().find("\n100,5,505,9,20387052000000,") != std::string::npos);
}
