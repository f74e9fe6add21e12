#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace qdyn {

/// Exact gate counts. Per-pair costs carry quarter gates for odd m, and the
/// exact Born-Oppenheimer form divides by K - 1, so counts are rationals.
using Count = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Integer when whole, a terminating decimal when the denominator divides
/// a power of ten, "p/q" otherwise.
std::string format_count(const Count& c);
double to_double(const Count& c);

/// 75/4 m^3 + 51/2 m^2 gates to evaluate one Coulomb pair term.
Count coulomb_gates_per_pair(int m);
/// Per-pair cost times B(B-1)/2.
Count coulomb_gates_per_step(int particles, int m);

/// n * dof + 4m with dof = 3B - 6 unless overridden. B < 3 needs an
/// explicit dof (atoms and diatomics do not fit the nonlinear form).
std::int64_t qubit_count(int particles, int n, int m, std::optional<int> dof = std::nullopt);

struct BoCost {
  Count exact;      // K^{d+1} / (K-1) * (5/4 m^3 + 5/2 m^2)
  Count approx;     // K^d * (5/4 m^3 + 5/2 m^2)
  BigInt registers; // ceil(K^{d-1} / (K-1)) temporary registers
};
/// Cost of one Born-Oppenheimer potential evaluation by nested Horner
/// interpolation of degree K in d nuclear coordinates.
BoCost bo_gates_per_nuclear_step(int K, int d, int m);

/// Homonuclear molecule of N_a atoms with atomic number Z.
struct MoleculeModel {
  int atomic_number = 1;
  int atoms = 2;
  int particles() const { return atoms * (atomic_number + 1); }
  /// 3 N_a - 6, floored at one for the diatomic stretch.
  int nuclear_dof() const;
};

struct CrossoverPoint {
  int atoms = 0;
  Count diabatic;  // ratio * Coulomb cost over all B particles
  Count bo;        // K^d approximation
};
/// Per-nuclear-step costs of both treatments.
CrossoverPoint crossover_costs(int Z, int atoms, int K, int m, int step_ratio = 1000);
/// Smallest atom count (from two) at which the diabatic treatment is no
/// more expensive than the Born-Oppenheimer one.
int crossover_atoms(int Z, int K, int m, int step_ratio = 1000);

struct FeasibilityRow {
  int particles = 0;
  std::int64_t qubits = 0;
  Count gates_per_step;
  Count total_gates;
  bool fits = false;
};

struct FeasibilityReport {
  int max_particles = 0;  // 0 when not even one pair fits
  bool feasible = false;
  std::vector<FeasibilityRow> rows;  // B = 2 .. first B past both budgets
};

/// Largest particle count with qubit_count <= qubit budget and
/// steps * coulomb_gates_per_step <= gate budget. B = 2 uses one relative
/// degree of freedom.
FeasibilityReport feasibility_report(const BigInt& gate_budget, std::int64_t qubit_budget, int n, int m,
                                     std::int64_t steps);

/// Qubits against particle count for each n.
void write_qubits_csv(std::ostream& out, const std::vector<int>& n_values, int m, int max_particles);
/// Gates per step and per run against particle count for each m.
void write_gates_csv(std::ostream& out, const std::vector<int>& m_values, std::int64_t steps, int max_particles);
/// Born-Oppenheimer against diabatic cost per atom count for each Z.
void write_crossover_csv(std::ostream& out, const std::vector<int>& z_values, int K, int m, int step_ratio,
                         int max_atoms);

}  // namespace qdyn
