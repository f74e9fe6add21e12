#include "qdyn/resources.hpp"

#include <algorithm>
#include <ostream>

#include "qdyn/errors.hpp"

namespace qdyn {

namespace {

using boost::multiprecision::denominator;
using boost::multiprecision::numerator;
using boost::multiprecision::pow;

void require_width(int m) {
  if (m < 2) throw ValidationError("precision m must be at least 2");
}

// 5/4 m^3 + 5/2 m^2: one polynomial-interpolation pass per Horner stage.
Count horner_unit(int m) {
  const BigInt mm = m;
  return Count(5 * mm * mm * mm + 10 * mm * mm, 4);
}

std::int64_t pair_dof(int particles) { return particles == 2 ? 1 : 3 * std::int64_t{particles} - 6; }

constexpr int kScanLimit = 1 << 20;

}  // namespace

std::string format_count(const Count& c) {
  const BigInt num = numerator(c), den = denominator(c);
  if (den == 1) return num.str();
  BigInt rest = den;
  int twos = 0, fives = 0;
  while (rest % 2 == 0) rest /= 2, ++twos;
  while (rest % 5 == 0) rest /= 5, ++fives;
  if (rest != 1) return num.str() + "/" + den.str();
  const int digits = std::max(twos, fives);
  const BigInt scale = pow(BigInt(10), digits);
  const BigInt scaled = abs(num) * scale / den;  // exact by construction
  std::string frac = BigInt(scaled % scale).str();
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  return (num < 0 ? "-" : "") + BigInt(scaled / scale).str() + "." + frac;
}

double to_double(const Count& c) { return c.convert_to<double>(); }

Count coulomb_gates_per_pair(int m) {
  require_width(m);
  const BigInt mm = m;
  return Count(75 * mm * mm * mm + 102 * mm * mm, 4);
}

Count coulomb_gates_per_step(int particles, int m) {
  if (particles < 2) throw ValidationError("Coulomb cost needs at least two particles");
  const BigInt b = particles;
  return coulomb_gates_per_pair(m) * Count(b * (b - 1) / 2);
}

std::int64_t qubit_count(int particles, int n, int m, std::optional<int> dof) {
  require_width(m);
  if (n < 1) throw ValidationError("qubits per axis must be positive");
  if (particles < 1) throw ValidationError("particle count must be positive");
  if (!dof && particles < 3) {
    throw ValidationError("3B - 6 degrees of freedom need B >= 3; pass an explicit dof for atoms and diatomics");
  }
  const std::int64_t d = dof ? *dof : 3 * std::int64_t{particles} - 6;
  if (d < 1) throw ValidationError("degree-of-freedom override must be positive");
  return std::int64_t{n} * d + 4 * std::int64_t{m};
}

BoCost bo_gates_per_nuclear_step(int K, int d, int m) {
  require_width(m);
  if (K < 2) throw ValidationError("interpolation degree K must be at least 2");
  if (d < 1) throw ValidationError("nuclear degrees of freedom must be positive");
  const BigInt k = K;
  const Count unit = horner_unit(m);
  BoCost c;
  c.exact = Count(pow(k, d + 1), k - 1) * unit;
  c.approx = Count(pow(k, d)) * unit;
  const BigInt regs = pow(k, d - 1);
  c.registers = (regs + k - 2) / (k - 1);
  return c;
}

int MoleculeModel::nuclear_dof() const { return std::max(1, 3 * atoms - 6); }

CrossoverPoint crossover_costs(int Z, int atoms, int K, int m, int step_ratio) {
  if (Z < 1) throw ValidationError("atomic number must be positive");
  if (atoms < 2) throw ValidationError("a reaction needs at least two atoms");
  if (step_ratio < 1) throw ValidationError("step ratio must be positive");
  const MoleculeModel mol{Z, atoms};
  CrossoverPoint p;
  p.atoms = atoms;
  p.diabatic = Count(step_ratio) * coulomb_gates_per_step(mol.particles(), m);
  p.bo = bo_gates_per_nuclear_step(K, mol.nuclear_dof(), m).approx;
  return p;
}

int crossover_atoms(int Z, int K, int m, int step_ratio) {
  // BO cost grows as K^{3 N_a} against a quadratic, so the scan terminates.
  for (int atoms = 2; atoms < kScanLimit; ++atoms) {
    const auto p = crossover_costs(Z, atoms, K, m, step_ratio);
    if (p.diabatic <= p.bo) return atoms;
  }
  throw DomainError("no crossover below the scan limit");
}

FeasibilityReport feasibility_report(const BigInt& gate_budget, std::int64_t qubit_budget, int n, int m,
                                     std::int64_t steps) {
  if (gate_budget <= 0 || qubit_budget <= 0) throw ValidationError("budgets must be positive");
  if (steps < 1) throw ValidationError("step count must be positive");
  FeasibilityReport r;
  // Both costs grow with B, so the first row past either budget ends the scan.
  for (int b = 2; b < kScanLimit; ++b) {
    FeasibilityRow row;
    row.particles = b;
    row.qubits = qubit_count(b, n, m, static_cast<int>(pair_dof(b)));
    row.gates_per_step = coulomb_gates_per_step(b, m);
    row.total_gates = row.gates_per_step * Count(BigInt(steps));
    row.fits = row.qubits <= qubit_budget && row.total_gates <= Count(gate_budget);
    r.rows.push_back(row);
    if (!row.fits) break;
    r.max_particles = b;
  }
  r.feasible = r.max_particles >= 2;
  return r;
}

void write_qubits_csv(std::ostream& out, const std::vector<int>& n_values, int m, int max_particles) {
  out << "n,m,particles,qubits\n";
  for (int n : n_values) {
    for (int b = 2; b <= max_particles; ++b) {
      out << n << ',' << m << ',' << b << ',' << qubit_count(b, n, m, static_cast<int>(pair_dof(b))) << '\n';
    }
  }
}

void write_gates_csv(std::ostream& out, const std::vector<int>& m_values, std::int64_t steps, int max_particles) {
  out << "m,particles,gates_per_step,total_gates\n";
  for (int m : m_values) {
    for (int b = 2; b <= max_particles; ++b) {
      const Count g = coulomb_gates_per_step(b, m);
      out << m << ',' << b << ',' << format_count(g) << ',' << format_count(g * Count(BigInt(steps))) << '\n';
    }
  }
}

void write_crossover_csv(std::ostream& out, const std::vector<int>& z_values, int K, int m, int step_ratio,
                         int max_atoms) {
  out << "Z,atoms,particles,nuclear_dof,diabatic_gates,bo_gates,diabatic_wins\n";
  for (int z : z_values) {
    for (int a = 2; a <= max_atoms; ++a) {
      const auto p = crossover_costs(z, a, K, m, step_ratio);
      const MoleculeModel mol{z, a};
      out << z << ',' << a << ',' << mol.particles() << ',' << mol.nuclear_dof() << ',' << format_count(p.diabatic)
          << ',' << format_count(p.bo) << ',' << (p.diabatic <= p.bo ? 1 : 0) << '\n';
    }
  }
}

}  // namespace qdyn
