#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qdyn/arith.hpp"
#include "qdyn/circuit.hpp"
#include "qdyn/grid.hpp"
#include "qdyn/state.hpp"

namespace qdyn {

/// Appends X on bit 0 and a QFT, turning |0> into the addition eigenstate
/// sum_y exp(+2 pi i y / M) |y> / sqrt(M). Adding q to that register
/// multiplies the state by exp(-2 pi i q / M).
void append_kickback_ancilla(Circuit& c, QubitRange ancilla);
/// Same on a standalone m-qubit circuit.
Circuit prepare_kickback_ancilla(int m);
/// The prepared ancilla amplitudes, indexed by register value.
std::vector<Complex> kickback_ancilla_state(int m);

/// Integer phase table for one diagonal factor.
struct QuantizedTable {
  std::vector<std::uint64_t> table;
  double offset = 0.0;           // value subtracted before scaling (global phase only)
  double counts_per_unit = 0.0;  // table ~= (value - offset) * counts_per_unit
  double max_phase_error = 0.0;  // per-step bound pi / M from rounding
  bool clamped = false;          // max-fit tables never wrap
};

/// Max-fit quantization: the largest value maps to M-1, the smallest to 0.
/// A constant potential gives an all-zero table. Rejects non-finite samples.
QuantizedTable quantize_potential(const RealField& potential, const GridSpec& grid,
                                  const FixedPointSpec& fp);
/// Physical-step quantization: table = round((V - V_min) * M dt / 2 pi) mod M,
/// so exp(-2 pi i table / M) approximates exp(-i V dt) up to a global phase.
QuantizedTable quantize_potential_physical(const RealField& potential, const GridSpec& grid,
                                           const FixedPointSpec& fp, double dt);
/// Kinetic table over momentum indices (same flat layout as positions):
/// round(sum_a p_a^2 / (2 m_a) * M dt / 2 pi) mod M.
QuantizedTable quantize_kinetic(const GridSpec& grid, std::span<const double> masses,
                                const FixedPointSpec& fp, double dt);
/// 2 pi table / M, the phases the classical propagator uses for the same table.
std::vector<double> table_phases(const std::vector<std::uint64_t>& table, const FixedPointSpec& fp);

/// Pairwise Coulomb potential evaluated live by the reversible oracle.
/// Grid axes are grouped per particle: axis i * dims + a is coordinate a of
/// particle i. Requires qubits per axis == m.
struct ArithmeticPotential {
  int particles = 2;
  int dims = 1;
  std::vector<std::int64_t> charges;
  int ix = -1;
};

/// Kinetic term evaluated live: sum_a w_a * floor(k_a^2 / 2^shift).
struct ArithmeticKinetic {
  std::vector<std::int64_t> weights;
  int shift = 0;
};

struct KickbackPlan {
  GridSpec grid = GridSpec(1, {{0.0, 1.0}});
  FixedPointSpec fp;
  int steps = 1;
  // Table sources. An empty kinetic table disables the kinetic factor.
  std::vector<std::uint64_t> potential_table;
  std::vector<std::uint64_t> kinetic_table;
  // Live arithmetic sources replace the corresponding table when set.
  std::optional<ArithmeticPotential> arithmetic_potential;
  std::optional<ArithmeticKinetic> arithmetic_kinetic;
  double v_min = 0.0;  // logged; contributes only a global phase

  bool live() const { return arithmetic_potential || arithmetic_kinetic; }
  /// Throws ValidationError on inconsistent sizes or out-of-range entries.
  void validate() const;
  /// Integer tables the circuit realizes (computed from the oracle in live
  /// mode), used to build the classical reference.
  std::vector<std::uint64_t> effective_potential_table() const;
  std::vector<std::uint64_t> effective_kinetic_table() const;
};

/// Registers x0.. (n each), "anc" (m), then any oracle scratch.
struct CompiledPlan {
  RegisterLayout layout;
  Circuit prepare;  // ancilla preparation
  Circuit step;     // one Trotter step
  std::vector<std::string> position_regs;
  std::string ancilla = "anc";
  int position_qubits = 0;
  /// Qubits that hold superpositions: positions plus ancilla.
  int active_qubits() const;
};

CompiledPlan compile_plan(const KickbackPlan& plan);
/// V kickback, per-axis inverse QFT to momentum, T kickback, per-axis QFT.
Circuit step_circuit(const KickbackPlan& plan);

/// Classical split-operator propagator driven by the plan's integer tables.
SplitOperatorPropagator reference_propagator(const KickbackPlan& plan);

struct Snapshot {
  int step = 0;
  GridWavefunction state;
  double fidelity = 1.0;             // against the reference propagator
  double product_deviation = 0.0;    // ancilla separability
};

struct EvolveOptions {
  int stride = 0;  // snapshot every `stride` steps (0: final state only)
  int qubit_cap = kDefaultQubitCap;
  double separability_tolerance = 1e-8;
  bool compare_reference = true;
  std::function<void(const Snapshot&)> on_snapshot;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  GridWavefunction final_state = GridWavefunction(GridSpec(1, {{0.0, 1.0}}), {1.0, 0.0});
  double final_fidelity = 1.0;
  double max_product_deviation = 0.0;
  GateTally step_tally;
  int qubits = 0;
  std::size_t peak_terms = 0;  // sparse engine only
};

/// Runs plan.steps kickback steps from psi0, checking ancilla separability
/// after every step (ContractViolation on breach). Table plans run on the
/// dense engine and are bounded by the qubit cap (ResourceCapError); live
/// plans run on the sparse engine, where the cap bounds the active qubits.
Trajectory evolve(const KickbackPlan& plan, const GridWavefunction& psi0, const EvolveOptions& opt = {});

/// JSON run manifest: plan parameters, fidelities, tallies.
void write_manifest(std::ostream& out, const KickbackPlan& plan, const Trajectory& traj,
                    const std::string& scenario = "");

}  // namespace qdyn
