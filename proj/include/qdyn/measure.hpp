#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdyn/circuit.hpp"
#include "qdyn/grid.hpp"
#include "qdyn/prep.hpp"
#include "qdyn/state.hpp"

namespace qdyn {

// --- Regions ----------------------------------------------------------------

/// A labeled region: union of half-open boxes. Box bounds may be infinite.
struct Region {
  std::string name;
  std::vector<Box> boxes;
};

/// Disjoint labeled regions; points no box covers get `default_label`.
class RegionMap {
 public:
  /// Rejects overlapping boxes across regions, malformed boxes, and a
  /// default label outside [0, r).
  RegionMap(std::vector<Region> regions, int default_label, int dims);

  /// Two regions split at x_axis = boundary: label 0 below, 1 at or above.
  static RegionMap split(int dims, int axis, double boundary, std::string below = "reactant",
                         std::string above = "product");

  int size() const { return static_cast<int>(regions_.size()); }
  int dims() const { return dims_; }
  const Region& region(int label) const { return regions_.at(label); }
  int label_of(const std::string& name) const;
  int label(const Point& x) const;
  /// Label of every grid point, in flat order.
  std::vector<std::uint64_t> labels(const GridSpec& grid) const;
  /// ceil(log2 r), at least one qubit.
  int register_width() const;

 private:
  std::vector<Region> regions_;
  int default_label_;
  int dims_;
};

/// Exact region probabilities P_i = sum_{x in region i} |a_x|^2.
std::vector<double> region_probabilities(const GridWavefunction& psi, const RegionMap& map);

/// |x>|y> -> |x>|y xor R(x)> as a table oracle.
void append_region_oracle(Circuit& c, const RegionMap& map, const GridSpec& grid, QubitRange positions,
                          QubitRange label);
/// Loads psi into registers x0.. and labels it into register "region".
CircuitState attach_region_register(const GridWavefunction& psi, const RegionMap& map,
                                    int qubit_cap = kDefaultQubitCap);

struct ReactionEstimate {
  double exact = 0.0;      // grid sum (simulator privilege)
  double estimate = 0.0;   // fraction of shots landing in product labels
  double std_error = 0.0;     // binomial, sqrt(p(1-p)/shots)
  std::size_t shots = 0;
  std::uint64_t seed = 0;
};

/// Measures the region register `shots` times. Product labels must be
/// valid region labels.
ReactionEstimate reaction_probability(const GridWavefunction& psi, const RegionMap& map,
                                      const std::vector<int>& product_labels, std::size_t shots,
                                      std::uint64_t seed, int qubit_cap = kDefaultQubitCap);

// --- Rate constants ---------------------------------------------------------

using Propagate = std::function<GridWavefunction(const GridWavefunction&)>;

struct RateJob {
  ThermalSpec thermal;
  ReactantBuilder reactant;
  GridSpec grid = GridSpec(1, {{0.0, 1.0}});
  RegionMap regions = RegionMap::split(1, 0, 0.0);
  std::vector<int> product_labels{1};
  Propagate propagate;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
};

struct RateEstimate {
  double k = 0.0;             // C^-2 * mean product probability
  double std_error = 0.0;
  double raw_probability = 0.0;  // mean product probability, the ancilla-|1> probability C^2 k
  double raw_std_error = 0.0;
  std::size_t samples = 0;
  std::size_t rejected = 0;   // draws the reactant builder refused, redrawn
  std::size_t propagations = 0;
  double c_squared = 0.0;
  double partition = 0.0;
};

/// Monte Carlo over thermal draws. Each drawn bin's reactant is propagated
/// and its product-region probability recorded; repeated bins reuse the
/// exact propagated result.
RateEstimate rate_constant(const RateJob& job);

/// Product-region probability for one thermal bin (exact grid sum).
double bin_reaction_probability(const RateJob& job, const ThermalEnsemble& ens, std::size_t bin);

// --- Phase estimation ---------------------------------------------------------

struct PhaseEstimate {
  int t = 0;
  std::vector<double> probabilities;            // exact bin weights, 2^t
  std::map<std::uint64_t, std::size_t> histogram;  // sampled readouts
  std::size_t shots = 0;
  std::uint64_t seed = 0;
  std::uint64_t modal_bin() const;
  /// b / 2^t, the estimated eigenphase as a fraction of a turn.
  double phase(std::uint64_t bin) const;
};

/// U = exp(i (global + sum_q theta_q x_q)) on a system register of
/// theta.size() qubits. Controlled powers are exact phase / controlled-phase
/// gates, so the whole network is gate level.
struct LinearPhaseUnitary {
  double global = 0.0;
  std::vector<double> theta;
};

/// Readout "r" (t qubits) then system "s". Hadamards, controlled powers
/// U^{2^k} on readout qubit k, inverse QFT on the readout.
CircuitBuilder phase_estimation_circuit(const LinearPhaseUnitary& u, int t);
/// Runs the gate-level network on a system basis-state superposition.
PhaseEstimate phase_estimate(const LinearPhaseUnitary& u, const std::vector<Complex>& system_state, int t,
                             std::size_t shots, std::uint64_t seed, int qubit_cap = kDefaultQubitCap);
/// Same network for a unitary applied as a black box to grid states: the
/// readout-conditioned branches U^j psi are formed explicitly and the
/// inverse QFT is applied to the readout index, giving identical bin
/// weights to the gate-level network.
PhaseEstimate phase_estimate(const std::function<GridWavefunction(const GridWavefunction&)>& step,
                             const GridWavefunction& psi, int t, std::size_t shots, std::uint64_t seed);

/// Eigenvalue exp(-i E dt) appears in bin b = 2^t (1 - E dt / 2 pi) mod 2^t.
double phase_to_energy(double phase, double dt);

// --- State-to-state ------------------------------------------------------------

/// Product coordinates y = A (x - offset), A row-major d x d.
struct LinearMap {
  std::vector<double> matrix;
  std::vector<double> offset;
  static LinearMap identity(int dims);
};

/// Band-limited (Fourier-series) resampling of psi at the points
/// A^-1 y + offset for every grid point y, renormalized. `norm_before`
/// reports how much weight the map kept inside the window.
struct Resampled {
  GridWavefunction state;
  double norm_before = 1.0;
};
Resampled resample_linear(const GridWavefunction& psi, const LinearMap& map);

struct ProductWell {
  std::vector<int> axes;            // vibrational axes; the rest are traced out
  std::vector<HarmonicMode> modes;  // one per vibrational axis (quanta ignored)
  std::optional<LinearMap> map;
};

struct StateToState {
  std::vector<std::vector<int>> quanta;
  std::vector<double> probabilities;
  double residual = 0.0;  // 1 - sum P
  bool flagged = false;   // residual above threshold
};

/// Projects onto the product well's harmonic basis (every quanta tuple with
/// each entry <= max_v), Gram-Schmidt orthonormalized on the grid so that
/// sum P + residual = 1 to rounding.
StateToState state_to_state(const GridWavefunction& psi, const ProductWell& well, int max_v,
                            double residual_threshold = 1e-3);
/// Weighted incoherent mixture of pure states.
StateToState state_to_state(const std::vector<std::pair<double, GridWavefunction>>& mixture,
                            const ProductWell& well, int max_v, double residual_threshold = 1e-3);

/// Fragment separation: region probabilities change by less than
/// `threshold` per step for `consecutive` snapshots in a row.
class SeparationMonitor {
 public:
  SeparationMonitor(RegionMap map, double threshold = 1e-6, int consecutive = 10);
  /// Feeds a snapshot taken `steps` propagation steps after the previous one.
  bool observe(const GridWavefunction& psi, int steps = 1);
  bool separated() const { return streak_ >= consecutive_; }
  double last_flux() const { return last_flux_; }

 private:
  RegionMap map_;
  double threshold_;
  int consecutive_;
  int streak_ = 0;
  double last_flux_ = 0.0;
  std::vector<double> prev_;
};

// --- Output --------------------------------------------------------------------

struct ObservableRecord {
  std::string observable;
  double value = 0.0;
  double std_error = 0.0;
  std::size_t shots = 0;
  std::uint64_t seed = 0;
  std::string scenario_hash;
};
void write_records_json(std::ostream& out, const std::vector<ObservableRecord>& records);
void write_histogram_csv(std::ostream& out, const PhaseEstimate& est);

}  // namespace qdyn
