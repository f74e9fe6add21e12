#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qdyn/circuit.hpp"
#include "qdyn/grid.hpp"

namespace qdyn {

/// Separable Gaussian packet, one entry per axis:
/// psi ~ prod_a exp(-(x_a - c_a)^2 / (4 sigma_a^2) + i p_a x_a), so sigma is
/// the position standard deviation.
struct WavepacketSpec {
  std::vector<double> center;
  std::vector<double> momentum;
  std::vector<double> width;
};

/// Rejects widths below two grid spacings and packets closer than five
/// widths to an edge (ValidationError).
GridWavefunction gaussian_packet(const WavepacketSpec& spec, const GridSpec& grid);

/// One axis of a separable harmonic product state.
struct HarmonicMode {
  int quanta = 0;
  double omega = 1.0;
  double mass = 1.0;
  double center = 0.0;
};

inline constexpr int kMaxHarmonicQuanta = 60;

/// Hermite-Gaussian eigenfunction of 1/2 m w^2 (x - c)^2 on a 1D grid,
/// evaluated with the normalized three-term recurrence and renormalized on
/// the grid. Rejects v above kMaxHarmonicQuanta or a state that the grid
/// cannot resolve (support past the edges or momenta past Nyquist).
GridWavefunction harmonic_eigenstate(int v, double omega, double mass, const GridSpec& grid,
                                     double center = 0.0);
/// Product of harmonic eigenstates, one mode per axis.
GridWavefunction harmonic_product_state(const std::vector<HarmonicMode>& modes, const GridSpec& grid);
/// Continuum-normalized eigenfunction value.
double harmonic_eigenfunction(int v, double x, double omega, double mass, double center = 0.0);

/// Grover-Rudolph loader: on |0..0> of `reg`, prepares sum_x sqrt(mass_x /
/// total) |x>. Level k rotates qubit n-1-k conditioned on the k more
/// significant qubits with a uniformly controlled RY, decomposed into 2^k
/// RY and 2^k CNOT gates along a Gray-code walk. mass.size() must be
/// 2^reg.count. Rejects negative, non-finite or all-zero mass.
Circuit amplitude_load_circuit(const std::vector<double>& mass, QubitRange reg, int num_qubits);
/// Rotation angles per level (level k holds 2^k angles indexed by prefix).
std::vector<std::vector<double>> amplitude_load_angles(const std::vector<double>& mass);

// --- Thermal ensembles ----------------------------------------------------

/// Internal reactant level zeta with energy E(zeta) and, for product-state
/// builders, its harmonic quanta per internal axis.
struct ThermalLevel {
  int zeta = 0;
  double energy = 0.0;
  std::vector<int> quanta;
};

struct ThermalSpec {
  double temperature = 1.0;  // in energy units (k_B = 1)
  double e_max = 1.0;
  double de = 0.1;
  std::vector<ThermalLevel> levels;
  double partition = 0.0;    // Q(T); 0 computes sum_zeta exp(-E(zeta) / T)
  double hbar = 1.0;
};

/// One (zeta, E) bin with total energy E = j * dE >= E(zeta).
struct ThermalBin {
  std::size_t level = 0;  // index into ThermalSpec::levels
  double energy = 0.0;
  double kinetic = 0.0;   // E - E(zeta)
  double gamma_sq = 0.0;  // exp(-E/T) dE / (2 pi hbar Q)
  double weight = 0.0;    // gamma_sq * C^2, sums to 1
};

struct ThermalEnsemble {
  std::vector<ThermalBin> bins;
  double partition = 0.0;
  double c_squared = 0.0;  // 1 / sum gamma_sq
};

/// Enumerates every accessible bin. Rejects T <= 0, empty level lists, bad
/// grids, and temperatures at which no bin carries weight.
ThermalEnsemble thermal_bins(const ThermalSpec& spec);

struct ThermalSample {
  std::size_t bin = 0;
  std::size_t level = 0;
  int zeta = 0;
  double energy = 0.0;
  double kinetic = 0.0;
};

/// Draws `count` bins with probability Gamma^2 C^2; deterministic per seed.
std::vector<ThermalSample> thermal_sample(const ThermalSpec& spec, std::uint64_t seed, std::size_t count);

/// Builds the reactant product state for a sample: axis 0 carries an
/// incoming Gaussian with mean kinetic energy equal to the sample's E -
/// E(zeta); axes 1.. carry the internal harmonic eigenstate given by the
/// level's quanta.
struct ReactantBuilder {
  double mass = 1.0;       // along the reaction coordinate
  double center = 0.0;
  double width = 1.0;
  int direction = 1;       // +1 moves toward larger x
  std::vector<HarmonicMode> internal;  // quanta taken from the level
};

/// Incoming momentum giving mean kinetic energy `kinetic` for a Gaussian of
/// the given width: p0^2 / 2m + 1 / (8 m sigma^2). DomainError when the
/// width alone already carries more kinetic energy.
double incoming_momentum(double kinetic, double mass, double width);

GridWavefunction build_reactant(const ThermalSample& sample, const ThermalSpec& spec,
                                const ReactantBuilder& builder, const GridSpec& grid);

/// JSON manifest of sampled bins for reproducibility.
void write_ensemble_manifest(std::ostream& out, const ThermalSpec& spec,
                             const std::vector<ThermalSample>& samples, std::uint64_t seed);

}  // namespace qdyn
