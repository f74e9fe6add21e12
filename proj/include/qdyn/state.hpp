#pragma once

#include <bitset>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qdyn/circuit.hpp"
#include "qdyn/grid.hpp"

namespace qdyn {

inline constexpr int kDefaultQubitCap = 26;

/// Dense statevector over a RegisterLayout. Single writer: gates mutate in
/// place. Keeps a running tally of every gate applied to it.
class CircuitState {
 public:
  explicit CircuitState(RegisterLayout layout, int qubit_cap = kDefaultQubitCap);

  /// Computational basis state with the given register values (others 0).
  static CircuitState basis(RegisterLayout layout, const std::map<std::string, std::uint64_t>& values,
                            int qubit_cap = kDefaultQubitCap);
  static CircuitState from_amplitudes(RegisterLayout layout, std::vector<Complex> amplitudes,
                                      int qubit_cap = kDefaultQubitCap);

  const RegisterLayout& layout() const { return layout_; }
  int num_qubits() const { return layout_.total_qubits(); }
  std::span<const Complex> amplitudes() const { return amps_; }
  const GateTally& tally() const { return tally_; }
  double norm_squared() const;

  void apply(const Gate& g);
  void apply(const Circuit& c);

  /// Marginal distribution of one register (length 2^size).
  std::vector<double> marginal(const std::string& reg) const;

 private:
  RegisterLayout layout_;
  std::vector<Complex> amps_;
  GateTally tally_;
};

void apply_gate(CircuitState& state, const Gate& g);

/// Histogram of `shots` samples from a register's marginal. Deterministic
/// for a given seed; the state is not collapsed.
std::map<std::uint64_t, std::size_t> measure_register(const CircuitState& state,
                                                      const std::string& reg, std::size_t shots,
                                                      std::uint64_t seed);

/// Places a grid state into `position_regs` (which must be consecutive in
/// the layout and hold d*n qubits together); other registers start in |0>.
CircuitState load_grid_state(const GridWavefunction& psi, const RegisterLayout& layout,
                             const std::vector<std::string>& position_regs,
                             int qubit_cap = kDefaultQubitCap);

struct Extraction {
  GridWavefunction state;
  /// Probability weight outside the best rank-one (product) approximation,
  /// relative to the state norm.
  double product_deviation;
};

/// Pulls the position-register factor out of a product state. Throws
/// ContractViolation when the rest of the machine is entangled with the
/// position registers beyond `tolerance`.
Extraction extract_grid_state(const CircuitState& state, const GridSpec& spec,
                              const std::vector<std::string>& position_regs,
                              double tolerance = 1e-8);

/// Same, but projects onto a known state of the non-position qubits, which
/// fixes the global phase. `rest` is indexed by the non-position bits packed
/// in increasing qubit order.
Extraction extract_grid_state(const CircuitState& state, const GridSpec& spec,
                              const std::vector<std::string>& position_regs,
                              std::span<const Complex> rest, double tolerance = 1e-8);

/// Sparse amplitude map for circuits far wider than a dense vector allows.
/// Arithmetic circuits acting on basis inputs only ever populate the
/// Fourier image of one register at a time, so the map stays small.
class SparseState {
 public:
  static constexpr int kMaxQubits = 512;
  using Key = std::bitset<kMaxQubits>;

  explicit SparseState(RegisterLayout layout);

  static SparseState basis(RegisterLayout layout, const std::map<std::string, std::uint64_t>& values);
  /// Arbitrary superposition; entries must be normalized.
  static SparseState from_entries(RegisterLayout layout, const std::vector<std::pair<Key, Complex>>& entries);

  std::vector<std::pair<Key, Complex>> entries() const { return {amps_.begin(), amps_.end()}; }

  const RegisterLayout& layout() const { return layout_; }
  std::size_t terms() const { return amps_.size(); }
  std::size_t peak_terms() const { return peak_terms_; }
  const GateTally& tally() const { return tally_; }

  void apply(const Gate& g);
  void apply(const Circuit& c);

  /// Value of a register when the state is a single basis state up to
  /// `tolerance`; throws ContractViolation otherwise.
  std::uint64_t register_value(const std::string& reg, double tolerance = 1e-9) const;
  /// Global amplitude of the single remaining basis state.
  Complex basis_amplitude(double tolerance = 1e-9) const;

 private:
  void prune();
  static std::uint64_t read(const Key& k, QubitRange r);
  static void write(Key& k, QubitRange r, std::uint64_t v);

  RegisterLayout layout_;
  std::unordered_map<Key, Complex> amps_;
  GateTally tally_;
  std::size_t peak_terms_ = 1;
};

}  // namespace qdyn
