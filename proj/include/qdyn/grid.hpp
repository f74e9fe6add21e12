#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qdyn {

using Complex = std::complex<double>;
using Point = std::vector<double>;

struct AxisExtent {
  double min = 0.0;
  double max = 1.0;
};

/// Uniform d-dimensional grid with N = 2^n points per axis.
///
/// Flat amplitude index is axis-major with axis 0 least significant:
/// flat = i_0 + N * i_1 + N^2 * i_2 + ...  Within an axis, bit 0 of i_a is
/// the finest position bit. A circuit register for axis a therefore owns
/// qubits [a*n, (a+1)*n) of the position block, LSB first.
class GridSpec {
 public:
  GridSpec(int qubits_per_axis, std::vector<AxisExtent> axes);

  static GridSpec uniform(int qubits_per_axis, int dims, double min, double max);

  int qubits_per_axis() const { return n_; }
  int dims() const { return static_cast<int>(axes_.size()); }
  int total_qubits() const { return n_ * dims(); }
  std::size_t points_per_axis() const { return std::size_t{1} << n_; }
  std::size_t size() const { return std::size_t{1} << total_qubits(); }

  const AxisExtent& axis(int a) const { return axes_.at(a); }
  double spacing(int a) const;
  double coordinate(int a, std::size_t i) const;
  std::size_t axis_index(std::size_t flat, int a) const;
  Point point(std::size_t flat) const;

  /// Signed momentum of frequency index k on axis a (wraparound convention,
  /// Nyquist index k = N/2 maps to the most negative momentum).
  double momentum(int a, std::size_t k) const;
  /// Signed integer frequency: k for k < N/2, k - N otherwise.
  std::int64_t signed_frequency(std::size_t k) const;
  double momentum_spacing(int a) const;

  bool operator==(const GridSpec& other) const;
  bool operator!=(const GridSpec& other) const { return !(*this == other); }

 private:
  int n_;
  std::vector<AxisExtent> axes_;
};

/// Coordinate-aligned half-open box [lo, hi) per axis.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
  bool contains(const Point& x) const;
};

/// Normalized amplitudes on a GridSpec. Immutable: every operation returns a
/// fresh value, so instances may be shared read-only across threads.
class GridWavefunction {
 public:
  /// Takes amplitudes as given; they must already have unit norm (1e-10).
  GridWavefunction(GridSpec spec, std::vector<Complex> amplitudes);

  /// Normalizes the supplied amplitudes. Rejects all-zero or non-finite input.
  static GridWavefunction normalized(GridSpec spec, std::vector<Complex> amplitudes);

  const GridSpec& spec() const { return spec_; }
  std::span<const Complex> amplitudes() const { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }
  std::size_t size() const { return amps_.size(); }
  double norm_squared() const;

 private:
  GridSpec spec_;
  std::vector<Complex> amps_;
};

using Sampler = std::function<Complex(const Point&)>;
using RealField = std::function<double(const Point&)>;

GridWavefunction init_wavefunction(const GridSpec& spec, const Sampler& sampler);

/// Samples a real function on every grid point.
std::vector<double> sample_field(const GridSpec& spec, const RealField& f);

/// Unitary multi-dimensional DFT helpers. `to_momentum` applies
/// a_k = N^{-d/2} sum_x exp(-2 pi i x.k / N) a_x, `to_position` its inverse.
/// Both operate on raw amplitude arrays laid out as GridSpec documents.
std::vector<Complex> to_momentum(const GridSpec& spec, std::span<const Complex> position);
std::vector<Complex> to_position(const GridSpec& spec, std::span<const Complex> momentum);

/// Kinetic energy sum_a p_a^2 / (2 m_a) on every momentum-grid point.
std::vector<double> kinetic_energy_field(const GridSpec& spec, std::span<const double> masses);

/// One first-order split step from precomputed phases:
/// psi <- F^-1 exp(-i kinetic_phase) F exp(-i potential_phase) psi.
GridWavefunction split_step_phases(const GridWavefunction& psi,
                                   std::span<const double> potential_phase,
                                   std::span<const double> kinetic_phase);

GridWavefunction classical_split_step(const GridWavefunction& psi, const RealField& potential,
                                      std::span<const double> masses, double dt);

/// Reusable split-operator propagator holding its phase tables and FFT
/// plans. Phases are exp(-i potential_phase) in position space and
/// exp(-i kinetic_phase) in momentum space, applied in that order per step.
class SplitOperatorPropagator {
 public:
  SplitOperatorPropagator(GridSpec spec, std::vector<double> potential_phase,
                          std::vector<double> kinetic_phase);
  ~SplitOperatorPropagator();
  SplitOperatorPropagator(SplitOperatorPropagator&&) noexcept;
  SplitOperatorPropagator& operator=(SplitOperatorPropagator&&) noexcept;

  /// Physical propagator for potential V and per-axis masses at step dt.
  static SplitOperatorPropagator physical(const GridSpec& spec, const RealField& potential,
                                          std::span<const double> masses, double dt);

  const GridSpec& spec() const;
  GridWavefunction step(const GridWavefunction& psi, int steps = 1) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Complex overlap(const GridWavefunction& a, const GridWavefunction& b);
double fidelity(const GridWavefunction& a, const GridWavefunction& b);
double distance(const GridWavefunction& a, const GridWavefunction& b);
std::vector<double> position_expectation(const GridWavefunction& psi);
std::vector<double> momentum_expectation(const GridWavefunction& psi);
double probability_in_box(const GridWavefunction& psi, const Box& box);

/// Probability held in the outermost `layer` points at each end of every
/// axis. Periodic boundaries make anything above ~1e-6 suspect.
double boundary_probability(const GridWavefunction& psi, std::size_t layer = 0);
inline constexpr double kBoundaryWarningThreshold = 1e-6;

// Snapshot formats.
//
// CSV: header "index,x0[,x1...],re,im", one row per grid point.
// Binary: little-endian; uint32 n, uint32 d, then 2^{dn} (re, im) float64
// pairs. Extents are not stored; readers supply the GridSpec.
void write_csv(std::ostream& out, const GridWavefunction& psi);
void write_binary(std::ostream& out, const GridWavefunction& psi);
GridWavefunction read_binary(std::istream& in, const std::vector<AxisExtent>& axes);

}  // namespace qdyn
