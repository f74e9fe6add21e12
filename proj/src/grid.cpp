#include "qdyn/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>

#include "qdyn/errors.hpp"

namespace qdyn {

namespace {

// In-place FFTW plans keyed by (n, d, sign). Plans are created once and
// executed on caller buffers through the new-array interface.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int d, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::tuple{n, d, sign};
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<int> dims(d, 1 << n);
    std::size_t total = std::size_t{1} << (n * d);
    auto* buf = fftw_alloc_complex(total);
    fftw_plan plan = fftw_plan_dft(d, dims.data(), buf, buf, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

void transform_in_place(const GridSpec& spec, std::vector<Complex>& data, int sign) {
  fftw_plan plan = PlanCache::instance().get(spec.qubits_per_axis(), spec.dims(), sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
  const double scale = 1.0 / std::sqrt(static_cast<double>(data.size()));
  for (auto& v : data) v *= scale;
}

void require_same_spec(const GridWavefunction& a, const GridWavefunction& b) {
  if (a.spec() != b.spec()) throw ValidationError("grid specs do not match");
}

double sum_norm(std::span<const Complex> amps) {
  double s = 0.0;
  for (const auto& v : amps) s += std::norm(v);
  return s;
}

}  // namespace

GridSpec::GridSpec(int qubits_per_axis, std::vector<AxisExtent> axes)
    : n_(qubits_per_axis), axes_(std::move(axes)) {
  if (n_ < 1) throw ValidationError("grid: qubits per axis must be >= 1");
  if (axes_.empty()) throw ValidationError("grid: at least one axis required");
  if (n_ * dims() > 40) throw ValidationError("grid: total qubits exceed dense-memory limit");
  for (const auto& ax : axes_) {
    if (!(ax.max > ax.min) || !std::isfinite(ax.min) || !std::isfinite(ax.max))
      throw ValidationError("grid: every axis needs finite x_max > x_min");
  }
}

GridSpec GridSpec::uniform(int qubits_per_axis, int dims, double min, double max) {
  if (dims < 1) throw ValidationError("grid: dims must be >= 1");
  return GridSpec(qubits_per_axis, std::vector<AxisExtent>(dims, AxisExtent{min, max}));
}

double GridSpec::spacing(int a) const {
  const auto& ax = axes_.at(a);
  return (ax.max - ax.min) / static_cast<double>(points_per_axis());
}

double GridSpec::coordinate(int a, std::size_t i) const {
  return axes_.at(a).min + spacing(a) * static_cast<double>(i);
}

std::size_t GridSpec::axis_index(std::size_t flat, int a) const {
  return (flat >> (a * n_)) & (points_per_axis() - 1);
}

Point GridSpec::point(std::size_t flat) const {
  Point p(dims());
  for (int a = 0; a < dims(); ++a) p[a] = coordinate(a, axis_index(flat, a));
  return p;
}

std::int64_t GridSpec::signed_frequency(std::size_t k) const {
  const auto N = static_cast<std::int64_t>(points_per_axis());
  const auto kk = static_cast<std::int64_t>(k);
  return kk < N / 2 ? kk : kk - N;
}

double GridSpec::momentum_spacing(int a) const {
  return 2.0 * std::numbers::pi / (static_cast<double>(points_per_axis()) * spacing(a));
}

double GridSpec::momentum(int a, std::size_t k) const {
  return momentum_spacing(a) * static_cast<double>(signed_frequency(k));
}

bool GridSpec::operator==(const GridSpec& other) const {
  if (n_ != other.n_ || axes_.size() != other.axes_.size()) return false;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].min != other.axes_[i].min || axes_[i].max != other.axes_[i].max) return false;
  }
  return true;
}

bool Box::contains(const Point& x) const {
  for (std::size_t a = 0; a < x.size(); ++a) {
    if (x[a] < lo.at(a) || x[a] >= hi.at(a)) return false;
  }
  return true;
}

GridWavefunction::GridWavefunction(GridSpec spec, std::vector<Complex> amplitudes)
    : spec_(std::move(spec)), amps_(std::move(amplitudes)) {
  if (amps_.size() != spec_.size())
    throw ValidationError("wavefunction: amplitude count must equal 2^(d n)");
  if (std::abs(sum_norm(amps_) - 1.0) > 1e-10)
    throw ValidationError("wavefunction: amplitudes are not normalized");
}

GridWavefunction GridWavefunction::normalized(GridSpec spec, std::vector<Complex> amplitudes) {
  for (const auto& v : amplitudes) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw DomainError("wavefunction: non-finite amplitude");
  }
  const double s = sum_norm(amplitudes);
  if (!(s > 0.0)) throw DomainError("wavefunction: all-zero amplitudes cannot be normalized");
  const double inv = 1.0 / std::sqrt(s);
  for (auto& v : amplitudes) v *= inv;
  return GridWavefunction(std::move(spec), std::move(amplitudes));
}

double GridWavefunction::norm_squared() const { return sum_norm(amps_); }

GridWavefunction init_wavefunction(const GridSpec& spec, const Sampler& sampler) {
  std::vector<Complex> amps(spec.size());
  for (std::size_t i = 0; i < amps.size(); ++i) amps[i] = sampler(spec.point(i));
  return GridWavefunction::normalized(spec, std::move(amps));
}

std::vector<double> sample_field(const GridSpec& spec, const RealField& f) {
  std::vector<double> out(spec.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = f(spec.point(i));
    if (!std::isfinite(out[i])) throw DomainError("field is not finite at grid point");
  }
  return out;
}

std::vector<Complex> to_momentum(const GridSpec& spec, std::span<const Complex> position) {
  std::vector<Complex> data(position.begin(), position.end());
  transform_in_place(spec, data, FFTW_FORWARD);
  return data;
}

std::vector<Complex> to_position(const GridSpec& spec, std::span<const Complex> momentum) {
  std::vector<Complex> data(momentum.begin(), momentum.end());
  transform_in_place(spec, data, FFTW_BACKWARD);
  return data;
}

std::vector<double> kinetic_energy_field(const GridSpec& spec, std::span<const double> masses) {
  if (static_cast<int>(masses.size()) != spec.dims())
    throw ValidationError("one mass per axis required");
  for (double m : masses) {
    if (!(m > 0.0)) throw ValidationError("masses must be positive");
  }
  std::vector<double> out(spec.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (int a = 0; a < spec.dims(); ++a) {
      const double p = spec.momentum(a, spec.axis_index(i, a));
      out[i] += p * p / (2.0 * masses[a]);
    }
  }
  return out;
}

GridWavefunction split_step_phases(const GridWavefunction& psi,
                                   std::span<const double> potential_phase,
                                   std::span<const double> kinetic_phase) {
  SplitOperatorPropagator prop(psi.spec(),
                               {potential_phase.begin(), potential_phase.end()},
                               {kinetic_phase.begin(), kinetic_phase.end()});
  return prop.step(psi);
}

GridWavefunction classical_split_step(const GridWavefunction& psi, const RealField& potential,
                                      std::span<const double> masses, double dt) {
  return SplitOperatorPropagator::physical(psi.spec(), potential, masses, dt).step(psi);
}

struct SplitOperatorPropagator::Impl {
  GridSpec spec;
  std::vector<Complex> potential_factor;
  std::vector<Complex> kinetic_factor;
};

SplitOperatorPropagator::SplitOperatorPropagator(GridSpec spec,
                                                 std::vector<double> potential_phase,
                                                 std::vector<double> kinetic_phase) {
  if (potential_phase.size() != spec.size() || kinetic_phase.size() != spec.size())
    throw ValidationError("phase tables must cover every grid point");
  impl_ = std::make_unique<Impl>(Impl{std::move(spec), {}, {}});
  impl_->potential_factor.resize(potential_phase.size());
  impl_->kinetic_factor.resize(kinetic_phase.size());
  for (std::size_t i = 0; i < potential_phase.size(); ++i) {
    impl_->potential_factor[i] = std::polar(1.0, -potential_phase[i]);
    impl_->kinetic_factor[i] = std::polar(1.0, -kinetic_phase[i]);
  }
}

SplitOperatorPropagator::~SplitOperatorPropagator() = default;
SplitOperatorPropagator::SplitOperatorPropagator(SplitOperatorPropagator&&) noexcept = default;
SplitOperatorPropagator& SplitOperatorPropagator::operator=(SplitOperatorPropagator&&) noexcept =
    default;

SplitOperatorPropagator SplitOperatorPropagator::physical(const GridSpec& spec,
                                                          const RealField& potential,
                                                          std::span<const double> masses,
                                                          double dt) {
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  auto v = sample_field(spec, potential);
  auto t = kinetic_energy_field(spec, masses);
  for (auto& x : v) x *= dt;
  for (auto& x : t) x *= dt;
  return SplitOperatorPropagator(spec, std::move(v), std::move(t));
}

const GridSpec& SplitOperatorPropagator::spec() const { return impl_->spec; }

GridWavefunction SplitOperatorPropagator::step(const GridWavefunction& psi, int steps) const {
  if (psi.spec() != impl_->spec) throw ValidationError("propagator grid does not match state");
  std::vector<Complex> data(psi.amplitudes().begin(), psi.amplitudes().end());
  const auto& spec = impl_->spec;
  for (int s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= impl_->potential_factor[i];
    transform_in_place(spec, data, FFTW_FORWARD);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= impl_->kinetic_factor[i];
    transform_in_place(spec, data, FFTW_BACKWARD);
  }
  // Renormalize away FFT round-off so long runs keep the 1e-12 norm contract.
  return GridWavefunction::normalized(spec, std::move(data));
}

Complex overlap(const GridWavefunction& a, const GridWavefunction& b) {
  require_same_spec(a, b);
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double fidelity(const GridWavefunction& a, const GridWavefunction& b) {
  return std::norm(overlap(a, b));
}

double distance(const GridWavefunction& a, const GridWavefunction& b) {
  require_same_spec(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<double> position_expectation(const GridWavefunction& psi) {
  const auto& spec = psi.spec();
  std::vector<double> out(spec.dims(), 0.0);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double p = std::norm(psi[i]);
    for (int a = 0; a < spec.dims(); ++a) out[a] += p * spec.coordinate(a, spec.axis_index(i, a));
  }
  return out;
}

std::vector<double> momentum_expectation(const GridWavefunction& psi) {
  const auto& spec = psi.spec();
  auto phi = to_momentum(spec, psi.amplitudes());
  std::vector<double> out(spec.dims(), 0.0);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double p = std::norm(phi[i]);
    for (int a = 0; a < spec.dims(); ++a) out[a] += p * spec.momentum(a, spec.axis_index(i, a));
  }
  return out;
}

double probability_in_box(const GridWavefunction& psi, const Box& box) {
  const auto& spec = psi.spec();
  if (static_cast<int>(box.lo.size()) != spec.dims() ||
      static_cast<int>(box.hi.size()) != spec.dims())
    throw ValidationError("box dimension does not match grid");
  double s = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (box.contains(spec.point(i))) s += std::norm(psi[i]);
  }
  return s;
}

double boundary_probability(const GridWavefunction& psi, std::size_t layer) {
  const auto& spec = psi.spec();
  const std::size_t N = spec.points_per_axis();
  if (layer == 0) layer = std::max<std::size_t>(1, N / 32);
  double s = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    for (int a = 0; a < spec.dims(); ++a) {
      const auto k = spec.axis_index(i, a);
      if (k < layer || k >= N - layer) {
        s += std::norm(psi[i]);
        break;
      }
    }
  }
  return s;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host assumed");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("binary snapshot truncated");
  return value;
}

}  // namespace

void write_csv(std::ostream& out, const GridWavefunction& psi) {
  const auto& spec = psi.spec();
  out << "index";
  for (int a = 0; a < spec.dims(); ++a) out << ",x" << a;
  out << ",re,im\n";
  out.precision(17);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    out << i;
    for (int a = 0; a < spec.dims(); ++a) out << ',' << spec.coordinate(a, spec.axis_index(i, a));
    out << ',' << psi[i].real() << ',' << psi[i].imag() << '\n';
  }
}

void write_binary(std::ostream& out, const GridWavefunction& psi) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(psi.spec().qubits_per_axis()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(psi.spec().dims()));
  for (const auto& v : psi.amplitudes()) {
    put_le<double>(out, v.real());
    put_le<double>(out, v.imag());
  }
}

GridWavefunction read_binary(std::istream& in, const std::vector<AxisExtent>& axes) {
  const auto n = get_le<std::uint32_t>(in);
  const auto d = get_le<std::uint32_t>(in);
  if (d != axes.size()) throw ValidationError("binary snapshot dimension does not match axes");
  GridSpec spec(static_cast<int>(n), axes);
  std::vector<Complex> amps(spec.size());
  for (auto& v : amps) {
    const double re = get_le<double>(in);
    const double im = get_le<double>(in);
    v = {re, im};
  }
  return GridWavefunction::normalized(std::move(spec), std::move(amps));
}

}  // namespace qdyn
