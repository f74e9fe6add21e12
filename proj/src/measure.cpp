#include "qdyn/measure.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <unordered_map>

#include "json.hpp"
#include "qdyn/errors.hpp"

namespace qdyn {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

bool boxes_overlap(const Box& a, const Box& b) {
  for (std::size_t k = 0; k < a.lo.size(); ++k) {
    if (std::max(a.lo[k], b.lo[k]) >= std::min(a.hi[k], b.hi[k])) return false;
  }
  return true;
}

double product_probability(const GridWavefunction& psi, const RegionMap& map, const std::vector<int>& labels) {
  const auto p = region_probabilities(psi, map);
  double s = 0.0;
  for (int l : labels) s += p.at(l);
  return s;
}

void check_labels(const RegionMap& map, const std::vector<int>& labels) {
  if (labels.empty()) throw ValidationError("at least one product label is required");
  for (int l : labels) {
    if (l < 0 || l >= map.size()) throw ValidationError("product label " + std::to_string(l) + " is not a region");
  }
}

}  // namespace

RegionMap::RegionMap(std::vector<Region> regions, int default_label, int dims)
    : regions_(std::move(regions)), default_label_(default_label), dims_(dims) {
  if (regions_.empty()) throw ValidationError("region map needs at least one region");
  if (dims_ < 1) throw ValidationError("region map needs at least one axis");
  if (default_label_ < 0 || default_label_ >= size()) throw ValidationError("default label is not a region");
  for (const auto& r : regions_) {
    for (const auto& b : r.boxes) {
      if (static_cast<int>(b.lo.size()) != dims_ || static_cast<int>(b.hi.size()) != dims_) {
        throw ValidationError("region " + r.name + " has a box of the wrong dimension");
      }
      for (int a = 0; a < dims_; ++a) {
        if (!(b.lo[a] < b.hi[a])) throw ValidationError("region " + r.name + " has an empty or malformed box");
      }
    }
  }
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    for (std::size_t j = i + 1; j < regions_.size(); ++j) {
      for (const auto& a : regions_[i].boxes) {
        for (const auto& b : regions_[j].boxes) {
          if (boxes_overlap(a, b)) {
            throw ValidationError("regions " + regions_[i].name + " and " + regions_[j].name + " overlap");
          }
        }
      }
    }
  }
}

RegionMap RegionMap::split(int dims, int axis, double boundary, std::string below, std::string above) {
  if (axis < 0 || axis >= dims) throw ValidationError("split axis out of range");
  const double inf = std::numeric_limits<double>::infinity();
  Box lo{std::vector<double>(dims, -inf), std::vector<double>(dims, inf)};
  Box hi = lo;
  lo.hi[axis] = boundary;
  hi.lo[axis] = boundary;
  return RegionMap({{std::move(below), {lo}}, {std::move(above), {hi}}}, 0, dims);
}

int RegionMap::label_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (regions_[i].name == name) return i;
  }
  throw ValidationError("unknown region " + name);
}

int RegionMap::label(const Point& x) const {
  for (int i = 0; i < size(); ++i) {
    for (const auto& b : regions_[i].boxes) {
      if (b.contains(x)) return i;
    }
  }
  return default_label_;
}

std::vector<std::uint64_t> RegionMap::labels(const GridSpec& grid) const {
  if (grid.dims() != dims_) throw ValidationError("region map and grid dimensions differ");
  std::vector<std::uint64_t> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = static_cast<std::uint64_t>(label(grid.point(i)));
  return out;
}

int RegionMap::register_width() const {
  return size() <= 1 ? 1 : static_cast<int>(std::bit_width(static_cast<unsigned>(size() - 1)));
}

std::vector<double> region_probabilities(const GridWavefunction& psi, const RegionMap& map) {
  const auto labels = map.labels(psi.spec());
  std::vector<double> p(map.size(), 0.0);
  for (std::size_t i = 0; i < psi.size(); ++i) p[labels[i]] += std::norm(psi[i]);
  return p;
}

void append_region_oracle(Circuit& c, const RegionMap& map, const GridSpec& grid, QubitRange positions,
                          QubitRange label) {
  if (positions.count != grid.total_qubits()) throw ValidationError("position block does not match the grid");
  if (label.count < map.register_width()) throw ValidationError("label register too narrow");
  TableOracle o;
  o.input = positions;
  o.target = label;
  o.table = std::make_shared<const std::vector<std::uint64_t>>(map.labels(grid));
  o.mode = OracleMode::Xor;
  o.label = "R";
  c.oracle(std::move(o));
}

CircuitState attach_region_register(const GridWavefunction& psi, const RegionMap& map, int qubit_cap) {
  const auto& g = psi.spec();
  CircuitBuilder b;
  std::vector<std::string> regs;
  for (int a = 0; a < g.dims(); ++a) {
    regs.push_back("x" + std::to_string(a));
    b.allocate(regs.back(), g.qubits_per_axis());
  }
  const auto label = b.allocate("region", map.register_width()).range();
  append_region_oracle(b.circuit, map, g, {0, g.total_qubits()}, label);
  auto state = load_grid_state(psi, b.layout, regs, qubit_cap);
  state.apply(b.circuit);
  return state;
}

ReactionEstimate reaction_probability(const GridWavefunction& psi, const RegionMap& map,
                                      const std::vector<int>& product_labels, std::size_t shots,
                                      std::uint64_t seed, int qubit_cap) {
  check_labels(map, product_labels);
  if (shots == 0) throw ValidationError("shot count must be positive");
  ReactionEstimate r;
  r.exact = product_probability(psi, map, product_labels);
  r.shots = shots;
  r.seed = seed;
  const auto state = attach_region_register(psi, map, qubit_cap);
  const auto hist = measure_register(state, "region", shots, seed);
  std::size_t hits = 0;
  for (int l : product_labels) {
    const auto it = hist.find(static_cast<std::uint64_t>(l));
    if (it != hist.end()) hits += it->second;
  }
  r.estimate = static_cast<double>(hits) / static_cast<double>(shots);
  r.std_error = std::sqrt(r.estimate * (1 - r.estimate) / static_cast<double>(shots));
  return r;
}

double bin_reaction_probability(const RateJob& job, const ThermalEnsemble& ens, std::size_t bin) {
  const auto& b = ens.bins.at(bin);
  const ThermalSample s{bin, b.level, job.thermal.levels[b.level].zeta, b.energy, b.kinetic};
  const auto psi0 = build_reactant(s, job.thermal, job.reactant, job.grid);
  return product_probability(job.propagate(psi0), job.regions, job.product_labels);
}

RateEstimate rate_constant(const RateJob& job) {
  if (job.samples == 0) throw ValidationError("rate constant needs at least one sample");
  if (!job.propagate) throw ValidationError("rate job has no propagator");
  check_labels(job.regions, job.product_labels);
  const auto ens = thermal_bins(job.thermal);
  std::vector<double> w;
  for (const auto& b : ens.bins) w.push_back(b.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::mt19937_64 rng(job.seed);

  RateEstimate est;
  est.c_squared = ens.c_squared;
  est.partition = ens.partition;
  std::unordered_map<std::size_t, std::optional<double>> cache;
  std::vector<double> values;
  values.reserve(job.samples);
  const std::size_t max_rejections = 1000 * job.samples;
  while (values.size() < job.samples) {
    const auto bin = pick(rng);
    auto it = cache.find(bin);
    if (it == cache.end()) {
      std::optional<double> p;
      try {
        p = bin_reaction_probability(job, ens, bin);
        ++est.propagations;
      } catch (const DomainError&) {
        p.reset();
      }
      it = cache.emplace(bin, p).first;
    }
    if (!it->second) {
      if (++est.rejected > max_rejections) throw DomainError("thermal sampler keeps drawing unbuildable reactants");
      continue;
    }
    values.push_back(*it->second);
  }
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = values.size() > 1 ? var / (n - 1) : 0.0;
  est.samples = values.size();
  est.raw_probability = mean;
  est.raw_std_error = std::sqrt(var / n);
  est.k = mean / ens.c_squared;
  est.std_error = est.raw_std_error / ens.c_squared;
  return est;
}

std::uint64_t PhaseEstimate::modal_bin() const {
  return static_cast<std::uint64_t>(std::max_element(probabilities.begin(), probabilities.end()) -
                                    probabilities.begin());
}

double PhaseEstimate::phase(std::uint64_t bin) const { return std::ldexp(static_cast<double>(bin), -t); }

CircuitBuilder phase_estimation_circuit(const LinearPhaseUnitary& u, int t) {
  if (t < 1) throw ValidationError("phase estimation needs at least one readout qubit");
  if (u.theta.empty()) throw ValidationError("unitary acts on at least one qubit");
  CircuitBuilder b;
  const auto r = b.allocate("r", t).range();
  const auto s = b.allocate("s", static_cast<int>(u.theta.size())).range();
  for (int k = 0; k < t; ++k) b.circuit.h(r.qubit(k));
  for (int k = 0; k < t; ++k) {
    const double power = std::ldexp(1.0, k);
    if (u.global != 0.0) b.circuit.phase(r.qubit(k), std::remainder(u.global * power, kTwoPi));
    for (int q = 0; q < s.count; ++q) {
      if (u.theta[q] != 0.0) b.circuit.cphase(r.qubit(k), s.qubit(q), std::remainder(u.theta[q] * power, kTwoPi));
    }
  }
  append_iqft(b.circuit, r, true);
  return b;
}

PhaseEstimate phase_estimate(const LinearPhaseUnitary& u, const std::vector<Complex>& system_state, int t,
                             std::size_t shots, std::uint64_t seed, int qubit_cap) {
  auto b = phase_estimation_circuit(u, t);
  if (system_state.size() != (std::size_t{1} << u.theta.size())) {
    throw ValidationError("system state size does not match the unitary");
  }
  if (b.layout.total_qubits() > qubit_cap) {
    throw ResourceCapError("phase estimation needs " + std::to_string(b.layout.total_qubits()) + " qubits",
                           b.layout.total_qubits());
  }
  std::vector<Complex> amps(std::size_t{1} << b.layout.total_qubits());
  for (std::size_t x = 0; x < system_state.size(); ++x) amps[x << t] = system_state[x];
  auto state = CircuitState::from_amplitudes(b.layout, std::move(amps), qubit_cap);
  state.apply(b.circuit);
  PhaseEstimate est;
  est.t = t;
  est.probabilities = state.marginal("r");
  est.shots = shots;
  est.seed = seed;
  if (shots > 0) est.histogram = measure_register(state, "r", shots, seed);
  return est;
}

PhaseEstimate phase_estimate(const std::function<GridWavefunction(const GridWavefunction&)>& step,
                             const GridWavefunction& psi, int t, std::size_t shots, std::uint64_t seed) {
  if (t < 1 || t > 20) throw ValidationError("readout width must lie in [1, 20]");
  const std::size_t N = std::size_t{1} << t;
  const std::size_t X = psi.size();
  // Row x holds the branch amplitudes (U^j psi)_x for j = 0..N-1.
  auto* data = fftw_alloc_complex(N * X);
  if (!data) throw ResourceCapError("phase estimation buffer allocation failed", t);
  GridWavefunction cur = psi;
  for (std::size_t j = 0; j < N; ++j) {
    for (std::size_t x = 0; x < X; ++x) {
      data[x * N + j][0] = cur[x].real();
      data[x * N + j][1] = cur[x].imag();
    }
    if (j + 1 < N) cur = step(cur);
  }
  const int n = static_cast<int>(N);
  fftw_plan plan = fftw_plan_many_dft(1, &n, static_cast<int>(X), data, nullptr, 1, n, data, nullptr, 1, n,
                                      FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  PhaseEstimate est;
  est.t = t;
  est.probabilities.assign(N, 0.0);
  const double scale = 1.0 / (static_cast<double>(N) * static_cast<double>(N));
  for (std::size_t x = 0; x < X; ++x) {
    for (std::size_t b = 0; b < N; ++b) {
      const auto& v = data[x * N + b];
      est.probabilities[b] += (v[0] * v[0] + v[1] * v[1]) * scale;
    }
  }
  fftw_free(data);
  est.shots = shots;
  est.seed = seed;
  if (shots > 0) {
    std::discrete_distribution<std::uint64_t> pick(est.probabilities.begin(), est.probabilities.end());
    std::mt19937_64 rng(seed);
    for (std::size_t s = 0; s < shots; ++s) ++est.histogram[pick(rng)];
  }
  return est;
}

double phase_to_energy(double phase, double dt) {
  if (!(dt > 0)) throw ValidationError("time step must be positive");
  const double f = phase - std::floor(phase);
  return f == 0.0 ? 0.0 : (1.0 - f) * kTwoPi / dt;
}

LinearMap LinearMap::identity(int dims) {
  LinearMap m;
  m.matrix.assign(static_cast<std::size_t>(dims * dims), 0.0);
  for (int i = 0; i < dims; ++i) m.matrix[static_cast<std::size_t>(i * dims + i)] = 1.0;
  m.offset.assign(static_cast<std::size_t>(dims), 0.0);
  return m;
}

Resampled resample_linear(const GridWavefunction& psi, const LinearMap& map) {
  const auto& g = psi.spec();
  const int d = g.dims();
  if (map.matrix.size() != static_cast<std::size_t>(d * d) || map.offset.size() != static_cast<std::size_t>(d)) {
    throw ValidationError("linear map has the wrong shape");
  }
  Eigen::MatrixXd A(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) A(i, j) = map.matrix[static_cast<std::size_t>(i * d + j)];
  }
  const double det = A.determinant();
  if (!(std::abs(det) > 1e-12)) throw ValidationError("coordinate map is not invertible");
  const Eigen::MatrixXd Ainv = A.inverse();
  const auto coeff = to_momentum(g, psi.amplitudes());
  const std::size_t N = g.points_per_axis();
  const double norm = std::pow(static_cast<double>(N), -0.5 * d) / std::sqrt(std::abs(det));

  std::vector<Complex> out(g.size(), Complex{0.0, 0.0});
  std::vector<std::vector<Complex>> factors(d, std::vector<Complex>(N));
  for (std::size_t yi = 0; yi < g.size(); ++yi) {
    const auto y = g.point(yi);
    Eigen::VectorXd yv(d);
    for (int a = 0; a < d; ++a) yv(a) = y[a];
    const Eigen::VectorXd x = Ainv * yv;
    bool inside = true;
    for (int a = 0; a < d; ++a) {
      const double xa = x(a) + map.offset[a];
      if (xa < g.axis(a).min || xa >= g.axis(a).max) inside = false;
      const double u = (xa - g.axis(a).min) / g.spacing(a);
      for (std::size_t k = 0; k < N; ++k) {
        factors[a][k] = std::polar(1.0, kTwoPi * u * static_cast<double>(g.signed_frequency(k)) / N);
      }
    }
    if (!inside) continue;
    Complex sum{0.0, 0.0};
    for (std::size_t ki = 0; ki < g.size(); ++ki) {
      Complex f = coeff[ki];
      for (int a = 0; a < d; ++a) f *= factors[a][g.axis_index(ki, a)];
      sum += f;
    }
    out[yi] = sum * norm;
  }
  double kept = 0.0;
  for (const auto& v : out) kept += std::norm(v);
  if (!(kept > 0)) throw DomainError("coordinate map moves the whole state outside the grid");
  return {GridWavefunction::normalized(g, std::move(out)), kept};
}

namespace {

struct SplitAxes {
  std::vector<int> vib, other;
};

SplitAxes split_axes(const GridSpec& g, const ProductWell& well) {
  if (well.axes.empty() || well.axes.size() != well.modes.size()) {
    throw ValidationError("product well needs one harmonic mode per vibrational axis");
  }
  SplitAxes s;
  std::vector<bool> used(g.dims(), false);
  for (int a : well.axes) {
    if (a < 0 || a >= g.dims() || used[a]) throw ValidationError("invalid or repeated vibrational axis");
    used[a] = true;
    s.vib.push_back(a);
  }
  for (int a = 0; a < g.dims(); ++a) {
    if (!used[a]) s.other.push_back(a);
  }
  return s;
}

std::size_t sub_index(const GridSpec& g, std::size_t flat, const std::vector<int>& axes) {
  std::size_t idx = 0, stride = 1;
  for (int a : axes) {
    idx += g.axis_index(flat, a) * stride;
    stride *= g.points_per_axis();
  }
  return idx;
}

}  // namespace

StateToState state_to_state(const GridWavefunction& psi_in, const ProductWell& well, int max_v,
                            double residual_threshold) {
  if (max_v < 0 || max_v > kMaxHarmonicQuanta) throw ValidationError("max_v out of range");
  const GridWavefunction psi = well.map ? resample_linear(psi_in, *well.map).state : psi_in;
  const auto& g = psi.spec();
  const auto axes = split_axes(g, well);
  const std::size_t N = g.points_per_axis();
  std::size_t nv = 1, no = 1;
  for (std::size_t i = 0; i < axes.vib.size(); ++i) nv *= N;
  for (std::size_t i = 0; i < axes.other.size(); ++i) no *= N;

  // Matrix view: psi[v][o].
  std::vector<Complex> mat(nv * no);
  for (std::size_t i = 0; i < g.size(); ++i) mat[sub_index(g, i, axes.vib) * no + sub_index(g, i, axes.other)] = psi[i];

  // Quanta tuples in lexicographic order, first axis fastest.
  StateToState out;
  const std::size_t nq = axes.vib.size();
  std::vector<int> q(nq, 0);
  for (bool more = true; more;) {
    out.quanta.push_back(q);
    more = false;
    for (std::size_t a = 0; a < nq; ++a) {
      if (++q[a] <= max_v) {
        more = true;
        break;
      }
      q[a] = 0;
    }
  }

  // Sampled basis on the vibrational sub-grid, then modified Gram-Schmidt
  // (two passes).
  std::vector<std::vector<double>> basis;
  for (const auto& qs : out.quanta) {
    std::vector<double> f(nv, 1.0);
    for (std::size_t v = 0; v < nv; ++v) {
      std::size_t rem = v;
      for (std::size_t a = 0; a < nq; ++a) {
        const auto ia = rem % N;
        rem /= N;
        const auto& md = well.modes[a];
        f[v] *= harmonic_eigenfunction(qs[a], g.coordinate(axes.vib[a], ia), md.omega, md.mass, md.center);
      }
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& e : basis) {
        double dot = 0.0;
        for (std::size_t v = 0; v < nv; ++v) dot += e[v] * f[v];
        for (std::size_t v = 0; v < nv; ++v) f[v] -= dot * e[v];
      }
    }
    double n2 = 0.0;
    for (double x : f) n2 += x * x;
    if (!(n2 > 1e-20)) throw ValidationError("harmonic basis is not resolvable on this grid");
    const double inv = 1.0 / std::sqrt(n2);
    for (double& x : f) x *= inv;
    basis.push_back(std::move(f));
  }

  double total = 0.0;
  for (const auto& v : mat) total += std::norm(v);
  double sum = 0.0;
  for (const auto& e : basis) {
    double p = 0.0;
    for (std::size_t o = 0; o < no; ++o) {
      Complex a{0.0, 0.0};
      for (std::size_t v = 0; v < nv; ++v) a += e[v] * mat[v * no + o];
      p += std::norm(a);
    }
    p /= total;
    out.probabilities.push_back(p);
    sum += p;
  }
  out.residual = 1.0 - sum;
  out.flagged = out.residual > residual_threshold;
  return out;
}

StateToState state_to_state(const std::vector<std::pair<double, GridWavefunction>>& mixture,
                            const ProductWell& well, int max_v, double residual_threshold) {
  if (mixture.empty()) throw ValidationError("mixture is empty");
  double wsum = 0.0;
  for (const auto& [w, psi] : mixture) {
    if (!(w >= 0) || !std::isfinite(w)) throw ValidationError("mixture weights must be non-negative");
    wsum += w;
  }
  if (!(wsum > 0)) throw ValidationError("mixture weights sum to zero");
  StateToState out;
  for (const auto& [w, psi] : mixture) {
    const auto part = state_to_state(psi, well, max_v, residual_threshold);
    if (out.quanta.empty()) {
      out.quanta = part.quanta;
      out.probabilities.assign(part.probabilities.size(), 0.0);
    }
    for (std::size_t i = 0; i < part.probabilities.size(); ++i) out.probabilities[i] += w / wsum * part.probabilities[i];
    out.residual += w / wsum * part.residual;
  }
  out.flagged = out.residual > residual_threshold;
  return out;
}

SeparationMonitor::SeparationMonitor(RegionMap map, double threshold, int consecutive)
    : map_(std::move(map)), threshold_(threshold), consecutive_(consecutive) {
  if (!(threshold_ > 0) || consecutive_ < 1) throw ValidationError("separation monitor needs positive settings");
}

bool SeparationMonitor::observe(const GridWavefunction& psi, int steps) {
  if (steps < 1) throw ValidationError("snapshot spacing must be at least one step");
  auto p = region_probabilities(psi, map_);
  if (!prev_.empty()) {
    double flux = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) flux = std::max(flux, std::abs(p[i] - prev_[i]));
    last_flux_ = flux / steps;
    streak_ = last_flux_ < threshold_ ? streak_ + 1 : 0;
  }
  prev_ = std::move(p);
  return separated();
}

void write_records_json(std::ostream& out, const std::vector<ObservableRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"observable", r.observable},
                   {"value", r.value},
                   {"stderr", r.std_error},
                   {"shots", r.shots},
                   {"seed", r.seed},
                   {"scenario_hash", r.scenario_hash}});
  }
  out << arr.dump(2) << '\n';
}

void write_histogram_csv(std::ostream& out, const PhaseEstimate& est) {
  out << "bin,phase,probability,count\n";
  for (std::size_t b = 0; b < est.probabilities.size(); ++b) {
    const auto it = est.histogram.find(b);
    out << b << ',' << est.phase(b) << ',' << est.probabilities[b] << ','
        << (it == est.histogram.end() ? 0 : it->second) << '\n';
  }
}

}  // namespace qdyn
