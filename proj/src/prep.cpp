#include "qdyn/prep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "json.hpp"
#include "qdyn/errors.hpp"

namespace qdyn {

namespace {

constexpr double kPi = std::numbers::pi;

void check_packet_axis(const GridSpec& grid, int a, double center, double width) {
  if (!std::isfinite(center) || !std::isfinite(width) || width <= 0) {
    throw ValidationError("packet center and width must be finite, width positive");
  }
  if (width < 2 * grid.spacing(a)) {
    throw ValidationError("packet width " + std::to_string(width) + " is below two grid spacings on axis " +
                          std::to_string(a));
  }
  const auto& ext = grid.axis(a);
  if (center - 5 * width < ext.min || center + 5 * width > ext.max) {
    throw ValidationError("packet lies within five widths of the edge on axis " + std::to_string(a));
  }
}

void check_mode(const GridSpec& grid, int a, const HarmonicMode& mode) {
  if (mode.quanta < 0 || mode.quanta > kMaxHarmonicQuanta) {
    throw ValidationError("harmonic quantum number out of range");
  }
  if (!(mode.omega > 0) || !(mode.mass > 0)) throw ValidationError("harmonic mode needs positive omega and mass");
  // Classical turning point plus a few decay lengths must fit, and so must
  // the matching momentum below Nyquist.
  const double k = std::sqrt(mode.mass * mode.omega);
  const double reach = std::sqrt(2.0 * mode.quanta + 1) / k + 3 / k;
  const auto& ext = grid.axis(a);
  if (mode.center - reach < ext.min || mode.center + reach > ext.max) {
    throw ValidationError("harmonic state v=" + std::to_string(mode.quanta) + " does not fit the grid");
  }
  const double p_reach = std::sqrt(2.0 * mode.quanta + 1) * k + 3 * k;
  if (p_reach > kPi / grid.spacing(a)) {
    throw ValidationError("harmonic state v=" + std::to_string(mode.quanta) + " is not resolved by the grid");
  }
}

}  // namespace

GridWavefunction gaussian_packet(const WavepacketSpec& spec, const GridSpec& grid) {
  const auto d = static_cast<std::size_t>(grid.dims());
  if (spec.center.size() != d || spec.momentum.size() != d || spec.width.size() != d) {
    throw ValidationError("wavepacket needs one center, momentum and width per axis");
  }
  for (int a = 0; a < grid.dims(); ++a) check_packet_axis(grid, a, spec.center[a], spec.width[a]);
  return init_wavefunction(grid, [&](const Point& x) {
    double re = 0.0, phase = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double u = x[a] - spec.center[a];
      re -= u * u / (4 * spec.width[a] * spec.width[a]);
      phase += spec.momentum[a] * x[a];
    }
    return std::polar(std::exp(re), phase);
  });
}

double harmonic_eigenfunction(int v, double x, double omega, double mass, double center) {
  if (v < 0) throw ValidationError("harmonic quantum number must be non-negative");
  const double k = std::sqrt(mass * omega);
  const double xi = k * (x - center);
  double prev = 0.0;
  double cur = std::pow(mass * omega / kPi, 0.25) * std::exp(-0.5 * xi * xi);
  for (int j = 0; j < v; ++j) {
    const double next = std::sqrt(2.0 / (j + 1)) * xi * cur - std::sqrt(static_cast<double>(j) / (j + 1)) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

GridWavefunction harmonic_product_state(const std::vector<HarmonicMode>& modes, const GridSpec& grid) {
  if (static_cast<int>(modes.size()) != grid.dims()) throw ValidationError("one harmonic mode per axis");
  for (int a = 0; a < grid.dims(); ++a) check_mode(grid, a, modes[a]);
  return init_wavefunction(grid, [&](const Point& x) {
    double v = 1.0;
    for (std::size_t a = 0; a < modes.size(); ++a) {
      const auto& md = modes[a];
      v *= harmonic_eigenfunction(md.quanta, x[a], md.omega, md.mass, md.center);
    }
    return Complex{v, 0.0};
  });
}

GridWavefunction harmonic_eigenstate(int v, double omega, double mass, const GridSpec& grid, double center) {
  if (grid.dims() != 1) throw ValidationError("harmonic_eigenstate takes a 1D grid");
  return harmonic_product_state({HarmonicMode{v, omega, mass, center}}, grid);
}

std::vector<std::vector<double>> amplitude_load_angles(const std::vector<double>& mass) {
  if (mass.empty() || !std::has_single_bit(mass.size())) {
    throw ValidationError("target distribution length must be a power of two");
  }
  double total = 0.0;
  for (double w : mass) {
    if (!std::isfinite(w) || w < 0) throw DomainError("target distribution must be finite and non-negative");
    total += w;
  }
  if (total <= 0) throw DomainError("target distribution has no mass");
  const int n = std::countr_zero(mass.size());
  // Prefix sums make every block mass O(1).
  std::vector<double> prefix(mass.size() + 1, 0.0);
  for (std::size_t i = 0; i < mass.size(); ++i) prefix[i + 1] = prefix[i] + mass[i];
  auto block = [&](std::size_t lo, std::size_t len) { return prefix[lo + len] - prefix[lo]; };

  std::vector<std::vector<double>> angles(n);
  for (int k = 0; k < n; ++k) {
    const std::size_t len = std::size_t{1} << (n - k);
    angles[k].resize(std::size_t{1} << k);
    for (std::size_t p = 0; p < angles[k].size(); ++p) {
      const double parent = block(p * len, len);
      const double left = block(p * len, len / 2);
      angles[k][p] = parent > 0 ? 2 * std::acos(std::sqrt(std::clamp(left / parent, 0.0, 1.0))) : 0.0;
    }
  }
  return angles;
}

Circuit amplitude_load_circuit(const std::vector<double>& mass, QubitRange reg, int num_qubits) {
  if (mass.size() != (std::size_t{1} << reg.count)) {
    throw ValidationError("target distribution must have 2^n entries for an n-qubit register");
  }
  const auto angles = amplitude_load_angles(mass);
  const int n = reg.count;
  Circuit c(num_qubits);
  for (int k = 0; k < n; ++k) {
    const int target = reg.qubit(n - 1 - k);
    if (k == 0) {
      c.ry(target, angles[0][0]);
      continue;
    }
    // Control bit b of the prefix is qubit n-k+b. Gray-code walk: theta_j
    // = 2^-k sum_p (-1)^{popcount(p & g_j)} alpha_p.
    const std::size_t count = std::size_t{1} << k;
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t g = j ^ (j >> 1);
      double theta = 0.0;
      for (std::size_t p = 0; p < count; ++p) {
        theta += (std::popcount(p & g) % 2 ? -1.0 : 1.0) * angles[k][p];
      }
      c.ry(target, theta / static_cast<double>(count));
      const int flip = j + 1 < count ? std::countr_zero(j + 1) : k - 1;
      c.cnot(reg.qubit(n - k + flip), target);
    }
  }
  return c;
}

ThermalEnsemble thermal_bins(const ThermalSpec& spec) {
  if (!(spec.temperature > 0) || !std::isfinite(spec.temperature)) throw ValidationError("temperature must be positive");
  if (!(spec.de > 0) || !(spec.e_max > 0)) throw ValidationError("energy grid must have positive step and cutoff");
  if (!(spec.hbar > 0)) throw ValidationError("hbar must be positive");
  if (spec.levels.empty()) throw ValidationError("thermal ensemble needs at least one level");
  ThermalEnsemble ens;
  ens.partition = spec.partition;
  if (ens.partition <= 0) {
    for (const auto& l : spec.levels) ens.partition += std::exp(-l.energy / spec.temperature);
  }
  double total = 0.0;
  for (std::size_t li = 0; li < spec.levels.size(); ++li) {
    const double e_zeta = spec.levels[li].energy;
    // Bin midpoints (j + 1/2) dE up to the cutoff.
    for (std::size_t j = 0;; ++j) {
      const double e = (static_cast<double>(j) + 0.5) * spec.de;
      if (e > spec.e_max) break;
      if (e < e_zeta) continue;
      ThermalBin b;
      b.level = li;
      b.energy = e;
      b.kinetic = e - e_zeta;
      b.gamma_sq = std::exp(-e / spec.temperature) * spec.de / (2 * kPi * spec.hbar * ens.partition);
      total += b.gamma_sq;
      ens.bins.push_back(b);
    }
  }
  if (ens.bins.empty() || !(total > 0)) throw DomainError("no accessible (level, energy) bin at this temperature");
  ens.c_squared = 1.0 / total;
  for (auto& b : ens.bins) b.weight = b.gamma_sq * ens.c_squared;
  return ens;
}

std::vector<ThermalSample> thermal_sample(const ThermalSpec& spec, std::uint64_t seed, std::size_t count) {
  const auto ens = thermal_bins(spec);
  std::vector<double> w;
  w.reserve(ens.bins.size());
  for (const auto& b : ens.bins) w.push_back(b.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::mt19937_64 rng(seed);
  std::vector<ThermalSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto k = pick(rng);
    const auto& b = ens.bins[k];
    out.push_back({k, b.level, spec.levels[b.level].zeta, b.energy, b.kinetic});
  }
  return out;
}

double incoming_momentum(double kinetic, double mass, double width) {
  const double p2 = 2 * mass * kinetic - 1 / (4 * width * width);
  if (!(p2 >= 0)) throw DomainError("packet width alone carries more than the requested kinetic energy");
  return std::sqrt(p2);
}

GridWavefunction build_reactant(const ThermalSample& sample, const ThermalSpec& spec,
                                const ReactantBuilder& builder, const GridSpec& grid) {
  if (sample.level >= spec.levels.size()) throw ValidationError("sample refers to an unknown level");
  const auto& level = spec.levels[sample.level];
  if (sample.energy < level.energy) throw DomainError("sample energy lies below its internal level");
  if (grid.dims() != 1 + static_cast<int>(builder.internal.size())) {
    throw ValidationError("grid needs one reaction axis plus one axis per internal mode");
  }
  if (level.quanta.size() != builder.internal.size()) {
    throw ValidationError("level quanta do not match the internal modes");
  }
  check_packet_axis(grid, 0, builder.center, builder.width);
  std::vector<HarmonicMode> modes = builder.internal;
  for (std::size_t a = 0; a < modes.size(); ++a) {
    modes[a].quanta = level.quanta[a];
    check_mode(grid, static_cast<int>(a) + 1, modes[a]);
  }
  const double p0 = builder.direction * incoming_momentum(sample.kinetic, builder.mass, builder.width);
  return init_wavefunction(grid, [&](const Point& x) {
    const double u = x[0] - builder.center;
    double v = std::exp(-u * u / (4 * builder.width * builder.width));
    for (std::size_t a = 0; a < modes.size(); ++a) {
      v *= harmonic_eigenfunction(modes[a].quanta, x[a + 1], modes[a].omega, modes[a].mass, modes[a].center);
    }
    return std::polar(v, p0 * x[0]);
  });
}

void write_ensemble_manifest(std::ostream& out, const ThermalSpec& spec,
                             const std::vector<ThermalSample>& samples, std::uint64_t seed) {
  using nlohmann::json;
  const auto ens = thermal_bins(spec);
  json levels = json::array();
  for (const auto& l : spec.levels) levels.push_back({{"zeta", l.zeta}, {"energy", l.energy}, {"quanta", l.quanta}});
  json draws = json::array();
  for (const auto& s : samples) {
    draws.push_back({{"bin", s.bin}, {"zeta", s.zeta}, {"energy", s.energy}, {"kinetic", s.kinetic}});
  }
  const json j = {{"temperature", spec.temperature},
                  {"e_max", spec.e_max},
                  {"de", spec.de},
                  {"partition", ens.partition},
                  {"c_squared", ens.c_squared},
                  {"bins", ens.bins.size()},
                  {"levels", levels},
                  {"seed", seed},
                  {"samples", draws}};
  out << j.dump(2) << '\n';
}

}  // namespace qdyn
