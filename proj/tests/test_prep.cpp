#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qdyn/errors.hpp"
#include "qdyn/prep.hpp"
#include "qdyn/state.hpp"
#include "support.hpp"

using namespace qdyn;
using qdyn::testing::momentum_moments;

namespace {

constexpr double kPi = std::numbers::pi;

WavepacketSpec packet1d(double x0, double p0, double sigma) { return {{x0}, {p0}, {sigma}}; }

}  // namespace

TEST_CASE("Gaussian packet moments and symmetry") {
  const auto g = GridSpec::uniform(7, 1, -10.0, 10.0);
  SUBCASE("centered, at rest: real and mirror symmetric") {
    const auto psi = gaussian_packet(packet1d(0.0, 0.0, 1.0), g);
    CHECK(psi.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(psi[i].imag()) < 1e-15);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(std::abs(psi[i] - psi[g.size() - i]) < 1e-14);
  }
  SUBCASE("mean position and momentum") {
    const double p0 = 1.7;
    const auto psi = gaussian_packet(packet1d(1.5, p0, 1.2), g);
    CHECK(std::abs(position_expectation(psi)[0] - 1.5) <= g.spacing(0));
    CHECK(std::abs(momentum_moments(psi).first - p0) <= g.momentum_spacing(0));
  }
  SUBCASE("one more qubit at fixed spacing doubles the width and halves the momentum spread") {
    const auto g6 = GridSpec::uniform(6, 1, -10.0, 10.0);
    const auto g7 = GridSpec::uniform(7, 1, -20.0, 20.0);
    const auto [a1, a2] = momentum_moments(gaussian_packet(packet1d(0.0, 0.0, 1.5), g6));
    const auto [b1, b2] = momentum_moments(gaussian_packet(packet1d(0.0, 0.0, 3.0), g7));
    CHECK(std::sqrt(b2 - b1 * b1) / std::sqrt(a2 - a1 * a1) == doctest::Approx(0.5).epsilon(1e-6));
  }
  SUBCASE("unresolvable or clipped packets are rejected") {
    CHECK_THROWS_AS(gaussian_packet(packet1d(0.0, 0.0, 0.2), g), ValidationError);
    CHECK_THROWS_AS(gaussian_packet(packet1d(8.0, 0.0, 1.0), g), ValidationError);
    CHECK_THROWS_AS(gaussian_packet({{0.0}, {0.0}, {}}, g), ValidationError);
  }
}

TEST_CASE("harmonic eigenstates") {
  const auto g = GridSpec::uniform(7, 1, -10.0, 10.0);
  const double omega = 1.3, mass = 0.8;
  SUBCASE("ground state equals the minimum-uncertainty Gaussian") {
    const auto psi = harmonic_eigenstate(0, omega, mass, g);
    const auto gauss = gaussian_packet(packet1d(0.0, 0.0, std::sqrt(1 / (2 * mass * omega))), g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(psi[i] - gauss[i]) < 1e-10);
  }
  SUBCASE("matches closed-form Hermite functions and is orthonormal") {
    std::vector<GridWavefunction> states;
    for (int v = 0; v <= 5; ++v) {
      states.push_back(harmonic_eigenstate(v, omega, mass, g));
      const auto ref = GridWavefunction::normalized(g, qdyn::testing::ho_grid(g, v, mass, omega));
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(states.back()[i] - ref[i]) < 1e-10);
    }
    for (int v = 0; v <= 5; ++v) {
      for (int w = 0; w <= 5; ++w) CHECK(std::abs(overlap(states[v], states[w]) - (v == w ? 1.0 : 0.0)) <= 1e-8);
    }
  }
  SUBCASE("stationary in its own well for ten periods") {
    const std::vector<double> masses{mass};
    const double dt = 0.01;
    const int steps = static_cast<int>(std::lround(10 * 2 * kPi / omega / dt));
    for (int v : {0, 2}) {
      const auto psi0 = harmonic_eigenstate(v, omega, mass, g);
      const auto prop = SplitOperatorPropagator::physical(
          g, [&](const Point& x) { return 0.5 * mass * omega * omega * x[0] * x[0]; }, masses, dt);
      CHECK(fidelity(psi0, prop.step(psi0, steps)) >= 1 - 1e-4);
    }
  }
  SUBCASE("rejects states the grid cannot hold") {
    CHECK_THROWS_AS(harmonic_eigenstate(50, omega, mass, g), ValidationError);
    CHECK_THROWS_AS(harmonic_eigenstate(-1, omega, mass, g), ValidationError);
    CHECK_THROWS_AS(harmonic_eigenstate(0, omega, mass, GridSpec::uniform(3, 2, -5.0, 5.0)), ValidationError);
  }
  SUBCASE("product state factorizes") {
    const auto g2 = GridSpec::uniform(5, 2, -6.0, 6.0);
    const auto psi = harmonic_product_state({{1, 1.0, 1.0, 0.0}, {0, 2.0, 1.0, 0.5}}, g2);
    const auto g1 = GridSpec::uniform(5, 1, -6.0, 6.0);
    const auto a = harmonic_eigenstate(1, 1.0, 1.0, g1);
    const auto b = harmonic_eigenstate(0, 2.0, 1.0, g1, 0.5);
    for (std::size_t i = 0; i < g2.size(); ++i) {
      CHECK(std::abs(psi[i] - a[g2.axis_index(i, 0)] * b[g2.axis_index(i, 1)]) < 1e-12);
    }
  }
}

TEST_CASE("Grover-Rudolph amplitude loading") {
  auto load = [](const std::vector<double>& mass) {
    const int n = std::countr_zero(mass.size());
    const RegisterLayout layout{{"x", n}};
    CircuitState s(layout);
    s.apply(amplitude_load_circuit(mass, {0, n}, n));
    return s;
  };
  SUBCASE("uniform target") {
    const std::vector<double> mass(16, 1.0);
    for (const auto& level : amplitude_load_angles(mass)) {
      for (double a : level) CHECK(a == doctest::Approx(kPi / 2));
    }
    const auto s = load(mass);
    for (auto a : s.amplitudes()) CHECK(std::abs(a - 0.25) < 1e-12);
  }
  SUBCASE("arbitrary non-negative targets up to eight qubits") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 1; n <= 8; ++n) {
      std::vector<double> mass(std::size_t{1} << n);
      double total = 0;
      for (auto& m : mass) total += (m = u(rng) < 0.2 ? 0.0 : u(rng));
      const auto s = load(mass);
      for (std::size_t i = 0; i < mass.size(); ++i) CHECK(std::abs(s.amplitudes()[i] - std::sqrt(mass[i] / total)) < 1e-8);
      // 2^n - 1 rotations and 2^n - 2 CNOTs.
      CHECK(s.tally().single_qubit == static_cast<std::int64_t>(mass.size() - 1));
      CHECK(s.tally().cnot == static_cast<std::int64_t>(mass.size() - 2));
    }
  }
  SUBCASE("Gaussian target reproduces the packet") {
    const auto g = GridSpec::uniform(6, 1, -8.0, 8.0);
    const auto packet = gaussian_packet(packet1d(0.5, 0.0, 1.0), g);
    std::vector<double> mass;
    for (auto a : packet.amplitudes()) mass.push_back(std::norm(a));
    const auto s = load(mass);
    const GridWavefunction loaded(g, {s.amplitudes().begin(), s.amplitudes().end()});
    CHECK(fidelity(loaded, packet) >= 1 - 1e-8);
  }
  SUBCASE("point mass gives a basis state") {
    std::vector<double> mass(8, 0.0);
    mass[5] = 2.0;
    const auto s = load(mass);
    CHECK(std::abs(s.amplitudes()[5] - 1.0) < 1e-12);
  }
  SUBCASE("invalid targets") {
    CHECK_THROWS_AS(amplitude_load_angles({1.0, -0.5}), DomainError);
    CHECK_THROWS_AS(amplitude_load_angles({0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(amplitude_load_angles({1.0, 1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(amplitude_load_circuit({1.0, 1.0}, {0, 2}, 2), ValidationError);
  }
}

TEST_CASE("thermal ensembles") {
  SUBCASE("weights normalize") {
    const ThermalSpec spec{.temperature = 0.7, .e_max = 3.0, .de = 0.05,
                           .levels = {{0, 0.0, {}}, {1, 0.4, {}}, {2, 1.1, {}}}};
    const auto ens = thermal_bins(spec);
    double s = 0;
    for (const auto& b : ens.bins) s += b.gamma_sq * ens.c_squared;
    CHECK(std::abs(s - 1.0) <= 1e-10);
    for (const auto& b : ens.bins) CHECK(b.energy >= spec.levels[b.level].energy);
    CHECK(ens.partition == doctest::Approx(1 + std::exp(-0.4 / 0.7) + std::exp(-1.1 / 0.7)));
  }
  SUBCASE("low temperature collapses onto the lowest bin") {
    const ThermalSpec spec{.temperature = 1e-3, .e_max = 2.0, .de = 0.1, .levels = {{0, 0.0, {}}, {1, 0.5, {}}}};
    for (const auto& s : thermal_sample(spec, 1, 1000)) CHECK(s.bin == 0);
  }
  SUBCASE("bins one temperature apart are populated e^-1 to 1") {
    const double T = 0.5;
    const ThermalSpec spec{.temperature = T, .e_max = 2 * T, .de = T, .levels = {{0, 0.0, {}}}};
    const std::size_t count = 100000;
    std::size_t lo = 0, hi = 0;
    for (const auto& s : thermal_sample(spec, 2024, count)) (s.bin == 0 ? lo : hi) += 1;
    const double p = std::exp(-1.0) / (1 + std::exp(-1.0));
    const double sigma = std::sqrt(p * (1 - p) / count);
    CHECK(std::abs(static_cast<double>(hi) / count - p) <= 3 * sigma);
    CHECK(lo + hi == count);
  }
  SUBCASE("empirical distribution converges in total variation") {
    const ThermalSpec spec{.temperature = 0.3, .e_max = 1.5, .de = 0.1, .levels = {{0, 0.0, {}}, {1, 0.25, {}}}};
    const auto ens = thermal_bins(spec);
    const std::size_t count = 20000;
    std::vector<double> freq(ens.bins.size(), 0.0);
    for (const auto& s : thermal_sample(spec, 9, count)) freq[s.bin] += 1.0 / count;
    double tv = 0;
    for (std::size_t i = 0; i < freq.size(); ++i) tv += 0.5 * std::abs(freq[i] - ens.bins[i].weight);
    CHECK(tv <= 5 / std::sqrt(static_cast<double>(count)));
    const auto again = thermal_sample(spec, 9, 50);
    const auto first = thermal_sample(spec, 9, 50);
    for (std::size_t i = 0; i < 50; ++i) CHECK(again[i].bin == first[i].bin);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(thermal_bins({.temperature = 0.0, .levels = {{0, 0.0, {}}}}), ValidationError);
    CHECK_THROWS_AS(thermal_bins({.temperature = 1.0}), ValidationError);
    CHECK_THROWS_AS(thermal_bins({.temperature = 1.0, .e_max = 1.0, .de = 0.1, .levels = {{0, 5.0, {}}}}),
                    DomainError);
  }
}

TEST_CASE("reactant builder sets the mean kinetic energy") {
  const auto g = GridSpec::uniform(8, 1, -60.0, 60.0);
  const ThermalSpec spec{.temperature = 1.0, .e_max = 2.0, .de = 0.1, .levels = {{0, 0.2, {}}}};
  const ReactantBuilder builder{.mass = 2.0, .center = -20.0, .width = 4.0, .direction = 1};
  const ThermalSample s{0, 0, 0, 1.05, 0.85};
  const auto psi = build_reactant(s, spec, builder, g);
  const auto [m1, m2] = momentum_moments(psi);
  CHECK(m2 / (2 * builder.mass) == doctest::Approx(0.85).epsilon(1e-6));
  CHECK(m1 > 0);
  CHECK_THROWS_AS(build_reactant({0, 0, 0, 0.1, -0.1}, spec, builder, g), DomainError);
  CHECK_THROWS_AS(incoming_momentum(1e-4, 1.0, 0.5), DomainError);

  SUBCASE("internal mode takes the level's quanta") {
    const auto g2 = GridSpec::uniform(6, 2, -30.0, 30.0);
    const ThermalSpec s2{.temperature = 1.0, .e_max = 2.0, .de = 0.1, .levels = {{7, 0.0, {2}}}};
    const ReactantBuilder b2{.mass = 1.0, .center = -10.0, .width = 3.0, .direction = 1,
                             .internal = {{0, 0.25, 1.0, 0.0}}};
    const auto psi2 = build_reactant({0, 0, 7, 0.55, 0.55}, s2, b2, g2);
    double odd = 0;
    for (std::size_t i = 0; i < g2.size(); ++i) {
      const std::size_t mirror = g2.axis_index(i, 0) + g2.points_per_axis() *
                                 ((g2.points_per_axis() - g2.axis_index(i, 1)) % g2.points_per_axis());
      odd += std::norm(psi2[i] - psi2[mirror]);
    }
    CHECK(odd < 1e-20);  // v = 2 is even along the internal axis
  }
  std::ostringstream out;
  write_ensemble_manifest(out, spec, thermal_sample(spec, 3, 4), 3);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["samples"].size() == 4);
  CHECK(j["seed"] == 3);
}
