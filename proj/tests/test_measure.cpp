#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qdyn/errors.hpp"
#include "qdyn/measure.hpp"
#include "support.hpp"

using namespace qdyn;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

Propagate make_propagator(const GridSpec& g, RealField v, double mass, double dt, int steps) {
  const std::vector<double> masses{mass};
  auto prop = std::make_shared<SplitOperatorPropagator>(SplitOperatorPropagator::physical(g, v, masses, dt));
  return [prop, steps](const GridWavefunction& psi) { return prop->step(psi, steps); };
}

// Reactant packets start at x = -30 and move right; products are x >= 0.
RateJob free_job(double de, std::size_t samples, std::uint64_t seed) {
  RateJob job;
  job.thermal = {.temperature = 0.5, .e_max = 3.0, .de = de, .levels = {{0, 0.0, {}}}};
  job.reactant = {.mass = 1.0, .center = -30.0, .width = 4.0, .direction = 1};
  job.grid = GridSpec::uniform(9, 1, -100.0, 100.0);
  job.regions = RegionMap::split(1, 0, 0.0);
  // V = 0 makes one split step exact free evolution for any duration.
  job.propagate = make_propagator(job.grid, [](const Point&) { return 0.0; }, 1.0, 20.0, 1);
  job.samples = samples;
  job.seed = seed;
  return job;
}

// Deterministic sum over every (zeta, E) bin of Gamma^2 * P_r with the
// Boltzmann weights recomputed here.
double quadrature_rate(const RateJob& job) {
  const auto ens = thermal_bins(job.thermal);
  double q = 0;
  for (const auto& l : job.thermal.levels) q += std::exp(-l.energy / job.thermal.temperature);
  double k = 0;
  for (std::size_t b = 0; b < ens.bins.size(); ++b) {
    const double e = ens.bins[b].energy;
    const double g2 = std::exp(-e / job.thermal.temperature) * job.thermal.de / (2 * kPi * job.thermal.hbar * q);
    k += g2 * bin_reaction_probability(job, ens, b);
  }
  return k;
}

}  // namespace

TEST_CASE("region maps and labeling") {
  const auto g = GridSpec::uniform(7, 1, -10.0, 10.0);
  SUBCASE("overlapping or malformed regions are rejected") {
    CHECK_THROWS_AS(RegionMap({{"a", {{{-kInf}, {1.0}}}}, {"b", {{{0.0}, {kInf}}}}}, 0, 1), ValidationError);
    CHECK_THROWS_AS(RegionMap({{"a", {{{1.0}, {1.0}}}}}, 0, 1), ValidationError);
    CHECK_THROWS_AS(RegionMap({{"a", {{{0.0}, {1.0}}}}}, 3, 1), ValidationError);
    CHECK_THROWS_AS(RegionMap::split(1, 1, 0.0), ValidationError);
  }
  SUBCASE("single region gives a deterministic label") {
    const RegionMap all({{"all", {}}}, 0, 1);
    const auto r = reaction_probability(gaussian_packet({{1.0}, {0.5}, {1.0}}, g), all, {0}, 100, 1);
    CHECK(r.exact == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.estimate == 1.0);
  }
  SUBCASE("symmetric packet splits evenly") {
    const auto psi = gaussian_packet({{0.0}, {0.0}, {1.0}}, g);
    // Amplitudes are grid-normalized, so dx * rho_max is the largest |a|^2.
    double dx_rho_max = 0;
    for (std::size_t i = 0; i < g.size(); ++i) dx_rho_max = std::max(dx_rho_max, std::norm(psi[i]));
    const auto p = region_probabilities(psi, RegionMap::split(1, 0, 0.0));
    CHECK(std::abs(p[0] - 0.5) <= dx_rho_max);
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("region register marginal equals the grid sum") {
    const auto psi = gaussian_packet({{-0.7}, {1.0}, {1.3}}, g);
    const RegionMap three({{"left", {{{-kInf}, {-1.0}}}}, {"mid", {{{-1.0}, {1.0}}}}, {"right", {{{1.0}, {kInf}}}}}, 0,
                          1);
    const auto exact = region_probabilities(psi, three);
    const auto state = attach_region_register(psi, three);
    const auto marginal = state.marginal("region");
    for (int l = 0; l < 3; ++l) CHECK(std::abs(marginal[l] - exact[l]) < 1e-12);
    const std::size_t shots = 10000;
    for (int l = 0; l < 3; ++l) {
      const auto r = reaction_probability(psi, three, {l}, shots, 77 + l);
      CHECK(std::abs(r.estimate - exact[l]) <= 4 * std::sqrt(exact[l] * (1 - exact[l]) / shots));
    }
  }
  SUBCASE("refining the product region does not change the exact value") {
    const auto psi = gaussian_packet({{0.4}, {0.0}, {1.5}}, g);
    const RegionMap fine({{"reactant", {{{-kInf}, {0.0}}}}, {"near", {{{0.0}, {2.0}}}}, {"far", {{{2.0}, {kInf}}}}}, 0,
                         1);
    const double coarse = reaction_probability(psi, RegionMap::split(1, 0, 0.0), {1}, 1, 0).exact;
    CHECK(reaction_probability(psi, fine, {1, 2}, 1, 0).exact == doctest::Approx(coarse).epsilon(1e-14));
  }
}

TEST_CASE("reaction probability sampling") {
  const auto g = GridSpec::uniform(7, 1, -10.0, 10.0);
  const auto map = RegionMap::split(1, 0, 0.0);
  SUBCASE("contained packet") {
    const auto r = reaction_probability(gaussian_packet({{6.0}, {0.0}, {0.5}}, g), map, {1}, 500, 3);
    CHECK(r.exact == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.estimate == 1.0);
  }
  SUBCASE("standard error halves when shots quadruple") {
    const auto psi = gaussian_packet({{0.3}, {0.0}, {1.0}}, g);
    const auto a = reaction_probability(psi, map, {1}, 4000, 11);
    const auto b = reaction_probability(psi, map, {1}, 16000, 12);
    CHECK(b.std_error / a.std_error == doctest::Approx(0.5).epsilon(0.05));
  }
  SUBCASE("invalid requests") {
    const auto psi = gaussian_packet({{0.0}, {0.0}, {1.0}}, g);
    CHECK_THROWS_AS(reaction_probability(psi, map, {2}, 10, 0), ValidationError);
    CHECK_THROWS_AS(reaction_probability(psi, map, {1}, 0, 0), ValidationError);
    CHECK_THROWS_AS(reaction_probability(psi, map, {1}, 10, 0, 5), ResourceCapError);
  }
}

TEST_CASE("barrier transmission matches the closed-form Eckart coefficient") {
  // V = sech^2(x), unit mass, incident energy 1 (just below the top).
  const auto g = GridSpec::uniform(12, 1, -200.0, 200.0);
  const double e0 = 1.0, sigma = 10.0, dt = 0.05, t = 100.0;
  const auto psi0 = gaussian_packet({{-60.0}, {std::sqrt(2 * e0)}, {sigma}}, g);
  const auto prop = make_propagator(g, [](const Point& x) { return 1.0 / std::pow(std::cosh(x[0]), 2); }, 1.0, dt,
                                    static_cast<int>(std::lround(t / dt)));
  const auto r = reaction_probability(prop(psi0), RegionMap::split(1, 0, 0.0), {1}, 1000, 5);
  const double oracle = qdyn::testing::eckart_transmission(e0, 1.0, 1.0, 1.0);
  CHECK(std::abs(r.exact - oracle) <= 0.02 * oracle);
}

TEST_CASE("thermal rate constant") {
  SUBCASE("free-flight bin probabilities match the spreading-Gaussian oracle") {
    const auto job = free_job(0.1, 1, 0);
    const auto ens = thermal_bins(job.thermal);
    for (std::size_t b : {std::size_t{3}, std::size_t{10}, std::size_t{20}}) {
      const double ke = ens.bins[b].kinetic;
      const double p0 = incoming_momentum(ke, 1.0, 4.0);
      // Free spreading Gaussian density, summed on the same grid points.
      const double st = 4.0 * std::sqrt(1 + std::pow(20.0 / (2 * 16.0), 2));
      const double mean = -30.0 + p0 * 20.0;
      double oracle = 0;
      for (std::size_t i = 0; i < job.grid.size(); ++i) {
        const double x = job.grid.coordinate(0, i);
        if (x >= 0) oracle += std::exp(-(x - mean) * (x - mean) / (2 * st * st));
      }
      oracle *= job.grid.spacing(0) / (std::sqrt(2 * kPi) * st);
      CHECK(std::abs(bin_reaction_probability(job, ens, b) - oracle) < 1e-6);
    }
  }
  SUBCASE("Monte Carlo agrees with the bin quadrature through a barrier") {
    auto job = free_job(0.1, 400, 2024);
    job.propagate = make_propagator(job.grid, [](const Point& x) { return 0.8 * std::exp(-x[0] * x[0] / 2); }, 1.0,
                                    0.02, 1000);
    const double k_q = quadrature_rate(job);
    const auto est = rate_constant(job);
    CHECK(est.samples == 400);
    CHECK(est.propagations <= thermal_bins(job.thermal).bins.size());
    CHECK(est.raw_probability == doctest::Approx(est.c_squared * est.k).epsilon(1e-12));
    CHECK(std::abs(est.k - k_q) <= 3 * est.std_error);
  }
  SUBCASE("Monte Carlo error falls as one over root samples") {
    const double k_q = quadrature_rate(free_job(0.1, 1, 0));
    std::vector<double> sizes, rmse;
    for (std::size_t n : {16, 64, 256, 1024}) {
      double s2 = 0;
      const int seeds = 40;
      for (int s = 0; s < seeds; ++s) s2 += std::pow(rate_constant(free_job(0.1, n, 1000 * n + s)).k - k_q, 2);
      sizes.push_back(static_cast<double>(n));
      rmse.push_back(std::sqrt(s2 / seeds));
    }
    CHECK(std::abs(qdyn::testing::loglog_slope(sizes, rmse) + 0.5) <= 0.1);
  }
  SUBCASE("blocked channel gives no rate") {
    auto job = free_job(0.1, 200, 8);
    job.regions = RegionMap::split(1, 0, 10.0);  // beyond the evanescent tail inside the wall
    job.propagate = make_propagator(job.grid, [](const Point& x) { return 20.0 * std::exp(-x[0] * x[0] / 8); }, 1.0,
                                    0.01, 2000);
    const double open = quadrature_rate(free_job(0.1, 1, 0));
    CHECK(rate_constant(job).k < 1e-8 * open);
  }
  SUBCASE("halving the bin width barely moves the quadrature") {
    const double coarse = quadrature_rate(free_job(0.1, 1, 0));
    const double fine = quadrature_rate(free_job(0.05, 1, 0));
    CHECK(std::abs(fine - coarse) <= 0.01 * fine);
  }
  SUBCASE("unbuildable draws are counted and redrawn") {
    auto job = free_job(0.1, 50, 4);
    job.reactant.width = 0.5;  // lowest bins cannot carry the zero-point kinetic energy
    job.grid = GridSpec::uniform(11, 1, -100.0, 100.0);
    job.propagate = make_propagator(job.grid, [](const Point&) { return 0.0; }, 1.0, 20.0, 1);
    const auto est = rate_constant(job);
    CHECK(est.samples == 50);
    CHECK(est.rejected > 0);
  }
}

TEST_CASE("phase estimation") {
  SUBCASE("exactly representable phase lands in one bin") {
    const LinearPhaseUnitary u{0.0, {2 * kPi * 3 / 8}};
    const auto est = phase_estimate(u, {0.0, 1.0}, 3, 200, 1);
    CHECK(est.probabilities[3] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(est.histogram.size() == 1);
    CHECK(est.histogram.at(3) == 200);
  }
  SUBCASE("inexact phase: nearest bin wins with probability at least 4/pi^2") {
    const LinearPhaseUnitary u{2 * kPi * 0.3, {0.0}};
    const auto est = phase_estimate(u, {1.0, 0.0}, 5, 0, 0);
    CHECK(std::abs(est.phase(est.modal_bin()) - 0.3) <= std::ldexp(1.0, -5));
    CHECK(est.probabilities[est.modal_bin()] >= 4 / (kPi * kPi));
  }
  SUBCASE("equal superposition of two eigenstates") {
    const LinearPhaseUnitary u{2 * kPi / 8, {2 * kPi / 4}};
    const std::size_t shots = 10000;
    const auto est = phase_estimate(u, {std::sqrt(0.5), std::sqrt(0.5)}, 3, shots, 42);
    CHECK(est.probabilities[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(est.probabilities[3] == doctest::Approx(0.5).epsilon(1e-12));
    const double sigma = std::sqrt(0.25 / shots);
    CHECK(std::abs(est.histogram.at(1) / double(shots) - 0.5) <= 4 * sigma);
    CHECK(std::abs(est.histogram.at(3) / double(shots) - 0.5) <= 4 * sigma);
  }
  SUBCASE("gate-level and unrolled networks agree") {
    const auto g = GridSpec::uniform(2, 1, -1.0, 1.0);
    const LinearPhaseUnitary u{0.3, {0.9, -1.7}};
    auto step = [&](const GridWavefunction& psi) {
      std::vector<Complex> a(psi.size());
      for (std::size_t x = 0; x < psi.size(); ++x) {
        a[x] = psi[x] * std::polar(1.0, u.global + u.theta[0] * (x & 1) + u.theta[1] * (x >> 1));
      }
      return GridWavefunction(g, std::move(a));
    };
    const std::vector<Complex> s0{0.5, Complex(0, 0.5), -0.5, 0.5};
    const auto gate = phase_estimate(u, s0, 4, 0, 0);
    const auto unrolled = phase_estimate(step, GridWavefunction(g, s0), 4, 0, 0);
    for (std::size_t b = 0; b < 16; ++b) CHECK(std::abs(gate.probabilities[b] - unrolled.probabilities[b]) < 1e-12);
  }
  SUBCASE("harmonic well spectrum from the split-step propagator") {
    const auto g = GridSpec::uniform(7, 1, -10.0, 10.0);
    const double omega = 1.0, mass = 1.0;
    const auto well = [&](const Point& x) { return 0.5 * mass * omega * omega * x[0] * x[0]; };
    {
      // One step of dt = 0.4 per application; gaps are omega * dt of a turn.
      const double dt = 0.4;
      const auto step = make_propagator(g, well, mass, dt, 1);
      const int t = 8;
      const auto e0 = phase_estimate(step, harmonic_eigenstate(0, omega, mass, g), t, 0, 0);
      const auto e1 = phase_estimate(step, harmonic_eigenstate(1, omega, mass, g), t, 0, 0);
      const double gap = e0.phase(e0.modal_bin()) - e1.phase(e1.modal_bin());
      CHECK(std::abs(gap - omega * dt / (2 * kPi)) <= 2 * std::ldexp(1.0, -t));
    }
    {
      const double dt = 0.4;
      const auto step = make_propagator(g, well, mass, dt, 1);
      const int t = 12;
      for (int v : {0, 2}) {
        const auto est = phase_estimate(step, harmonic_eigenstate(v, omega, mass, g), t, 0, 0);
        const double e = phase_to_energy(est.phase(est.modal_bin()), dt);
        CHECK(std::abs(e - omega * (v + 0.5)) <= 0.02 * omega * (v + 0.5));
      }
    }
  }
  SUBCASE("invalid requests") {
    CHECK_THROWS_AS(phase_estimation_circuit({0.0, {1.0}}, 0), ValidationError);
    CHECK_THROWS_AS(phase_estimate(LinearPhaseUnitary{0.0, {1.0}}, {1.0}, 3, 1, 0), ValidationError);
    CHECK_THROWS_AS(phase_estimate(LinearPhaseUnitary{0.0, {1.0}}, {1.0, 0.0}, 30, 1, 0), ResourceCapError);
    CHECK_THROWS_AS(phase_to_energy(0.5, 0.0), ValidationError);
  }
}

TEST_CASE("vibrational state-to-state analysis") {
  const auto g = GridSpec::uniform(7, 1, -10.0, 10.0);
  const HarmonicMode mode{0, 1.2, 1.0, 0.3};
  const ProductWell well{{0}, {mode}, std::nullopt};
  auto prob = [](const StateToState& r, int v) {
    for (std::size_t i = 0; i < r.quanta.size(); ++i) {
      if (r.quanta[i] == std::vector<int>{v}) return r.probabilities[i];
    }
    FAIL("missing quanta");
    return 0.0;
  };
  SUBCASE("pure eigenstate") {
    const auto r = state_to_state(harmonic_eigenstate(2, 1.2, 1.0, g, 0.3), well, 5);
    for (int v = 0; v <= 5; ++v) CHECK(std::abs(prob(r, v) - (v == 2 ? 1.0 : 0.0)) <= 1e-8);
    CHECK(!r.flagged);
  }
  SUBCASE("incoherent mixture") {
    const auto r = state_to_state({{0.6, harmonic_eigenstate(0, 1.2, 1.0, g, 0.3)},
                                   {0.4, harmonic_eigenstate(1, 1.2, 1.0, g, 0.3)}},
                                  well, 4);
    CHECK(std::abs(prob(r, 0) - 0.6) <= 1e-6);
    CHECK(std::abs(prob(r, 1) - 0.4) <= 1e-6);
  }
  SUBCASE("completeness and flagging") {
    const auto r = state_to_state(gaussian_packet({{1.5}, {0.7}, {0.8}}, g), well, 3);
    double s = r.residual;
    for (double p : r.probabilities) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-10);
    CHECK(r.flagged);
  }
  SUBCASE("spectator axes are traced out") {
    const auto g2 = GridSpec::uniform(5, 2, -8.0, 8.0);
    const auto psi = harmonic_product_state({{1, 1.0, 1.0, 0.0}, {0, 0.7, 1.0, 0.0}}, g2);
    const auto r = state_to_state(psi, ProductWell{{0}, {{0, 1.0, 1.0, 0.0}}, std::nullopt}, 3);
    CHECK(prob(r, 1) == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("rotated product frame") {
    // Mode along (x + y)/sqrt(2) excited once, the orthogonal mode in its ground state.
    const auto g2 = GridSpec::uniform(5, 2, -8.0, 8.0);
    const double c = std::sqrt(0.5);
    std::vector<Complex> a(g2.size());
    for (std::size_t i = 0; i < g2.size(); ++i) {
      const double x = g2.coordinate(0, g2.axis_index(i, 0)), y = g2.coordinate(1, g2.axis_index(i, 1));
      a[i] = harmonic_eigenfunction(1, c * (x + y), 1.0, 1.0) * harmonic_eigenfunction(0, c * (y - x), 1.0, 1.0);
    }
    const auto psi = GridWavefunction::normalized(g2, a);
    const ProductWell rotated{{0, 1}, {{0, 1.0, 1.0, 0.0}, {0, 1.0, 1.0, 0.0}}, LinearMap{{c, c, -c, c}, {0.0, 0.0}}};
    const auto r = state_to_state(psi, rotated, 2);
    for (std::size_t i = 0; i < r.quanta.size(); ++i) {
      const bool target = r.quanta[i] == std::vector<int>{1, 0};
      CHECK(std::abs(r.probabilities[i] - (target ? 1.0 : 0.0)) <= 1e-6);
    }
  }
  SUBCASE("resampling") {
    const auto psi = gaussian_packet({{0.5}, {1.0}, {1.0}}, g);
    const auto same = resample_linear(psi, LinearMap::identity(1));
    CHECK(same.norm_before == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(same.state[i] - psi[i]) < 1e-12);
    const auto shifted = resample_linear(psi, LinearMap{{1.0}, {3 * g.spacing(0)}});
    for (std::size_t i = 0; i + 3 < g.size(); ++i) CHECK(std::abs(shifted.state[i] - psi[i + 3]) < 1e-10);
    CHECK_THROWS_AS(resample_linear(psi, LinearMap{{0.0}, {0.0}}), ValidationError);
  }
}

TEST_CASE("fragment separation monitor") {
  const auto g = GridSpec::uniform(7, 1, -20.0, 20.0);
  const auto map = RegionMap::split(1, 0, 0.0);
  SUBCASE("static state separates after the required streak") {
    SeparationMonitor m(map, 1e-6, 10);
    const auto psi = gaussian_packet({{8.0}, {0.0}, {1.0}}, g);
    for (int i = 0; i < 10; ++i) CHECK(!m.observe(psi));
    CHECK(m.observe(psi));
  }
  SUBCASE("packet crossing the boundary keeps the streak at zero") {
    SeparationMonitor m(map, 1e-6, 3);
    const auto step = make_propagator(g, [](const Point&) { return 0.0; }, 1.0, 0.05, 10);
    auto psi = gaussian_packet({{-3.0}, {2.0}, {1.0}}, g);
    for (int i = 0; i < 5; ++i) {
      CHECK(!m.observe(psi, 10));
      psi = step(psi);
    }
    CHECK(m.last_flux() > 1e-6);
  }
}

TEST_CASE("result records") {
  std::ostringstream json;
  write_records_json(json, {{"transmission", 0.63, 0.01, 1000, 7, "abc"}});
  const auto j = nlohmann::json::parse(json.str());
  CHECK(j.size() == 1);
  CHECK(j[0]["observable"] == "transmission");
  CHECK(j[0]["stderr"] == 0.01);
  CHECK(j[0]["scenario_hash"] == "abc");

  const auto est = phase_estimate(LinearPhaseUnitary{0.0, {2 * kPi / 4}}, {0.0, 1.0}, 2, 10, 1);
  std::ostringstream csv;
  write_histogram_csv(csv, est);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "bin,phase,probability,count");
  for (int b = 0; b < 4; ++b) {
    std::getline(lines, line);
    int bin = -1, count = -1;
    double phase = -1, p = -1;
    char c1, c2, c3;
    std::istringstream(line) >> bin >> c1 >> phase >> c2 >> p >> c3 >> count;
    CHECK(bin == b);
    CHECK(phase == 0.25 * b);
    CHECK(std::abs(p - (b == 1 ? 1.0 : 0.0)) < 1e-12);
    CHECK(count == (b == 1 ? 10 : 0));
  }
}
