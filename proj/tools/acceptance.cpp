// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and runtime
// budgets are pinned below; a criterion that overruns its budget fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "arith_support.hpp"
#include "qdyn/arith.hpp"
#include "qdyn/kickback.hpp"
#include "qdyn/measure.hpp"
#include "qdyn/resources.hpp"
#include "support.hpp"

using namespace qdyn;
using qdyn::testing::run_basis;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances.
constexpr double kCoulombRatioLo = 0.98, kCoulombRatioHi = 1.02;
constexpr int kRandomInputs = 1000;
constexpr double kKickbackElementTol = 1e-10;
constexpr double kSeparabilityTol = 1e-8;
constexpr double kHarmonicFidelity = 0.999;
constexpr double kEhrenfestTol = 0.01;
constexpr double kTrotterSlope = 1.0, kTrotterSlopeTol = 0.15;
constexpr double kNewtonRelTol = 3e-4;
constexpr double kEckartRelTol = 0.02;
constexpr double kRateSigmas = 3.0;
constexpr double kMcSlope = -0.5, kMcSlopeTol = 0.1;
constexpr double kPopulationTol = 1e-6;
constexpr double kCompletenessTol = 1e-10;

// Runtime budgets in seconds.
constexpr double kBudget[11] = {0, 10, 300, 60, 600, 600, 60, 1, 1, 1200, 60};

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "[fail] ") + what);
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}
std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Propagate propagator(const GridSpec& g, RealField v, double mass, double dt, int steps) {
  const std::vector<double> masses{mass};
  auto prop = std::make_shared<SplitOperatorPropagator>(SplitOperatorPropagator::physical(g, v, masses, dt));
  return [prop, steps](const GridWavefunction& psi) { return prop->step(psi, steps); };
}

RealField harmonic_well() {
  return [](const Point& x) { return 0.5 * x[0] * x[0]; };
}

// --- 1 -------------------------------------------------------------------------
Outcome arithmetic_audit() {
  Outcome o;
  for (int m : {2, 4, 8}) {
    const double mm = m;
    const auto add = audit_counts(ArithKind::Adder, m).measured;
    const auto cadd = audit_counts(ArithKind::ControlledAdder, m).measured;
    const auto mul = audit_counts(ArithKind::Multiply, m).measured;
    o.check(add == 1.5 * mm * mm && cadd == 2.5 * mm * mm && mul == 1.25 * mm * mm * mm + mm * mm,
            "m=" + std::to_string(m) + ": adder " + fmt("%g", add) + ", c-add " + fmt("%g", cadd) + ", multiply " +
                fmt("%g", mul));
  }
  const double r = audit_counts(ArithKind::Coulomb, 16).ratio;
  o.check(r >= kCoulombRatioLo && r <= kCoulombRatioHi, fmt("Coulomb ratio at m=16: %.4f", r));
  return o;
}

// --- 2 -------------------------------------------------------------------------
std::uint64_t twos_abs(std::uint64_t k, int n) {
  const std::uint64_t half = std::uint64_t{1} << (n - 1);
  return k >= half ? (std::uint64_t{1} << n) - k : k;
}

struct ArithCheck {
  std::size_t runs = 0, mismatches = 0;
  std::map<std::string, std::size_t> failing;  // circuit -> mismatches
  std::string current;
  void expect(bool ok) {
    ++runs;
    if (!ok) ++mismatches, ++failing[current];
  }
  std::string summary() const {
    std::string s = std::to_string(runs) + " runs, " + std::to_string(mismatches) + " mismatches";
    for (const auto& [name, n] : failing) s += " [" + name + ": " + std::to_string(n) + "]";
    return s;
  }
};

void check_width(int m, bool exhaustive, std::mt19937_64& rng, ArithCheck& c) {
  const std::uint64_t M = std::uint64_t{1} << m, mask = M - 1;
  std::uniform_int_distribution<std::uint64_t> pick(0, mask);
  // Draws every input tuple when exhaustive, else kRandomInputs random ones.
  auto inputs = [&](int arity, const std::function<void(const std::vector<std::uint64_t>&)>& f) {
    if (exhaustive) {
      std::vector<std::uint64_t> v(arity, 0);
      const std::uint64_t total = std::uint64_t{1} << (m * arity);
      for (std::uint64_t code = 0; code < total; ++code) {
        for (int i = 0; i < arity; ++i) v[i] = (code >> (m * i)) & mask;
        f(v);
      }
    } else {
      std::vector<std::uint64_t> v(arity);
      for (int t = 0; t < kRandomInputs; ++t) {
        for (auto& x : v) x = pick(rng);
        f(v);
      }
    }
  };

  c.current = "adder";
  const auto adder = make_adder(m);
  inputs(2, [&](const auto& v) {
    c.expect(run_basis(adder, {{"a", v[0]}, {"b", v[1]}}, {"b"}).at("b") == ((v[0] + v[1]) & mask));
  });
  c.current = "controlled adder";
  const auto cadd = make_controlled_adder(m);
  inputs(2, [&](const auto& v) {
    for (std::uint64_t ctrl : {0, 1}) {
      const auto out = run_basis(cadd, {{"ctrl", ctrl}, {"a", v[0]}, {"b", v[1]}}, {"b"}).at("b");
      c.expect(out == (ctrl ? (v[0] + v[1]) & mask : v[1]));
    }
  });
  c.current = "multiplier";
  const auto mul = make_multiplier(m);
  inputs(2, [&](const auto& v) {
    c.expect(run_basis(mul, {{"a", v[0]}, {"b", v[1]}}, {"out"}).at("out") == ((v[0] * v[1]) >> m));
  });
  c.current = "squarer";
  const auto sq = make_squarer(m);
  inputs(1, [&](const auto& v) { c.expect(run_basis(sq, {{"a", v[0]}}, {"out"}).at("out") == ((v[0] * v[0]) >> m)); });
  c.current = "r squared";
  const int dims = exhaustive ? 2 : 3;
  const auto r2 = make_r_squared(m, dims);
  inputs(2 * dims, [&](const auto& v) {
    std::map<std::string, std::uint64_t> in;
    std::uint64_t s = 0;
    for (int a = 0; a < dims; ++a) {
      in["xi" + std::to_string(a)] = v[a];
      in["xj" + std::to_string(a)] = v[dims + a];
      // Minimum-image separation on the periodic grid.
      const std::uint64_t plain = v[a] > v[dims + a] ? v[a] - v[dims + a] : v[dims + a] - v[a];
      const std::uint64_t d = std::min(plain, M - plain);
      s += d * d;
    }
    c.expect(run_basis(r2, in, {"S"}).at("S") == ((s >> m) & mask));
  });
  c.current = "inverse sqrt";
  const int ix = default_integer_bits(m);
  const auto nr = make_inv_sqrt(m);
  inputs(1, [&](const auto& v) { c.expect(run_basis(nr, {{"S", v[0]}}, {"x"}).at("x") == oracle::inv_sqrt_raw(v[0], m, ix)); });
  c.current = "Coulomb";
  const auto coul = make_coulomb(m, 2, 1, {1, -1});
  inputs(2, [&](const auto& v) {
    c.expect(run_basis(coul, {{"p0_0", v[0]}, {"p1_0", v[1]}}, {"out"}).at("out") ==
             oracle::coulomb({{v[0]}, {v[1]}}, {1, -1}, m, ix));
  });
  c.current = "kinetic";
  // Kinetic: sum_a w_a floor(|k_a|^2 / 2^shift) with signed k.
  const std::vector<std::int64_t> w{1, 2};
  const int shift = 1;
  const auto kin = make_kinetic(m, m, 2, w, shift);
  inputs(2, [&](const auto& v) {
    std::uint64_t e = 0;
    for (int a = 0; a < 2; ++a) e += static_cast<std::uint64_t>(w[a]) * ((twos_abs(v[a], m) * twos_abs(v[a], m)) >> shift);
    qdyn::testing::BasisRun run;
    const auto out = run_basis(kin, {{"k0", v[0]}, {"k1", v[1]}}, {"out", "k0", "k1"}, &run);
    c.expect(out.at("out") == (e & mask) && out.at("k0") == v[0] && out.at("k1") == v[1] && run.scratch_clean);
  });
}

Outcome arithmetic_correctness() {
  Outcome o;
  std::mt19937_64 rng(2718);
  ArithCheck exhaustive, random;
  check_width(3, true, rng, exhaustive);
  check_width(5, false, rng, random);
  o.check(exhaustive.mismatches == 0, "m=3 exhaustive: " + exhaustive.summary());
  o.check(random.mismatches == 0,
          "m=5 random (" + std::to_string(kRandomInputs) + " per circuit): " + random.summary());
  return o;
}

// --- 3 -------------------------------------------------------------------------
Outcome kickback_theorem() {
  Outcome o;
  std::mt19937_64 rng(99);
  const auto g = GridSpec::uniform(5, 1, 0.0, 1.0);
  const FixedPointSpec fp(6);
  std::uniform_int_distribution<std::uint64_t> pick(0, fp.modulus() - 1);
  double worst = 0, worst_dev = 0;
  for (int trial = 0; trial < 20; ++trial) {
    KickbackPlan plan{.grid = g, .fp = fp, .steps = 1};
    plan.potential_table.resize(g.size());
    for (auto& v : plan.potential_table) v = pick(rng);
    const auto psi = GridWavefunction::normalized(g, qdyn::testing::random_state(g.size(), rng));
    const auto traj = evolve(plan, psi, {.compare_reference = false});
    worst_dev = std::max(worst_dev, traj.max_product_deviation);
    for (std::size_t x = 0; x < g.size(); ++x) {
      const Complex direct = psi[x] * std::polar(1.0, -2 * kPi * plan.potential_table[x] / 64.0);
      worst = std::max(worst, std::abs(traj.final_state[x] - direct));
    }
  }
  o.check(worst <= kKickbackElementTol, fmt("max elementwise deviation %.2e over 20 random tables", worst));
  o.check(worst_dev <= kSeparabilityTol, fmt("max ancilla separability deviation %.2e", worst_dev));
  return o;
}

// --- 4 -------------------------------------------------------------------------
double coherent_deviation(int m, int steps, double x0) {
  const auto g = GridSpec::uniform(6, 1, -10.0, 10.0);
  const double dt = 2 * kPi / steps;
  const std::vector<double> masses{1.0};
  const auto psi0 = GridWavefunction::normalized(g, qdyn::testing::ho_grid(g, 0, 1.0, 1.0, x0));
  double worst = 0;
  if (m == 0) {
    auto prop = SplitOperatorPropagator::physical(g, harmonic_well(), masses, dt);
    auto psi = psi0;
    for (int s = 1; s <= steps; ++s) {
      psi = prop.step(psi);
      worst = std::max(worst, std::abs(position_expectation(psi)[0] - x0 * std::cos(s * dt)));
    }
    return worst / x0;
  }
  const FixedPointSpec fp(m);
  const auto Vq = quantize_potential_physical(harmonic_well(), g, fp, dt);
  KickbackPlan plan{.grid = g, .fp = fp, .steps = steps, .potential_table = Vq.table,
                    .kinetic_table = quantize_kinetic(g, masses, fp, dt).table, .v_min = Vq.offset};
  evolve(plan, psi0, {.stride = 1, .compare_reference = false, .on_snapshot = [&](const Snapshot& s) {
           worst = std::max(worst, std::abs(position_expectation(s.state)[0] - x0 * std::cos(s.step * dt)));
         }});
  return worst / x0;
}

Outcome end_to_end() {
  Outcome o;
  const auto g = GridSpec::uniform(6, 1, -10.0, 10.0);
  const FixedPointSpec fp(8);
  const int steps = 200;
  const double dt = 2 * kPi / steps;
  const std::vector<double> masses{1.0};
  const auto Vq = quantize_potential_physical(harmonic_well(), g, fp, dt);
  KickbackPlan plan{.grid = g, .fp = fp, .steps = steps, .potential_table = Vq.table,
                    .kinetic_table = quantize_kinetic(g, masses, fp, dt).table, .v_min = Vq.offset};
  const auto psi0 = GridWavefunction::normalized(g, qdyn::testing::ho_grid(g, 0, 1.0, 1.0, 3.0));
  const auto traj = evolve(plan, psi0);
  o.check(traj.final_fidelity >= kHarmonicFidelity,
          fmt("n=6, m=8, 200 steps: fidelity vs quantized oracle %.6f", traj.final_fidelity));
  o.check(traj.max_product_deviation <= kSeparabilityTol, fmt("separability deviation %.2e", traj.max_product_deviation));
  const double circuit = coherent_deviation(8, steps, 2.0);
  o.check(circuit <= kEhrenfestTol, fmt("coherent state (x0=2) Ehrenfest deviation, circuit m=8: %.4f", circuit));
  // Diagnostics separating the two error sources.
  o.notes.push_back(fmt("diagnostic: circuit m=10 %.4f; unquantized first-order split %.4f at 200 steps",
                        coherent_deviation(10, steps, 2.0), coherent_deviation(0, steps, 2.0)) +
                    fmt(", %.4f at 628 steps", coherent_deviation(0, 628, 2.0)));
  return o;
}

// --- 5 -------------------------------------------------------------------------
Outcome trotter_order() {
  Outcome o;
  const auto g = GridSpec::uniform(7, 1, -10.0, 10.0);
  const auto psi0 = GridWavefunction::normalized(g, qdyn::testing::ho_grid(g, 0, 1.0, 1.0, 2.0));
  const std::vector<double> masses{1.0};
  const double t = 1.0;
  auto run = [&](int steps) {
    return SplitOperatorPropagator::physical(g, harmonic_well(), masses, t / steps).step(psi0, steps);
  };
  // Richardson-extrapolated reference removes the leading error of the finest runs.
  const auto fine = run(4096), coarse = run(2048);
  std::vector<Complex> ref(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) ref[i] = 2.0 * fine[i] - coarse[i];
  std::vector<double> dts, errs;
  for (int steps : {64, 128, 256, 512, 1024}) {
    const auto psi = run(steps);
    double e = 0;
    for (std::size_t i = 0; i < g.size(); ++i) e += std::norm(psi[i] - ref[i]);
    dts.push_back(t / steps);
    errs.push_back(std::sqrt(e));
  }
  const double slope = qdyn::testing::loglog_slope(dts, errs);
  o.check(std::abs(slope - kTrotterSlope) <= kTrotterSlopeTol, fmt("log-log error slope %.4f", slope));
  return o;
}

// --- 6 -------------------------------------------------------------------------
Outcome newton_raphson() {
  Outcome o;
  const int m = 16, ix = default_integer_bits(m);
  const double ulp = std::ldexp(1.0, -(m - ix));
  // Open below: 1/sqrt(1/16) = 4 needs a third integer bit.
  const std::uint64_t lo = (std::uint64_t{1} << (m - 4)) + 1, hi = 3 * (std::uint64_t{1} << (m - 2));
  double worst = 0;
  bool four = true;
  // Every representable S in the calibrated range (1/16, 3/4].
  for (std::uint64_t S = lo; S <= hi; ++S) {
    const auto trace = oracle::inv_sqrt_trace(S, m, ix);
    if (trace.size() != 5) four = false;
    const double exact = 1 / std::sqrt(std::ldexp(static_cast<double>(S), -m));
    worst = std::max(worst, std::abs(trace.back() * ulp - exact) / exact);
  }
  o.check(four && kNewtonIterations == 4, "exactly 4 iterations after the seed");
  o.check(worst <= kNewtonRelTol, fmt("m=16 max relative error %.3e over S in (1/16, 3/4]", worst));
  return o;
}

// --- 7 -------------------------------------------------------------------------
Outcome resource_reproduction() {
  Outcome o;
  o.check(qubit_count(4, 10, 10) == 100, "qubit_count(4, 10, 10) = " + std::to_string(qubit_count(4, 10, 10)));
  const auto r = feasibility_report(BigInt(1000000000), 300, 10, 10, 1000);
  o.check(r.max_particles == 10, "feasibility frontier B = " + std::to_string(r.max_particles));
  o.check(coulomb_gates_per_pair(10) == 21300, "coulomb_gates_per_pair(10) = " + format_count(coulomb_gates_per_pair(10)));
  o.check(coulomb_gates_per_pair(20) == 160200,
          "coulomb_gates_per_pair(20) = " + format_count(coulomb_gates_per_pair(20)));
  return o;
}

// --- 8 -------------------------------------------------------------------------
Outcome crossover() {
  Outcome o;
  const int a20 = crossover_atoms(100, 15, 20, 1000), a10 = crossover_atoms(100, 15, 10, 1000);
  o.check(a20 == 5, "crossover_atoms(Z=100, K=15, m=20) = " + std::to_string(a20));
  o.check(a10 == 5, "crossover_atoms(Z=100, K=15, m=10) = " + std::to_string(a10));
  return o;
}

// --- 9 -------------------------------------------------------------------------
RateJob free_rate_job(std::size_t samples, std::uint64_t seed) {
  RateJob job;
  job.thermal = {.temperature = 0.5, .e_max = 3.0, .de = 0.1, .levels = {{0, 0.0, {}}}};
  job.reactant = {.mass = 1.0, .center = -30.0, .width = 4.0, .direction = 1};
  job.grid = GridSpec::uniform(9, 1, -100.0, 100.0);
  job.regions = RegionMap::split(1, 0, 0.0);
  job.propagate = propagator(job.grid, [](const Point&) { return 0.0; }, 1.0, 20.0, 1);
  job.samples = samples;
  job.seed = seed;
  return job;
}

double quadrature(const RateJob& job) {
  const auto ens = thermal_bins(job.thermal);
  double q = 0;
  for (const auto& l : job.thermal.levels) q += std::exp(-l.energy / job.thermal.temperature);
  double k = 0;
  for (std::size_t b = 0; b < ens.bins.size(); ++b) {
    const double g2 = std::exp(-ens.bins[b].energy / job.thermal.temperature) * job.thermal.de / (2 * kPi * q);
    k += g2 * bin_reaction_probability(job, ens, b);
  }
  return k;
}

Outcome measurement_stack() {
  Outcome o;
  {
    const auto g = GridSpec::uniform(12, 1, -200.0, 200.0);
    const double e0 = 1.0, dt = 0.05;
    const auto psi0 = gaussian_packet({{-60.0}, {std::sqrt(2 * e0)}, {10.0}}, g);
    const auto prop = propagator(g, [](const Point& x) { return 1.0 / std::pow(std::cosh(x[0]), 2); }, 1.0, dt, 2000);
    const auto r = reaction_probability(prop(psi0), RegionMap::split(1, 0, 0.0), {1}, 1000, 5);
    const double exact = qdyn::testing::eckart_transmission(e0, 1.0, 1.0, 1.0);
    o.check(std::abs(r.exact - exact) <= kEckartRelTol * exact,
            fmt("Eckart transmission %.5f vs closed form %.5f", r.exact, exact));
  }
  {
    auto job = free_rate_job(400, 2024);
    job.propagate = propagator(job.grid, [](const Point& x) { return 0.8 * std::exp(-x[0] * x[0] / 2); }, 1.0, 0.02, 1000);
    const double k_q = quadrature(job);
    const auto est = rate_constant(job);
    o.check(std::abs(est.k - k_q) <= kRateSigmas * est.std_error,
            fmt("rate MC %.5e vs quadrature %.5e", est.k, k_q) + fmt(" (%.2f sigma)", std::abs(est.k - k_q) / est.std_error));
  }
  {
    const double k_q = quadrature(free_rate_job(1, 0));
    std::vector<double> sizes, rmse;
    for (std::size_t n : {16, 64, 256, 1024}) {
      double s2 = 0;
      const int seeds = 40;
      for (int s = 0; s < seeds; ++s) s2 += std::pow(rate_constant(free_rate_job(n, 1000 * n + s)).k - k_q, 2);
      sizes.push_back(static_cast<double>(n));
      rmse.push_back(std::sqrt(s2 / seeds));
    }
    const double slope = qdyn::testing::loglog_slope(sizes, rmse);
    o.check(std::abs(slope - kMcSlope) <= kMcSlopeTol, fmt("Monte Carlo RMSE slope %.3f", slope));
  }
  {
    const auto g = GridSpec::uniform(7, 1, -10.0, 10.0);
    const double omega = 1.0, dt = 0.4;
    const auto step = propagator(g, harmonic_well(), 1.0, dt, 1);
    for (int t : {8, 10}) {
      std::vector<double> phase;
      for (int v = 0; v <= 2; ++v) {
        const auto est = phase_estimate(step, harmonic_eigenstate(v, omega, 1.0, g), t, 0, 0);
        phase.push_back(est.phase(est.modal_bin()));
      }
      // Energy raises the phase turn count downward: b = 2^t (1 - E dt / 2 pi).
      double worst = 0;
      for (int v = 0; v < 2; ++v) worst = std::max(worst, std::abs((phase[v] - phase[v + 1]) - omega * dt / (2 * kPi)));
      o.check(worst <= std::ldexp(1.0, -t), fmt("phase gaps at t=%.0f: max error %.2e turns", t, worst) +
                                                fmt(" (resolution %.2e)", std::ldexp(1.0, -t)));
    }
  }
  return o;
}

// --- 10 ------------------------------------------------------------------------
Outcome state_to_state_check() {
  Outcome o;
  const auto g = GridSpec::uniform(7, 1, -10.0, 10.0);
  const HarmonicMode mode{0, 1.2, 1.0, 0.3};
  const ProductWell well{{0}, {mode}, std::nullopt};
  const auto r = state_to_state(
      {{0.6, harmonic_eigenstate(0, 1.2, 1.0, g, 0.3)}, {0.4, harmonic_eigenstate(1, 1.2, 1.0, g, 0.3)}}, well, 4);
  double p0 = -1, p1 = -1, sum = r.residual;
  for (std::size_t i = 0; i < r.quanta.size(); ++i) {
    if (r.quanta[i] == std::vector<int>{0}) p0 = r.probabilities[i];
    if (r.quanta[i] == std::vector<int>{1}) p1 = r.probabilities[i];
    sum += r.probabilities[i];
  }
  o.check(std::abs(p0 - 0.6) <= kPopulationTol && std::abs(p1 - 0.4) <= kPopulationTol,
          fmt("P0 = %.9f, P1 = %.9f", p0, p1));
  o.check(std::abs(sum - 1) <= kCompletenessTol, fmt("mixture completeness error %.2e", std::abs(sum - 1)));
  const auto w = state_to_state(gaussian_packet({{1.5}, {0.7}, {0.8}}, g), well, 3);
  double s2 = w.residual;
  for (double p : w.probabilities) s2 += p;
  o.check(std::abs(s2 - 1) <= kCompletenessTol,
          fmt("wavepacket completeness error %.2e (residual %.3f)", std::abs(s2 - 1), w.residual));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-10"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"arithmetic audit", arithmetic_audit},
      {"exhaustive arithmetic correctness", arithmetic_correctness},
      {"phase-kickback theorem", kickback_theorem},
      {"end-to-end harmonic dynamics", end_to_end},
      {"Trotter order", trotter_order},
      {"Newton-Raphson accuracy", newton_raphson},
      {"resource reproduction", resource_reproduction},
      {"crossover reproduction", crossover},
      {"measurement stack", measurement_stack},
      {"state-to-state", state_to_state_check},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(secs <= kBudget[id], fmt("runtime %.2f s (budget %.0f s)", secs, kBudget[id]));
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str());
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
