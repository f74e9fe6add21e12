#include "qdyn/kickback.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "json.hpp"
#include "qdyn/errors.hpp"

namespace qdyn {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

std::vector<double> checked_samples(const RealField& f, const GridSpec& grid) {
  auto v = sample_field(grid, f);
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError("potential is not finite on every grid point");
  }
  return v;
}

std::uint64_t wrap(double counts, std::uint64_t M) {
  const auto r = static_cast<std::int64_t>(std::llround(counts));
  const auto m = static_cast<std::int64_t>(M);
  return static_cast<std::uint64_t>(((r % m) + m) % m);
}

TableOracle make_table_oracle(QubitRange input, QubitRange target, std::vector<std::uint64_t> table,
                              std::string label) {
  TableOracle o;
  o.input = input;
  o.target = target;
  o.table = std::make_shared<const std::vector<std::uint64_t>>(std::move(table));
  o.mode = OracleMode::Add;
  o.label = std::move(label);
  return o;
}

std::uint64_t key_bits(const SparseState::Key& k, int offset, int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) {
    if (k[offset + i]) v |= std::uint64_t{1} << i;
  }
  return v;
}

// Projects the sparse state onto the prepared ancilla with all scratch at
// zero. Bits above position + ancilla are scratch.
Extraction extract_sparse(const SparseState& s, const GridSpec& grid, int m, double tolerance) {
  const int pos_bits = grid.total_qubits();
  const auto anc = kickback_ancilla_state(m);
  std::vector<Complex> psi(grid.size(), Complex{0.0, 0.0});
  double norm = 0.0;
  for (const auto& [key, amp] : s.entries()) {
    norm += std::norm(amp);
    if ((key >> (pos_bits + m)).any()) continue;
    const auto x = key_bits(key, 0, pos_bits);
    const auto y = key_bits(key, pos_bits, m);
    psi[x] += std::conj(anc[y]) * amp;
  }
  double kept = 0.0;
  for (const auto& v : psi) kept += std::norm(v);
  const double deviation = std::max(0.0, norm - kept) / norm;
  if (deviation > tolerance) {
    throw ContractViolation("kickback ancilla is entangled with the position registers "
                            "(product deviation " + std::to_string(deviation) + ")");
  }
  return Extraction{GridWavefunction::normalized(grid, std::move(psi)), deviation};
}

std::vector<std::uint64_t> axis_indices(const GridSpec& grid, std::size_t flat) {
  std::vector<std::uint64_t> idx(grid.dims());
  for (int a = 0; a < grid.dims(); ++a) idx[a] = grid.axis_index(flat, a);
  return idx;
}

}  // namespace

void append_kickback_ancilla(Circuit& c, QubitRange ancilla) {
  if (ancilla.count < 1) throw ValidationError("kickback ancilla needs at least one qubit");
  c.x(ancilla.qubit(0));
  append_qft(c, ancilla, true);
}

Circuit prepare_kickback_ancilla(int m) {
  if (m < 1) throw ValidationError("kickback ancilla needs at least one qubit");
  Circuit c(m);
  append_kickback_ancilla(c, {0, m});
  return c;
}

std::vector<Complex> kickback_ancilla_state(int m) {
  const std::size_t M = std::size_t{1} << m;
  std::vector<Complex> v(M);
  const double s = 1.0 / std::sqrt(static_cast<double>(M));
  for (std::size_t y = 0; y < M; ++y) v[y] = std::polar(s, kTwoPi * static_cast<double>(y) / M);
  return v;
}

QuantizedTable quantize_potential(const RealField& potential, const GridSpec& grid,
                                  const FixedPointSpec& fp) {
  const auto v = checked_samples(potential, grid);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  QuantizedTable q;
  q.offset = *lo;
  q.clamped = true;
  q.max_phase_error = std::numbers::pi / static_cast<double>(fp.modulus());
  q.table.assign(v.size(), 0);
  if (*hi == *lo) return q;
  q.counts_per_unit = static_cast<double>(fp.max_value()) / (*hi - *lo);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double c = std::round((v[i] - q.offset) * q.counts_per_unit);
    q.table[i] = static_cast<std::uint64_t>(std::clamp(c, 0.0, static_cast<double>(fp.max_value())));
  }
  return q;
}

QuantizedTable quantize_potential_physical(const RealField& potential, const GridSpec& grid,
                                           const FixedPointSpec& fp, double dt) {
  if (!(dt > 0) || !std::isfinite(dt)) throw ValidationError("time step must be positive");
  const auto v = checked_samples(potential, grid);
  QuantizedTable q;
  q.offset = *std::min_element(v.begin(), v.end());
  q.counts_per_unit = static_cast<double>(fp.modulus()) * dt / kTwoPi;
  q.max_phase_error = std::numbers::pi / static_cast<double>(fp.modulus());
  q.table.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    q.table[i] = wrap((v[i] - q.offset) * q.counts_per_unit, fp.modulus());
  }
  return q;
}

QuantizedTable quantize_kinetic(const GridSpec& grid, std::span<const double> masses,
                                const FixedPointSpec& fp, double dt) {
  if (!(dt > 0) || !std::isfinite(dt)) throw ValidationError("time step must be positive");
  const auto t = kinetic_energy_field(grid, masses);
  QuantizedTable q;
  q.counts_per_unit = static_cast<double>(fp.modulus()) * dt / kTwoPi;
  q.max_phase_error = std::numbers::pi / static_cast<double>(fp.modulus());
  q.table.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) q.table[i] = wrap(t[i] * q.counts_per_unit, fp.modulus());
  return q;
}

std::vector<double> table_phases(const std::vector<std::uint64_t>& table, const FixedPointSpec& fp) {
  std::vector<double> p(table.size());
  const double M = static_cast<double>(fp.modulus());
  for (std::size_t i = 0; i < table.size(); ++i) p[i] = kTwoPi * static_cast<double>(table[i]) / M;
  return p;
}

void KickbackPlan::validate() const {
  if (steps < 0) throw ValidationError("step count must be non-negative");
  if (fp.m < 1 || fp.m > 62) throw ValidationError("ancilla width must lie in [1, 62]");
  auto check_table = [&](const std::vector<std::uint64_t>& t, const char* what, bool optional) {
    if (t.empty() && optional) return;
    if (t.size() != grid.size()) throw ValidationError(std::string(what) + " table must have one entry per grid point");
    for (auto v : t) {
      if (v > fp.max_value()) throw ValidationError(std::string(what) + " table entry exceeds 2^m - 1");
    }
  };
  if (arithmetic_potential) {
    const auto& a = *arithmetic_potential;
    if (a.particles < 2 || a.dims < 1) throw ValidationError("Coulomb source needs two or more particles");
    if (a.particles * a.dims != grid.dims()) throw ValidationError("grid axes must equal particles x dims");
    if (static_cast<int>(a.charges.size()) != a.particles) throw ValidationError("one charge per particle");
    if (grid.qubits_per_axis() != fp.m) throw ValidationError("live Coulomb source needs n == m");
  } else {
    check_table(potential_table, "potential", false);
  }
  if (arithmetic_kinetic) {
    const auto& k = *arithmetic_kinetic;
    if (static_cast<int>(k.weights.size()) != grid.dims()) throw ValidationError("one kinetic weight per axis");
    if (k.shift < 0 || k.shift >= 2 * grid.qubits_per_axis()) throw ValidationError("kinetic shift out of range");
  } else {
    check_table(kinetic_table, "kinetic", true);
  }
}

std::vector<std::uint64_t> KickbackPlan::effective_potential_table() const {
  if (!arithmetic_potential) return potential_table;
  const auto& a = *arithmetic_potential;
  const int ix = a.ix < 0 ? default_integer_bits(fp.m) : a.ix;
  std::vector<std::uint64_t> t(grid.size());
  for (std::size_t x = 0; x < grid.size(); ++x) {
    const auto idx = axis_indices(grid, x);
    std::vector<std::vector<std::uint64_t>> pos(a.particles);
    for (int i = 0; i < a.particles; ++i) pos[i].assign(idx.begin() + i * a.dims, idx.begin() + (i + 1) * a.dims);
    t[x] = oracle::coulomb(pos, a.charges, fp.m, ix);
  }
  return t;
}

std::vector<std::uint64_t> KickbackPlan::effective_kinetic_table() const {
  if (!arithmetic_kinetic) return kinetic_table;
  std::vector<std::uint64_t> t(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    t[k] = oracle::kinetic(axis_indices(grid, k), grid.qubits_per_axis(), arithmetic_kinetic->weights,
                           arithmetic_kinetic->shift, fp.m);
  }
  return t;
}

int CompiledPlan::active_qubits() const { return position_qubits + layout[ancilla].size; }

CompiledPlan compile_plan(const KickbackPlan& plan) {
  plan.validate();
  const int n = plan.grid.qubits_per_axis();
  const int d = plan.grid.dims();
  CompiledPlan out;
  CircuitBuilder b;
  std::vector<QubitRange> axes;
  for (int a = 0; a < d; ++a) {
    out.position_regs.push_back("x" + std::to_string(a));
    axes.push_back(b.allocate(out.position_regs.back(), n).range());
  }
  out.position_qubits = n * d;
  const QubitRange pos{0, n * d};
  const auto anc = b.allocate(out.ancilla, plan.fp.m).range();

  if (plan.arithmetic_potential) {
    const auto& a = *plan.arithmetic_potential;
    std::vector<std::vector<QubitRange>> particles(a.particles);
    for (int i = 0; i < a.particles; ++i) {
      for (int k = 0; k < a.dims; ++k) particles[i].push_back(axes[i * a.dims + k]);
    }
    append_coulomb(b, particles, a.charges, anc, {.ix = a.ix, .uncompute = true});
  } else {
    b.circuit.oracle(make_table_oracle(pos, anc, plan.potential_table, "V"));
  }
  for (const auto& r : axes) append_iqft(b.circuit, r, true);
  if (plan.arithmetic_kinetic) {
    append_kinetic(b, axes, plan.arithmetic_kinetic->weights, plan.arithmetic_kinetic->shift, anc);
  } else if (!plan.kinetic_table.empty()) {
    b.circuit.oracle(make_table_oracle(pos, anc, plan.kinetic_table, "T"));
  }
  for (const auto& r : axes) append_qft(b.circuit, r, true);

  out.layout = b.layout;
  out.step = std::move(b.circuit);
  out.prepare = Circuit(out.layout.total_qubits());
  append_kickback_ancilla(out.prepare, anc);
  return out;
}

Circuit step_circuit(const KickbackPlan& plan) { return compile_plan(plan).step; }

SplitOperatorPropagator reference_propagator(const KickbackPlan& plan) {
  plan.validate();
  auto kin = plan.effective_kinetic_table();
  if (kin.empty()) kin.assign(plan.grid.size(), 0);
  return SplitOperatorPropagator(plan.grid, table_phases(plan.effective_potential_table(), plan.fp),
                                 table_phases(kin, plan.fp));
}

Trajectory evolve(const KickbackPlan& plan, const GridWavefunction& psi0, const EvolveOptions& opt) {
  if (psi0.spec() != plan.grid) throw ValidationError("initial state grid does not match the plan");
  const auto compiled = compile_plan(plan);
  Trajectory traj;
  traj.step_tally = compiled.step.tally();
  traj.qubits = compiled.layout.total_qubits();

  std::optional<SplitOperatorPropagator> ref;
  std::optional<GridWavefunction> ref_state;
  if (opt.compare_reference) {
    ref.emplace(reference_propagator(plan));
    ref_state.emplace(psi0);
  }

  auto record = [&](int step, Extraction e) {
    traj.max_product_deviation = std::max(traj.max_product_deviation, e.product_deviation);
    const bool snap = opt.stride > 0 && step % opt.stride == 0;
    const bool last = step == plan.steps;
    if (!snap && !last) return;
    Snapshot s{step, e.state, 1.0, e.product_deviation};
    if (ref_state) s.fidelity = fidelity(*ref_state, e.state);
    if (opt.on_snapshot) opt.on_snapshot(s);
    if (last) {
      traj.final_state = s.state;
      traj.final_fidelity = s.fidelity;
    }
    if (snap) traj.snapshots.push_back(std::move(s));
  };

  if (!plan.live()) {
    if (traj.qubits > opt.qubit_cap) {
      throw ResourceCapError("kickback run needs " + std::to_string(traj.qubits) + " qubits, cap is " +
                                 std::to_string(opt.qubit_cap),
                             traj.qubits);
    }
    auto state = load_grid_state(psi0, compiled.layout, compiled.position_regs, opt.qubit_cap);
    state.apply(compiled.prepare);
    const auto rest = kickback_ancilla_state(plan.fp.m);
    if (plan.steps == 0) record(0, extract_grid_state(state, plan.grid, compiled.position_regs, rest,
                                                      opt.separability_tolerance));
    for (int s = 1; s <= plan.steps; ++s) {
      state.apply(compiled.step);
      if (ref_state) ref_state = ref->step(*ref_state);
      record(s, extract_grid_state(state, plan.grid, compiled.position_regs, rest, opt.separability_tolerance));
    }
    return traj;
  }

  if (compiled.active_qubits() > opt.qubit_cap) {
    throw ResourceCapError("live kickback run holds " + std::to_string(compiled.active_qubits()) +
                               " qubits in superposition, cap is " + std::to_string(opt.qubit_cap),
                           compiled.active_qubits());
  }
  std::vector<std::pair<SparseState::Key, Complex>> entries;
  for (std::size_t x = 0; x < psi0.size(); ++x) {
    if (psi0[x] == Complex{0.0, 0.0}) continue;
    entries.emplace_back(SparseState::Key(x), psi0[x]);
  }
  auto state = SparseState::from_entries(compiled.layout, entries);
  state.apply(compiled.prepare);
  if (plan.steps == 0) record(0, extract_sparse(state, plan.grid, plan.fp.m, opt.separability_tolerance));
  for (int s = 1; s <= plan.steps; ++s) {
    state.apply(compiled.step);
    if (ref_state) ref_state = ref->step(*ref_state);
    record(s, extract_sparse(state, plan.grid, plan.fp.m, opt.separability_tolerance));
  }
  traj.peak_terms = state.peak_terms();
  return traj;
}

void write_manifest(std::ostream& out, const KickbackPlan& plan, const Trajectory& traj,
                    const std::string& scenario) {
  using nlohmann::json;
  json axes = json::array();
  for (int a = 0; a < plan.grid.dims(); ++a) {
    axes.push_back({{"min", plan.grid.axis(a).min}, {"max", plan.grid.axis(a).max}});
  }
  json snaps = json::array();
  for (const auto& s : traj.snapshots) {
    snaps.push_back({{"step", s.step}, {"fidelity", s.fidelity}, {"product_deviation", s.product_deviation}});
  }
  const auto& t = traj.step_tally;
  json j = {
      {"scenario", scenario},
      {"grid", {{"qubits_per_axis", plan.grid.qubits_per_axis()}, {"dims", plan.grid.dims()}, {"axes", axes}}},
      {"fixed_point", {{"m", plan.fp.m}, {"modulus", plan.fp.modulus()}, {"dt_scaled", plan.fp.dt()}}},
      {"steps", plan.steps},
      {"v_min", {{"value", plan.v_min}, {"units", "scenario energy"}, {"note", "global phase, dropped"}}},
      {"potential_source", plan.arithmetic_potential ? "arithmetic" : "table"},
      {"kinetic_source", plan.arithmetic_kinetic ? "arithmetic" : (plan.kinetic_table.empty() ? "none" : "table")},
      {"qubits", traj.qubits},
      {"step_tally",
       {{"single_qubit", t.single_qubit},
        {"controlled_rotation", t.controlled_rotation},
        {"doubly_controlled_rotation", t.doubly_controlled_rotation},
        {"cnot", t.cnot},
        {"swap", t.swap},
        {"oracle_calls", t.oracle_calls},
        {"rotation_class", t.rotation_class()}}},
      {"final_fidelity", traj.final_fidelity},
      {"max_product_deviation", traj.max_product_deviation},
      {"snapshots", snaps},
  };
  out << j.dump(2) << '\n';
}

}  // namespace qdyn
