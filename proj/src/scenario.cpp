#include "qdyn/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>
#include <openssl/evp.h>
#include <openssl/opensslv.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "qdyn/arith.hpp"
#include "qdyn/errors.hpp"
#include "qdyn/kickback.hpp"
#include "qdyn/measure.hpp"
#include "qdyn/prep.hpp"
#include "qdyn/resources.hpp"

#ifndef QDYN_VERSION
#define QDYN_VERSION "0.0.0"
#endif

namespace qdyn::cli {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

// --- Units -------------------------------------------------------------------

enum class Dim { Length, Energy, Time, Mass };

const char* dim_name(Dim d) {
  switch (d) {
    case Dim::Length: return "length";
    case Dim::Energy: return "energy";
    case Dim::Time: return "time";
    case Dim::Mass: return "mass";
  }
  return "?";
}

// Factors into atomic units (hartree, bohr, electron mass, hbar = k_B = 1).
const std::map<std::string, std::pair<Dim, double>>& unit_table() {
  static const std::map<std::string, std::pair<Dim, double>> t{
      {"bohr", {Dim::Length, 1.0}},
      {"angstrom", {Dim::Length, 1.8897261254578281}},
      {"nm", {Dim::Length, 18.897261254578281}},
      {"hartree", {Dim::Energy, 1.0}},
      {"ev", {Dim::Energy, 1.0 / 27.211386245988}},
      {"kcal/mol", {Dim::Energy, 1.0 / 627.5094740631}},
      {"cm-1", {Dim::Energy, 4.556335252912e-6}},
      {"kelvin", {Dim::Energy, 3.166811563455e-6}},
      {"au_time", {Dim::Time, 1.0}},
      {"fs", {Dim::Time, 41.341373335}},
      {"electron_mass", {Dim::Mass, 1.0}},
      {"amu", {Dim::Mass, 1822.888486209}},
  };
  return t;
}

// --- Edit distance for suggestions ----------------------------------------------

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string suggestion(const std::string& name, const std::vector<std::string>& options) {
  const auto best = nearest_match(name, options);
  return best.empty() ? std::string{} : " (did you mean \"" + best + "\"?)";
}

// --- Config reader with field paths ----------------------------------------------

class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where() + "must be an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ValidationError(field(key) + ": " + msg);
  }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const {
    if (!has(key)) fail(key, "is required");
    return j_.at(key);
  }

  void allow(const std::vector<std::string>& keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(k, "unknown field" + suggestion(k, keys));
    }
  }

  Node child(const std::string& key) const { return Node(raw(key), field(key)); }

  double number(const std::string& key, std::optional<double> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      fail(key, "is required");
    }
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      fail(key, "is required");
    }
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    return v.get<std::int64_t>();
  }

  std::int64_t integer_in(const std::string& key, std::int64_t lo, std::int64_t hi,
                          std::optional<std::int64_t> def = std::nullopt) const {
    const auto v = integer(key, def);
    if (v < lo || v > hi) fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }

  std::string text(const std::string& key, std::optional<std::string> def = std::nullopt,
                   const std::vector<std::string>& choices = {}) const {
    if (!has(key)) {
      if (def) return *def;
      fail(key, "is required");
    }
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(key, "must be a string");
    auto s = v.get<std::string>();
    if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end()) {
      fail(key, "unknown value \"" + s + "\"" + suggestion(s, choices));
    }
    return s;
  }

  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) fail(key, "must be true or false");
    return j_.at(key).get<bool>();
  }

  // A bare number is taken in atomic units; {"value": x, "unit": u} converts.
  double quantity(const std::string& key, Dim dim, std::optional<double> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return *def;
      fail(key, "is required");
    }
    return convert(j_.at(key), dim, field(key));
  }

  double positive_quantity(const std::string& key, Dim dim, std::optional<double> def = std::nullopt) const {
    const double v = quantity(key, dim, def);
    if (!(v > 0)) fail(key, "must be positive");
    return v;
  }

  // Scalar broadcast to `count` entries, or an array of exactly `count`.
  std::vector<double> quantities(const std::string& key, Dim dim, std::size_t count,
                                 std::optional<double> def = std::nullopt) const {
    if (!has(key)) {
      if (def) return std::vector<double>(count, *def);
      fail(key, "is required");
    }
    const auto& v = j_.at(key);
    if (!v.is_array()) return std::vector<double>(count, convert(v, dim, field(key)));
    if (v.size() != count) fail(key, "needs " + std::to_string(count) + " entries, got " + std::to_string(v.size()));
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert(v[i], dim, field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<std::int64_t> integers(const std::string& key, std::optional<std::size_t> count = std::nullopt) const {
    const auto& v = raw(key);
    if (!v.is_array()) fail(key, "must be an array of integers");
    if (count && v.size() != *count) fail(key, "needs " + std::to_string(*count) + " entries");
    std::vector<std::int64_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) fail(key, "must be an array of integers");
      out.push_back(e.get<std::int64_t>());
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::size_t> count = std::nullopt) const {
    const auto& v = raw(key);
    if (!v.is_array()) fail(key, "must be an array of numbers");
    if (count && v.size() != *count) fail(key, "needs " + std::to_string(*count) + " entries");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) fail(key, "must be an array of finite numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

  static double convert(const json& v, Dim dim, const std::string& path) {
    if (v.is_number()) {
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw ValidationError(path + ": must be finite");
      return x;
    }
    if (!v.is_object() || !v.contains("value") || !v.contains("unit") || v.size() != 2 || !v["value"].is_number() ||
        !v["unit"].is_string()) {
      throw ValidationError(path + ": expected a number or {\"value\": x, \"unit\": \"...\"}");
    }
    const auto unit = v["unit"].get<std::string>();
    const auto& table = unit_table();
    const auto it = table.find(unit);
    if (it == table.end()) {
      std::vector<std::string> names;
      for (const auto& [n, d] : table) {
        if (d.first == dim) names.push_back(n);
      }
      throw ValidationError(path + ": unknown unit \"" + unit + "\"" + suggestion(unit, names));
    }
    if (it->second.first != dim) {
      throw ValidationError(path + ": unit \"" + unit + "\" is not a " + dim_name(dim) + " unit");
    }
    const double x = v["value"].get<double>() * it->second.second;
    if (!std::isfinite(x)) throw ValidationError(path + ": must be finite");
    return x;
  }

  const json& j_;
  std::string path_;
};

const std::vector<std::string> kKinds{"propagate", "compare", "arithmetic-audit", "resources",
                                      "rate", "state-to-state", "phase-estimate"};
const std::vector<std::string> kPotentials{"harmonic", "eckart", "double-well", "coulomb-pairwise", "free", "table"};

// --- Parsed pieces -----------------------------------------------------------------

GridSpec parse_grid(const Node& root) {
  const auto g = root.child("grid");
  g.allow({"qubits_per_axis", "dims", "min", "max"});
  const int n = static_cast<int>(g.integer_in("qubits_per_axis", 1, 24));
  const int dims = static_cast<int>(g.integer_in("dims", 1, 6, 1));
  const auto lo = g.quantities("min", Dim::Length, dims);
  const auto hi = g.quantities("max", Dim::Length, dims);
  std::vector<AxisExtent> axes;
  for (int a = 0; a < dims; ++a) {
    if (!(lo[a] < hi[a])) g.fail("max", "must exceed min on every axis");
    axes.push_back({lo[a], hi[a]});
  }
  if (n * dims > 40) g.fail("qubits_per_axis", "grid exceeds 40 position qubits");
  return GridSpec(n, axes);
}

std::vector<double> parse_masses(const Node& root, int dims) {
  auto m = root.quantities("mass", Dim::Mass, static_cast<std::size_t>(dims), 1.0);
  for (double x : m) {
    if (!(x > 0)) root.fail("mass", "must be positive");
  }
  return m;
}

struct Potential {
  std::string name;
  RealField field;                             // table-free builtins
  std::optional<ArithmeticPotential> live;     // coulomb-pairwise
  std::vector<std::uint64_t> table;            // "table"
};

std::vector<std::uint64_t> read_table_csv(const std::filesystem::path& path, const Node& node) {
  std::ifstream in(path);
  if (!in) node.fail("file", "cannot open " + path.string());
  std::vector<std::uint64_t> t;
  std::string tok;
  char c;
  auto flush = [&] {
    if (tok.empty()) return;
    if (tok.find_first_not_of("0123456789") != std::string::npos) node.fail("file", "non-integer entry \"" + tok + "\"");
    t.push_back(std::stoull(tok));
    tok.clear();
  };
  while (in.get(c)) {
    if (c == ',' || c == '\n' || c == '\r' || c == ' ' || c == '\t') {
      flush();
    } else {
      tok.push_back(c);
    }
  }
  flush();
  return t;
}

// `modulus` is 0 when no plan fixes the table width.
Potential parse_potential(const Node& root, const GridSpec& grid, const std::vector<double>& masses,
                          const std::filesystem::path& base_dir, std::uint64_t modulus, bool allow_circuit_only) {
  const auto p = root.child("potential");
  Potential pot;
  pot.name = p.text("name", std::nullopt, kPotentials);
  const int dims = grid.dims();
  if (pot.name == "harmonic") {
    p.allow({"name", "omega", "center"});
    const auto omega = p.quantities("omega", Dim::Energy, dims, 1.0);
    const auto center = p.quantities("center", Dim::Length, dims, 0.0);
    for (double w : omega) {
      if (!(w > 0)) p.fail("omega", "must be positive");
    }
    pot.field = [omega, center, masses](const Point& x) {
      double v = 0;
      for (std::size_t a = 0; a < x.size(); ++a) v += 0.5 * masses[a] * omega[a] * omega[a] * std::pow(x[a] - center[a], 2);
      return v;
    };
  } else if (pot.name == "eckart") {
    p.allow({"name", "height", "width", "center", "axis"});
    const double h = p.quantity("height", Dim::Energy);
    const double w = p.positive_quantity("width", Dim::Length);
    const double c = p.quantity("center", Dim::Length, 0.0);
    const int axis = static_cast<int>(p.integer_in("axis", 0, dims - 1, 0));
    pot.field = [h, w, c, axis](const Point& x) { return h / std::pow(std::cosh((x[axis] - c) / w), 2); };
  } else if (pot.name == "double-well") {
    p.allow({"name", "height", "separation", "axis"});
    const double h = p.quantity("height", Dim::Energy);
    const double b = p.positive_quantity("separation", Dim::Length);
    const int axis = static_cast<int>(p.integer_in("axis", 0, dims - 1, 0));
    pot.field = [h, b, axis](const Point& x) { return h * std::pow(std::pow(x[axis] / b, 2) - 1, 2); };
  } else if (pot.name == "free") {
    p.allow({"name"});
    pot.field = [](const Point&) { return 0.0; };
  } else if (pot.name == "coulomb-pairwise") {
    p.allow({"name", "particles", "dims", "charges", "integer_bits"});
    if (!allow_circuit_only) p.fail("name", "coulomb-pairwise runs only as a live circuit oracle (propagate/compare)");
    ArithmeticPotential a;
    a.particles = static_cast<int>(p.integer_in("particles", 2, 6));
    a.dims = static_cast<int>(p.integer_in("dims", 1, 3, 1));
    a.charges = p.integers("charges", static_cast<std::size_t>(a.particles));
    a.ix = static_cast<int>(p.integer_in("integer_bits", -1, 62, -1));
    if (a.particles * a.dims != dims) p.fail("particles", "particles x dims must equal grid.dims");
    pot.live = a;
  } else {
    p.allow({"name", "file"});
    if (!allow_circuit_only) p.fail("name", "integer tables drive only the circuit (propagate/compare)");
    const auto path = base_dir / p.text("file");
    pot.table = read_table_csv(path, p);
    if (pot.table.size() != grid.size()) {
      p.fail("file", "table has " + std::to_string(pot.table.size()) + " entries, grid has " + std::to_string(grid.size()));
    }
    for (auto v : pot.table) {
      if (modulus && v >= modulus) p.fail("file", "table entry " + std::to_string(v) + " needs more than plan.m bits");
    }
  }
  return pot;
}

struct Initial {
  std::vector<std::pair<double, GridWavefunction>> components;
};

bool coincident(const GridSpec& g, std::size_t flat, int particles, int dims) {
  for (int i = 0; i < particles; ++i) {
    for (int j = i + 1; j < particles; ++j) {
      bool same = true;
      for (int a = 0; a < dims && same; ++a) same = g.axis_index(flat, i * dims + a) == g.axis_index(flat, j * dims + a);
      if (same) return true;
    }
  }
  return false;
}

Initial parse_initial(const Node& root, const GridSpec& grid, const std::vector<double>& masses,
                      const Potential& pot, bool allow_mixture) {
  const auto s = root.child("initial");
  const std::vector<std::string> types =
      allow_mixture ? std::vector<std::string>{"gaussian", "harmonic", "uniform", "mixture"}
                    : std::vector<std::string>{"gaussian", "harmonic", "uniform"};
  const auto type = s.text("type", std::nullopt, types);
  const int dims = grid.dims();
  Initial init;
  auto wrap = [&](auto&& build) {
    try {
      return build();
    } catch (const ValidationError& e) {
      s.fail("type", e.what());
    } catch (const DomainError& e) {
      s.fail("type", e.what());
    }
  };
  auto modes_for = [&](const std::vector<std::int64_t>& quanta) {
    const auto omega = s.quantities("omega", Dim::Energy, dims, 1.0);
    const auto center = s.quantities("center", Dim::Length, dims, 0.0);
    std::vector<HarmonicMode> modes;
    for (int a = 0; a < dims; ++a) {
      if (quanta[a] < 0 || quanta[a] > kMaxHarmonicQuanta) s.fail("quanta", "out of range");
      if (!(omega[a] > 0)) s.fail("omega", "must be positive");
      modes.push_back({static_cast<int>(quanta[a]), omega[a], masses[a], center[a]});
    }
    return modes;
  };
  if (type == "gaussian") {
    s.allow({"type", "center", "momentum", "width"});
    const WavepacketSpec spec{s.quantities("center", Dim::Length, dims), s.quantities("momentum", Dim::Length, dims, 0.0),
                              s.quantities("width", Dim::Length, dims)};
    init.components.emplace_back(1.0, wrap([&] { return gaussian_packet(spec, grid); }));
  } else if (type == "harmonic") {
    s.allow({"type", "quanta", "omega", "center"});
    const auto modes = modes_for(s.integers("quanta", static_cast<std::size_t>(dims)));
    init.components.emplace_back(1.0, wrap([&] { return harmonic_product_state(modes, grid); }));
  } else if (type == "uniform") {
    s.allow({"type"});
    std::vector<Complex> amps(grid.size(), 1.0);
    init.components.emplace_back(1.0, GridWavefunction::normalized(grid, amps));
  } else {
    s.allow({"type", "components", "omega", "center"});
    const auto& comps = s.raw("components");
    if (!comps.is_array() || comps.empty()) s.fail("components", "must be a non-empty array");
    double total = 0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const Node c(comps[i], s.field("components") + "[" + std::to_string(i) + "]");
      c.allow({"weight", "quanta"});
      const double w = c.number("weight");
      if (!(w >= 0)) c.fail("weight", "must be non-negative");
      total += w;
      const auto modes = modes_for(c.integers("quanta", static_cast<std::size_t>(dims)));
      init.components.emplace_back(w, wrap([&] { return harmonic_product_state(modes, grid); }));
    }
    if (!(total > 0)) s.fail("components", "weights sum to zero");
  }
  // 1/r is undefined where particles coincide; those configurations are
  // dropped and the state renormalized.
  if (pot.live) {
    for (auto& [w, psi] : init.components) {
      std::vector<Complex> amps(psi.amplitudes().begin(), psi.amplitudes().end());
      for (std::size_t i = 0; i < amps.size(); ++i) {
        if (coincident(grid, i, pot.live->particles, pot.live->dims)) amps[i] = 0.0;
      }
      double norm = 0;
      for (auto a : amps) norm += std::norm(a);
      if (!(norm > 1e-12)) s.fail("type", "state lives entirely on coincident particle configurations");
      psi = GridWavefunction::normalized(grid, amps);
    }
  }
  return init;
}

struct Propagation {
  double dt = 0.0;
  int steps = 0;
};

Propagation parse_propagation(const Node& root, const std::string& key, bool allow_zero_steps) {
  const auto p = root.child(key);
  p.allow({"dt", "steps"});
  Propagation out;
  out.dt = p.positive_quantity("dt", Dim::Time);
  out.steps = static_cast<int>(p.integer_in("steps", allow_zero_steps ? 0 : 1, 10000000));
  return out;
}

std::shared_ptr<SplitOperatorPropagator> make_propagator(const GridSpec& g, const RealField& v,
                                                         const std::vector<double>& masses, double dt) {
  return std::make_shared<SplitOperatorPropagator>(SplitOperatorPropagator::physical(g, v, masses, dt));
}

void check_dense_cap(const GridSpec& g, int extra_qubits, int cap, const std::string& what) {
  const int need = g.total_qubits() + extra_qubits;
  if (need > cap) {
    throw ResourceCapError(what + " needs " + std::to_string(need) + " qubits, cap is " + std::to_string(cap), need);
  }
}

// --- Kinds -------------------------------------------------------------------------

struct Job {
  json metrics = json::object();
  std::vector<Artifact> artifacts;
  std::vector<std::string> warnings;
};

void warn_boundary(Job& job, const GridWavefunction& psi, const std::string& what) {
  const double b = boundary_probability(psi);
  if (b > kBoundaryWarningThreshold) {
    std::ostringstream msg;
    msg << what << ": boundary probability " << b << " exceeds " << kBoundaryWarningThreshold
        << "; widen the grid";
    job.warnings.push_back(msg.str());
  }
}

void add_snapshot(Job& job, const std::string& stem, const GridWavefunction& psi) {
  std::ostringstream csv, bin;
  csv << std::setprecision(17);
  write_csv(csv, psi);
  write_binary(bin, psi);
  job.artifacts.push_back({stem + ".csv", csv.str()});
  job.artifacts.push_back({stem + ".bin", bin.str()});
}

json tally_json(const GateTally& t) {
  return {{"single_qubit", t.single_qubit}, {"cnot", t.cnot}, {"rotation_class", t.rotation_class()},
          {"oracle_calls", t.oracle_calls}};
}

std::function<Job()> plan_kickback(const Node& root, const Scenario& sc, const RunOptions& opt) {
  root.allow({"schema", "kind", "name", "seed", "grid", "mass", "potential", "plan", "initial"});
  const auto grid = parse_grid(root);
  const auto masses = parse_masses(root, grid.dims());
  const auto p = root.child("plan");
  p.allow({"m", "steps", "dt", "stride", "quantization", "kinetic", "separability_tolerance"});
  const int m = static_cast<int>(p.integer_in("m", 1, 62));
  const FixedPointSpec fp(m);
  const auto pot = parse_potential(root, grid, masses, sc.base_dir, fp.modulus(), true);
  KickbackPlan plan{.grid = grid, .fp = fp, .steps = static_cast<int>(p.integer_in("steps", 0, 10000000))};
  const int stride = static_cast<int>(p.integer_in("stride", 0, 10000000, 0));
  const double sep_tol = p.number("separability_tolerance", 1e-8);
  if (sep_tol < 0 || sep_tol > 1e-2) p.fail("separability_tolerance", "must lie in [0, 0.01]");
  if (pot.live) {
    if (p.has("dt") || p.has("quantization")) p.fail("dt", "live arithmetic plans fix the time step through m");
    plan.arithmetic_potential = *pot.live;
    ArithmeticKinetic kin{std::vector<std::int64_t>(grid.dims(), 1), 0};
    if (p.has("kinetic")) {
      const auto k = p.child("kinetic");
      k.allow({"weights", "shift"});
      if (k.has("weights")) kin.weights = k.integers("weights", static_cast<std::size_t>(grid.dims()));
      kin.shift = static_cast<int>(k.integer_in("shift", 0, 2 * grid.qubits_per_axis() - 1, 0));
    }
    plan.arithmetic_kinetic = kin;
  } else {
    if (p.has("kinetic")) p.fail("kinetic", "only live arithmetic plans take an integer kinetic source");
    const double dt = p.positive_quantity("dt", Dim::Time);
    const auto mode = p.text("quantization", "physical", {"physical", "max-fit"});
    if (pot.name == "table") {
      plan.potential_table = pot.table;
    } else {
      const auto q = mode == "physical" ? quantize_potential_physical(pot.field, grid, fp, dt)
                                        : quantize_potential(pot.field, grid, fp);
      plan.potential_table = q.table;
      plan.v_min = q.offset;
    }
    plan.kinetic_table = quantize_kinetic(grid, masses, fp, dt).table;
  }
  try {
    plan.validate();
  } catch (const ValidationError& e) {
    p.fail("m", e.what());
  }
  const auto init = parse_initial(root, grid, masses, pot, false);
  const bool compare = sc.kind == "compare";
  const int cap = opt.qubit_cap;
  return [=] {
    Job job;
    EvolveOptions eo{.stride = stride, .qubit_cap = cap, .separability_tolerance = sep_tol,
                    .compare_reference = compare};
    const auto traj = evolve(plan, init.components.front().second, eo);
    std::ostringstream manifest;
    write_manifest(manifest, plan, traj, sc.config.value("name", sc.kind));
    job.artifacts.push_back({"trajectory.json", manifest.str()});
    add_snapshot(job, "final_state", traj.final_state);
    warn_boundary(job, traj.final_state, "final state");
    job.metrics["qubits"] = traj.qubits;
    job.metrics["steps"] = plan.steps;
    job.metrics["max_product_deviation"] = traj.max_product_deviation;
    job.metrics["step_tally"] = tally_json(traj.step_tally);
    job.metrics["position_expectation"] = position_expectation(traj.final_state);
    if (plan.live()) job.metrics["peak_terms"] = traj.peak_terms;
    if (compare) job.metrics["fidelity"] = traj.final_fidelity;
    return job;
  };
}

std::function<Job()> plan_audit(const Node& root) {
  root.allow({"schema", "kind", "name", "seed", "audit"});
  const auto a = root.child("audit");
  a.allow({"m", "kinds"});
  std::vector<int> widths;
  for (auto m : a.integers("m")) {
    if (m < 2 || m > 32) a.fail("m", "widths must lie in [2, 32]");
    widths.push_back(static_cast<int>(m));
  }
  std::vector<std::string> names;
  for (auto k : {ArithKind::Adder, ArithKind::ControlledAdder, ArithKind::Multiply, ArithKind::Square,
                 ArithKind::RSquared, ArithKind::InvSqrt, ArithKind::Coulomb}) {
    names.push_back(to_string(k));
  }
  std::vector<ArithKind> kinds;
  const auto& raw = a.raw("kinds");
  if (!raw.is_array() || raw.empty()) a.fail("kinds", "must be a non-empty array of names");
  for (const auto& k : raw) {
    if (!k.is_string()) a.fail("kinds", "must be an array of names");
    const auto s = k.get<std::string>();
    if (std::find(names.begin(), names.end(), s) == names.end()) {
      a.fail("kinds", "unknown kind \"" + s + "\"" + suggestion(s, names));
    }
    kinds.push_back(parse_arith_kind(s));
  }
  return [=] {
    Job job;
    std::vector<AuditRow> rows;
    json arr = json::array();
    for (auto k : kinds) {
      for (int m : widths) {
        rows.push_back(audit_counts(k, m));
        const auto& r = rows.back();
        arr.push_back({{"kind", to_string(k)}, {"m", m}, {"measured", r.measured}, {"formula", r.formula},
                       {"ratio", r.ratio}});
      }
    }
    std::ostringstream csv;
    write_audit_csv(csv, rows);
    job.artifacts.push_back({"audit.csv", csv.str()});
    job.metrics["rows"] = arr;
    return job;
  };
}

BigInt parse_big(const Node& n, const std::string& key) {
  const auto& v = n.raw(key);
  if (v.is_number_integer()) {
    const auto x = v.get<std::int64_t>();
    if (x <= 0) n.fail(key, "must be positive");
    return BigInt(x);
  }
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (!(x > 0) || !std::isfinite(x) || std::floor(x) != x || x > 9007199254740992.0) {
      n.fail(key, "must be a positive integer (use a decimal string above 2^53)");
    }
    return BigInt(static_cast<std::int64_t>(x));
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s == std::string(s.size(), '0')) {
      n.fail(key, "must be a positive decimal integer");
    }
    return BigInt(s);
  }
  n.fail(key, "must be a positive integer");
}

std::function<Job()> plan_resources(const Node& root) {
  root.allow({"schema", "kind", "name", "seed", "resources"});
  const auto r = root.child("resources");
  r.allow({"gate_budget", "qubit_budget", "n", "m", "steps", "crossover", "figures"});
  const BigInt gates = parse_big(r, "gate_budget");
  const auto qubits = r.integer_in("qubit_budget", 1, std::int64_t{1} << 40);
  const int n = static_cast<int>(r.integer_in("n", 1, 64));
  const int m = static_cast<int>(r.integer_in("m", 2, 64));
  const auto steps = r.integer_in("steps", 1, std::int64_t{1} << 40);
  std::optional<std::array<int, 4>> xo;
  if (r.has("crossover")) {
    const auto c = r.child("crossover");
    c.allow({"Z", "K", "m", "step_ratio"});
    xo = std::array<int, 4>{static_cast<int>(c.integer_in("Z", 1, 118)), static_cast<int>(c.integer_in("K", 2, 1000)),
                            static_cast<int>(c.integer_in("m", 2, 64)),
                            static_cast<int>(c.integer_in("step_ratio", 1, 1000000000, 1000))};
  }
  FigureOptions fig;
  bool figures = false;
  if (r.has("figures")) {
    figures = true;
    const auto f = r.child("figures");
    f.allow({"n_values", "m_values", "z_values", "max_particles", "max_atoms"});
    auto ints = [&](const char* key, std::vector<int>& dst, int lo, int hi) {
      if (!f.has(key)) return;
      dst.clear();
      for (auto v : f.integers(key)) {
        if (v < lo || v > hi) f.fail(key, "entries must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        dst.push_back(static_cast<int>(v));
      }
    };
    ints("n_values", fig.n_values, 1, 64);
    ints("m_values", fig.m_values, 2, 64);
    ints("z_values", fig.z_values, 1, 118);
    fig.max_particles = static_cast<int>(f.integer_in("max_particles", 2, 10000, fig.max_particles));
    fig.max_atoms = static_cast<int>(f.integer_in("max_atoms", 2, 100, fig.max_atoms));
    fig.steps = steps;
    if (xo) fig.K = (*xo)[1], fig.m = (*xo)[2], fig.step_ratio = (*xo)[3];
  }
  return [=] {
    Job job;
    const auto rep = feasibility_report(gates, qubits, n, m, steps);
    std::ostringstream csv;
    csv << "particles,qubits,gates_per_step,total_gates,fits\n";
    for (const auto& row : rep.rows) {
      csv << row.particles << ',' << row.qubits << ',' << format_count(row.gates_per_step) << ','
          << format_count(row.total_gates) << ',' << (row.fits ? 1 : 0) << '\n';
    }
    job.artifacts.push_back({"frontier.csv", csv.str()});
    job.metrics["max_particles"] = rep.max_particles;
    job.metrics["feasible"] = rep.feasible;
    if (rep.feasible) {
      const auto& best = rep.rows[static_cast<std::size_t>(rep.max_particles - 2)];
      job.metrics["frontier"] = {{"particles", best.particles}, {"qubits", best.qubits},
                                 {"total_gates", format_count(best.total_gates)}};
    }
    job.metrics["coulomb_gates_per_pair"] = format_count(coulomb_gates_per_pair(m));
    if (xo) {
      const auto [z, k, mm, ratio] = *xo;
      job.metrics["crossover_atoms"] = crossover_atoms(z, k, mm, ratio);
    }
    if (figures) {
      for (auto& a : emit_figures(fig)) job.artifacts.push_back(std::move(a));
    }
    return job;
  };
}

std::function<Job()> plan_rate(const Node& root, const Scenario& sc, const RunOptions& opt) {
  root.allow({"schema", "kind", "name", "seed", "grid", "mass", "potential", "thermal", "reactant", "propagation",
              "regions", "samples", "quadrature"});
  const auto grid = parse_grid(root);
  const auto masses = parse_masses(root, grid.dims());
  const auto pot = parse_potential(root, grid, masses, sc.base_dir, 0, false);
  const auto prop = parse_propagation(root, "propagation", false);

  const auto t = root.child("thermal");
  t.allow({"temperature", "e_max", "de", "levels", "partition"});
  ThermalSpec thermal;
  thermal.temperature = t.positive_quantity("temperature", Dim::Energy);
  thermal.e_max = t.positive_quantity("e_max", Dim::Energy);
  thermal.de = t.positive_quantity("de", Dim::Energy);
  thermal.partition = t.number("partition", 0.0);
  if (thermal.partition < 0) t.fail("partition", "must be non-negative (0 computes it)");
  const int internal = grid.dims() - 1;
  const auto& levels = t.raw("levels");
  if (!levels.is_array() || levels.empty()) t.fail("levels", "must be a non-empty array");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const Node l(levels[i], t.field("levels") + "[" + std::to_string(i) + "]");
    l.allow({"zeta", "energy", "quanta"});
    ThermalLevel lv;
    lv.zeta = static_cast<int>(l.integer("zeta", static_cast<std::int64_t>(i)));
    lv.energy = l.quantity("energy", Dim::Energy, 0.0);
    if (internal > 0) {
      for (auto q : l.integers("quanta", static_cast<std::size_t>(internal))) lv.quanta.push_back(static_cast<int>(q));
    } else if (l.has("quanta")) {
      l.fail("quanta", "a one-axis grid has no internal modes");
    }
    thermal.levels.push_back(lv);
  }
  try {
    thermal_bins(thermal);
  } catch (const std::exception& e) {
    t.fail("levels", e.what());
  }

  const auto r = root.child("reactant");
  r.allow({"center", "width", "direction", "internal"});
  ReactantBuilder builder;
  builder.mass = masses[0];
  builder.center = r.quantity("center", Dim::Length);
  builder.width = r.positive_quantity("width", Dim::Length);
  builder.direction = static_cast<int>(r.integer("direction", 1));
  if (builder.direction != 1 && builder.direction != -1) r.fail("direction", "must be +1 or -1");
  if (internal > 0) {
    const auto in = r.child("internal");
    in.allow({"omega", "center"});
    const auto omega = in.quantities("omega", Dim::Energy, static_cast<std::size_t>(internal));
    const auto center = in.quantities("center", Dim::Length, static_cast<std::size_t>(internal), 0.0);
    for (int a = 0; a < internal; ++a) builder.internal.push_back({0, omega[a], masses[a + 1], center[a]});
  }

  const auto reg = root.child("regions");
  reg.allow({"boundary", "axis"});
  const double boundary = reg.quantity("boundary", Dim::Length);
  const int axis = static_cast<int>(reg.integer_in("axis", 0, grid.dims() - 1, 0));
  const auto samples = static_cast<std::size_t>(root.integer_in("samples", 1, 100000000));
  const bool quadrature = root.boolean("quadrature", true);
  check_dense_cap(grid, 0, opt.qubit_cap, "rate grid");

  const auto seed = sc.seed;
  return [=] {
    Job job;
    RateJob rj;
    rj.thermal = thermal;
    rj.reactant = builder;
    rj.grid = grid;
    rj.regions = RegionMap::split(grid.dims(), axis, boundary);
    const auto sp = make_propagator(grid, pot.field, masses, prop.dt);
    const int steps = prop.steps;
    auto edge = std::make_shared<double>(0.0);
    rj.propagate = [sp, steps, edge](const GridWavefunction& psi) {
      auto out = sp->step(psi, steps);
      *edge = std::max(*edge, boundary_probability(out));
      return out;
    };
    rj.samples = samples;
    rj.seed = seed;
    const auto est = rate_constant(rj);
    job.metrics["k"] = est.k;
    job.metrics["k_std_error"] = est.std_error;
    job.metrics["raw_probability"] = est.raw_probability;
    job.metrics["raw_std_error"] = est.raw_std_error;
    job.metrics["c_squared"] = est.c_squared;
    job.metrics["partition"] = est.partition;
    job.metrics["samples"] = est.samples;
    job.metrics["rejected"] = est.rejected;
    job.metrics["propagations"] = est.propagations;
    std::vector<ObservableRecord> recs{{"rate_constant", est.k, est.std_error, est.samples, seed, sc.hash},
                                       {"ancilla_probability", est.raw_probability, est.raw_std_error, est.samples, seed,
                                        sc.hash}};
    if (quadrature) {
      const auto ens = thermal_bins(thermal);
      double k = 0;
      std::ostringstream csv;
      csv << std::setprecision(17) << "bin,level,energy,kinetic,gamma_sq,reaction_probability\n";
      for (std::size_t b = 0; b < ens.bins.size(); ++b) {
        double pr = 0;
        try {
          pr = bin_reaction_probability(rj, ens, b);
        } catch (const DomainError&) {
          pr = std::nan("");
        }
        if (std::isfinite(pr)) k += ens.bins[b].gamma_sq * pr;
        const auto& bin = ens.bins[b];
        csv << b << ',' << bin.level << ',' << bin.energy << ',' << bin.kinetic << ',' << bin.gamma_sq << ',' << pr
            << '\n';
      }
      job.metrics["k_quadrature"] = k;
      job.artifacts.push_back({"bins.csv", csv.str()});
    }
    std::ostringstream rec;
    write_records_json(rec, recs);
    job.artifacts.push_back({"records.json", rec.str()});
    job.metrics["max_boundary_probability"] = *edge;
    if (*edge > kBoundaryWarningThreshold) {
      job.warnings.push_back("propagated reactant reaches the grid edge (boundary probability " +
                             std::to_string(*edge) + "); widen the grid");
    }
    return job;
  };
}

std::function<Job()> plan_state_to_state(const Node& root, const Scenario& sc, const RunOptions& opt) {
  root.allow({"schema", "kind", "name", "seed", "grid", "mass", "potential", "initial", "propagation",
              "product_well", "max_v", "residual_threshold"});
  const auto grid = parse_grid(root);
  const auto masses = parse_masses(root, grid.dims());
  const auto pot = parse_potential(root, grid, masses, sc.base_dir, 0, false);
  const auto init = parse_initial(root, grid, masses, pot, true);
  const auto prop = root.has("propagation") ? parse_propagation(root, "propagation", true) : Propagation{1.0, 0};
  const auto w = root.child("product_well");
  w.allow({"axes", "omega", "mass", "center", "map"});
  ProductWell well;
  for (auto a : w.integers("axes")) {
    if (a < 0 || a >= grid.dims()) w.fail("axes", "axis out of range");
    well.axes.push_back(static_cast<int>(a));
  }
  if (well.axes.empty()) w.fail("axes", "needs at least one vibrational axis");
  const auto k = well.axes.size();
  std::vector<double> default_mass;
  for (int a : well.axes) default_mass.push_back(masses[a]);
  const auto omega = w.quantities("omega", Dim::Energy, k);
  const auto center = w.quantities("center", Dim::Length, k, 0.0);
  const auto wm = w.has("mass") ? w.quantities("mass", Dim::Mass, k) : default_mass;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(omega[i] > 0)) w.fail("omega", "must be positive");
    if (!(wm[i] > 0)) w.fail("mass", "must be positive");
    well.modes.push_back({0, omega[i], wm[i], center[i]});
  }
  if (w.has("map")) {
    const auto mp = w.child("map");
    mp.allow({"matrix", "offset"});
    const auto d = static_cast<std::size_t>(grid.dims());
    well.map = LinearMap{mp.numbers("matrix", d * d), mp.has("offset") ? mp.numbers("offset", d) : std::vector<double>(d)};
  }
  const int max_v = static_cast<int>(root.integer_in("max_v", 0, kMaxHarmonicQuanta));
  const double thr = root.number("residual_threshold", 1e-3);
  if (!(thr > 0)) root.fail("residual_threshold", "must be positive");
  check_dense_cap(grid, 0, opt.qubit_cap, "state-to-state grid");
  return [=] {
    Job job;
    auto mixture = init.components;
    if (prop.steps > 0) {
      const auto sp = make_propagator(grid, pot.field, masses, prop.dt);
      for (auto& [wt, psi] : mixture) psi = sp->step(psi, prop.steps);
    }
    for (const auto& [wt, psi] : mixture) warn_boundary(job, psi, "propagated component");
    const auto res = state_to_state(mixture, well, max_v, thr);
    std::ostringstream csv;
    csv << std::setprecision(17);
    for (std::size_t i = 0; i < k; ++i) csv << 'v' << i << ',';
    csv << "probability\n";
    json pops = json::array();
    for (std::size_t i = 0; i < res.quanta.size(); ++i) {
      for (int q : res.quanta[i]) csv << q << ',';
      csv << res.probabilities[i] << '\n';
      pops.push_back({{"quanta", res.quanta[i]}, {"probability", res.probabilities[i]}});
    }
    job.artifacts.push_back({"populations.csv", csv.str()});
    job.metrics["populations"] = pops;
    job.metrics["residual"] = res.residual;
    job.metrics["flagged"] = res.flagged;
    return job;
  };
}

std::function<Job()> plan_phase(const Node& root, const Scenario& sc, const RunOptions& opt) {
  root.allow({"schema", "kind", "name", "seed", "grid", "mass", "potential", "initial", "dt", "t", "shots"});
  const auto grid = parse_grid(root);
  const auto masses = parse_masses(root, grid.dims());
  const auto pot = parse_potential(root, grid, masses, sc.base_dir, 0, false);
  const auto init = parse_initial(root, grid, masses, pot, false);
  const double dt = root.positive_quantity("dt", Dim::Time);
  const int t = static_cast<int>(root.integer_in("t", 1, 20));
  const auto shots = static_cast<std::size_t>(root.integer_in("shots", 0, 100000000, 0));
  check_dense_cap(grid, t, opt.qubit_cap, "phase estimation");
  const auto seed = sc.seed;
  return [=] {
    Job job;
    const auto sp = make_propagator(grid, pot.field, masses, dt);
    warn_boundary(job, init.components.front().second, "initial state");
    const auto est =
        phase_estimate([sp](const GridWavefunction& psi) { return sp->step(psi); }, init.components.front().second, t,
                       shots, seed);
    std::ostringstream csv;
    write_histogram_csv(csv, est);
    job.artifacts.push_back({"histogram.csv", csv.str()});
    const auto modal = est.modal_bin();
    job.metrics["modal_bin"] = modal;
    job.metrics["phase"] = est.phase(modal);
    job.metrics["energy"] = phase_to_energy(est.phase(modal), dt);
    job.metrics["energy_resolution"] = 2 * kPi / (std::ldexp(1.0, t) * dt);
    // Local maxima holding at least 5% of the weight.
    json peaks = json::array();
    const auto& p = est.probabilities;
    const std::size_t N = p.size();
    for (std::size_t b = 0; b < N; ++b) {
      if (p[b] >= 0.05 && p[b] >= p[(b + N - 1) % N] && p[b] > p[(b + 1) % N]) {
        peaks.push_back({{"bin", b}, {"probability", p[b]}, {"energy", phase_to_energy(est.phase(b), dt)}});
      }
    }
    job.metrics["peaks"] = peaks;
    std::vector<ObservableRecord> recs{{"eigenphase", est.phase(modal), std::ldexp(1.0, -t), shots, seed, sc.hash}};
    std::ostringstream rec;
    write_records_json(rec, recs);
    job.artifacts.push_back({"records.json", rec.str()});
    return job;
  };
}

std::function<Job()> plan_job(const Scenario& sc, const RunOptions& opt) {
  const Node root(sc.config, "");
  if (sc.kind == "propagate" || sc.kind == "compare") return plan_kickback(root, sc, opt);
  if (sc.kind == "arithmetic-audit") return plan_audit(root);
  if (sc.kind == "resources") return plan_resources(root);
  if (sc.kind == "rate") return plan_rate(root, sc, opt);
  if (sc.kind == "state-to-state") return plan_state_to_state(root, sc, opt);
  return plan_phase(root, sc, opt);
}

json versions() {
  return {{"qdyn", QDYN_VERSION},
          {"fftw", std::string(fftw_version)},
          {"boost", BOOST_LIB_VERSION},
          {"openssl", OPENSSL_VERSION_TEXT},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"schema", kSchemaVersion}};
}

json example(const std::string& kind) {
  if (kind == "compare") {
    return {{"schema", 1}, {"kind", "compare"}, {"name", "harmonic-kickback"}, {"seed", 1},
            {"grid", {{"qubits_per_axis", 6}, {"min", -10.0}, {"max", 10.0}}},
            {"potential", {{"name", "harmonic"}, {"omega", 1.0}}},
            {"plan", {{"m", 8}, {"steps", 200}, {"dt", 2 * kPi / 200}, {"stride", 50}}},
            {"initial", {{"type", "harmonic"}, {"quanta", {0}}, {"center", {2.0}}}}};
  }
  if (kind == "propagate") {
    return {{"schema", 1}, {"kind", "propagate"}, {"name", "coulomb-pair"}, {"seed", 1},
            {"grid", {{"qubits_per_axis", 3}, {"dims", 2}, {"min", 0.0}, {"max", 1.0}}},
            {"potential", {{"name", "coulomb-pairwise"}, {"particles", 2}, {"dims", 1}, {"charges", {1, -1}}}},
            {"plan", {{"m", 3}, {"steps", 2}, {"kinetic", {{"shift", 2}}}}},
            {"initial", {{"type", "uniform"}}}};
  }
  if (kind == "arithmetic-audit") {
    return {{"schema", 1}, {"kind", "arithmetic-audit"}, {"seed", 0},
            {"audit", {{"m", {2, 4, 8}}, {"kinds", {"adder", "controlled_adder", "multiply"}}}}};
  }
  if (kind == "resources") {
    return {{"schema", 1}, {"kind", "resources"}, {"seed", 0},
            {"resources",
             {{"gate_budget", 1000000000}, {"qubit_budget", 300}, {"n", 10}, {"m", 10}, {"steps", 1000},
              {"crossover", {{"Z", 100}, {"K", 15}, {"m", 20}, {"step_ratio", 1000}}}}}};
  }
  if (kind == "rate") {
    return {{"schema", 1}, {"kind", "rate"}, {"name", "eckart-rate"}, {"seed", 7},
            {"grid", {{"qubits_per_axis", 10}, {"min", -150.0}, {"max", 150.0}}},
            {"potential", {{"name", "eckart"}, {"height", 0.5}, {"width", 1.0}}},
            {"thermal", {{"temperature", 0.5}, {"e_max", 3.0}, {"de", 0.1}, {"levels", {{{"energy", 0.0}}}}}},
            {"reactant", {{"center", -30.0}, {"width", 4.0}}},
            {"propagation", {{"dt", 0.05}, {"steps", 800}}},
            {"regions", {{"boundary", 10.0}}},
            {"samples", 100}};
  }
  if (kind == "state-to-state") {
    return {{"schema", 1}, {"kind", "state-to-state"}, {"seed", 0},
            {"grid", {{"qubits_per_axis", 7}, {"min", -10.0}, {"max", 10.0}}},
            {"potential", {{"name", "harmonic"}, {"omega", 1.0}}},
            {"initial",
             {{"type", "mixture"},
              {"components", {{{"weight", 0.6}, {"quanta", {0}}}, {{"weight", 0.4}, {"quanta", {1}}}}}}},
            {"propagation", {{"dt", 0.05}, {"steps", 40}}},
            {"product_well", {{"axes", {0}}, {"omega", {1.0}}}},
            {"max_v", 4}};
  }
  return {{"schema", 1}, {"kind", "phase-estimate"}, {"seed", 3},
          {"grid", {{"qubits_per_axis", 7}, {"min", -10.0}, {"max", 10.0}}},
          {"potential", {{"name", "harmonic"}, {"omega", 1.0}}},
          {"initial", {{"type", "harmonic"}, {"quanta", {1}}}},
          {"dt", 0.4}, {"t", 10}, {"shots", 1000}};
}

}  // namespace

std::string nearest_match(const std::string& name, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& c : candidates) {
    const auto d = edit_distance(name, c);
    if (d < best_d) best_d = d, best = c;
  }
  return best;
}

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string scenario_hash(const json& canonical) {
  const auto text = canonical.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

Scenario validate_scenario(const json& config, const RunOptions& opt, const std::filesystem::path& base_dir) {
  const Node root(config, "");
  const auto schema = root.integer("schema");
  if (schema != kSchemaVersion) root.fail("schema", "unsupported version " + std::to_string(schema));
  Scenario sc;
  sc.kind = root.text("kind", std::nullopt, kKinds);
  if (root.has("name")) root.text("name");
  const auto seed = root.integer("seed", 0);
  if (seed < 0) root.fail("seed", "must be non-negative");
  sc.seed = opt.seed ? *opt.seed : static_cast<std::uint64_t>(seed);
  if (opt.qubit_cap < 1 || opt.qubit_cap > 40) throw ValidationError("--qubit-cap: must lie in [1, 40]");
  sc.config = config;
  sc.config["seed"] = sc.seed;
  sc.base_dir = base_dir;
  sc.hash = scenario_hash(sc.config);
  plan_job(sc, opt);  // parses every field; no compute happens here
  return sc;
}

RunResult run_scenario(const Scenario& sc, const RunOptions& opt) {
#ifdef _OPENMP
  if (opt.threads > 0) omp_set_num_threads(opt.threads);
#endif
  auto job = plan_job(sc, opt)();
  RunResult r;
  r.manifest = {{"schema", kSchemaVersion},
                {"kind", sc.kind},
                {"name", sc.config.value("name", sc.kind)},
                {"scenario_hash", sc.hash},
                {"seed", sc.seed},
                {"units", "atomic (hartree, bohr, electron mass, hbar = k_B = 1)"},
                {"versions", versions()},
                {"config", sc.config},
                {"metrics", job.metrics}};
  json outputs = json::array();
  for (const auto& a : job.artifacts) outputs.push_back(a.name);
  r.manifest["outputs"] = outputs;
  r.manifest["warnings"] = job.warnings;
  r.artifacts = std::move(job.artifacts);
  r.artifacts.push_back({"manifest.json", r.manifest.dump(2) + "\n"});
  return r;
}

json list_builtins() {
  json pots = json::array();
  pots.push_back({{"name", "harmonic"},
                  {"description", "sum_a 1/2 m_a omega_a^2 (x_a - c_a)^2"},
                  {"params", {{"omega", "energy, scalar or per axis, default 1"}, {"center", "length per axis, default 0"}}}});
  pots.push_back({{"name", "eckart"},
                  {"description", "height * sech^2((x_axis - center) / width)"},
                  {"params", {{"height", "energy"}, {"width", "length"}, {"center", "length, default 0"},
                              {"axis", "integer, default 0"}}}});
  pots.push_back({{"name", "double-well"},
                  {"description", "height * ((x_axis / separation)^2 - 1)^2"},
                  {"params", {{"height", "energy"}, {"separation", "length"}, {"axis", "integer, default 0"}}}});
  pots.push_back({{"name", "coulomb-pairwise"},
                  {"description", "sum_{i<j} q_i q_j / r_ij evaluated by the reversible circuit oracle; "
                                  "propagate/compare only, needs plan.m == grid.qubits_per_axis"},
                  {"params", {{"particles", "integer in [2, 6]"}, {"dims", "integer in [1, 3], default 1"},
                              {"charges", "one integer per particle"},
                              {"integer_bits", "fixed-point integer bits, default automatic"}}}});
  pots.push_back({{"name", "free"}, {"description", "V = 0"}, {"params", json::object()}});
  pots.push_back({{"name", "table"},
                  {"description", "integer phase table from CSV, one entry per grid point in flat order; "
                                  "propagate/compare only"},
                  {"params", {{"file", "path relative to the config file"}}}});
  json kinds = json::array();
  for (const auto& k : kKinds) kinds.push_back({{"kind", k}, {"example", example(k)}});
  json units = json::object();
  for (const auto& [name, d] : unit_table()) units[name] = {{"dimension", dim_name(d.first)}, {"to_atomic", d.second}};
  return {{"schema", kSchemaVersion}, {"potentials", pots}, {"scenarios", kinds}, {"units", units},
          {"initial_states", {"gaussian", "harmonic", "uniform", "mixture (state-to-state only)"}}};
}

std::vector<Artifact> emit_figures(const FigureOptions& opt) {
  std::ostringstream a, b, c;
  write_qubits_csv(a, opt.n_values, opt.m, opt.max_particles);
  write_gates_csv(b, opt.m_values, opt.steps, opt.max_particles);
  write_crossover_csv(c, opt.z_values, opt.K, opt.m, opt.step_ratio, opt.max_atoms);
  return {{"fig2a_qubits.csv", a.str()}, {"fig2b_gates.csv", b.str()}, {"fig3_crossover.csv", c.str()}};
}

void write_artifacts(const std::filesystem::path& out_dir, const std::vector<Artifact>& artifacts) {
  for (const auto& a : artifacts) {
    const std::filesystem::path p(a.name);
    if (a.name.empty() || p.has_parent_path() || p.is_absolute() || a.name == "." || a.name == "..") {
      throw ValidationError("artifact name " + a.name + " would leave the output directory");
    }
  }
  std::filesystem::create_directories(out_dir);
  for (const auto& a : artifacts) {
    std::ofstream f(out_dir / a.name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / a.name).string());
    f << a.content;
  }
}

namespace {

template <class F>
int guarded(std::ostream& err, const std::string& config, F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const DomainError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const ResourceCapError& e) {
    json report{{"error", "resource cap"}, {"message", e.what()}, {"required_qubits", e.required_qubits()}};
    // Formula estimate for pairwise Coulomb scenarios.
    try {
      const auto cfg = load_config(config);
      const auto& pot = cfg.at("potential");
      if (pot.at("name") == "coulomb-pairwise") {
        const int b = pot.at("particles").get<int>();
        const int m = cfg.at("plan").at("m").get<int>();
        report["coulomb_gates_per_step"] = format_count(coulomb_gates_per_step(b, m));
        if (b >= 3) report["formula_qubits"] = qubit_count(b, cfg.at("grid").at("qubits_per_axis").get<int>(), m);
      }
    } catch (const std::exception&) {
    }
    err << report.dump(2) << '\n';
    return kResourceCapFailure;
  } catch (const ContractViolation& e) {
    err << "numerical contract violated: " << e.what() << '\n';
    return kContractFailure;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int run_command(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                const RunOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, config_path.string(), [&] {
    const auto sc = validate_scenario(load_config(config_path), opt, config_path.parent_path());
    const auto result = run_scenario(sc, opt);
    write_artifacts(out_dir, result.artifacts);
    for (const auto& w : result.manifest["warnings"]) err << "warning: " << w.get<std::string>() << '\n';
    out << result.manifest["metrics"].dump(2) << '\n';
    return int{kOk};
  });
}

int validate_command(const std::filesystem::path& config_path, const RunOptions& opt, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, config_path.string(), [&] {
    const auto sc = validate_scenario(load_config(config_path), opt, config_path.parent_path());
    out << "ok " << sc.kind << ' ' << sc.hash << '\n';
    return int{kOk};
  });
}

}  // namespace qdyn::cli
