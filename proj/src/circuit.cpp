#include "qdyn/circuit.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "qdyn/errors.hpp"

namespace qdyn {

int Register::qubit(int i) const {
  if (i < 0 || i >= size) throw ValidationError("qubit index outside register " + name);
  return offset + i;
}

RegisterLayout::RegisterLayout(std::initializer_list<std::pair<std::string, int>> regs) {
  for (const auto& [name, size] : regs) add(name, size);
}

const Register& RegisterLayout::add(const std::string& name, int size) {
  if (size < 1) throw ValidationError("register " + name + " needs at least one qubit");
  if (find(name)) throw ValidationError("duplicate register name " + name);
  regs_.push_back(Register{name, total_, size});
  total_ += size;
  return regs_.back();
}

const Register* RegisterLayout::find(const std::string& name) const {
  auto it = std::find_if(regs_.begin(), regs_.end(), [&](const Register& r) { return r.name == name; });
  return it == regs_.end() ? nullptr : &*it;
}

const Register& RegisterLayout::operator[](const std::string& name) const {
  if (const auto* r = find(name)) return *r;
  throw ValidationError("unknown register " + name);
}

std::uint64_t TableOracle::apply(std::uint64_t x, std::uint64_t y) const {
  const std::uint64_t mask = target.count >= 64 ? ~0ULL : ((1ULL << target.count) - 1);
  const std::uint64_t v = (*table)[x];
  return mode == OracleMode::Add ? ((y + v) & mask) : ((y ^ v) & mask);
}

std::string Gate::name() const {
  switch (kind) {
    case GateKind::H: return "h";
    case GateKind::X: return "x";
    case GateKind::RY: return "ry";
    case GateKind::Phase: return "p";
    case GateKind::CNOT: return "cnot";
    case GateKind::CPhase: return "cp";
    case GateKind::CCPhase: return "ccp";
    case GateKind::Swap: return "swap";
    case GateKind::Oracle: return "oracle";
  }
  return "?";
}

void GateTally::count(const Gate& g) {
  switch (g.kind) {
    case GateKind::H:
    case GateKind::X:
    case GateKind::RY:
    case GateKind::Phase: ++single_qubit; break;
    case GateKind::CNOT: ++cnot; break;
    case GateKind::CPhase: ++controlled_rotation; break;
    case GateKind::CCPhase: ++doubly_controlled_rotation; break;
    case GateKind::Swap: ++swap; break;
    case GateKind::Oracle: ++oracle_calls; break;
  }
}

GateTally& GateTally::operator+=(const GateTally& o) {
  single_qubit += o.single_qubit;
  controlled_rotation += o.controlled_rotation;
  doubly_controlled_rotation += o.doubly_controlled_rotation;
  cnot += o.cnot;
  swap += o.swap;
  oracle_calls += o.oracle_calls;
  return *this;
}

GateTally GateTally::operator-(const GateTally& o) const {
  GateTally t = *this;
  t.single_qubit -= o.single_qubit;
  t.controlled_rotation -= o.controlled_rotation;
  t.doubly_controlled_rotation -= o.doubly_controlled_rotation;
  t.cnot -= o.cnot;
  t.swap -= o.swap;
  t.oracle_calls -= o.oracle_calls;
  return t;
}

void CostLedger::charge(std::string op, int width, std::int64_t quarter_gates) {
  entries_.push_back(Entry{std::move(op), width, quarter_gates});
}

void CostLedger::append(const CostLedger& other) {
  entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

std::int64_t CostLedger::quarter_total() const {
  std::int64_t s = 0;
  for (const auto& e : entries_) s += e.quarter_gates;
  return s;
}

std::int64_t CostLedger::quarter_total(const std::string& op) const {
  std::int64_t s = 0;
  for (const auto& e : entries_) {
    if (e.op == op) s += e.quarter_gates;
  }
  return s;
}

void Circuit::resize(int num_qubits) {
  if (num_qubits < num_qubits_) throw ValidationError("circuit cannot shrink");
  num_qubits_ = num_qubits;
}

void Circuit::check(std::initializer_list<int> qubits) const {
  for (auto it = qubits.begin(); it != qubits.end(); ++it) {
    if (*it < 0 || *it >= num_qubits_)
      throw ValidationError("gate target " + std::to_string(*it) + " out of range");
    for (auto jt = qubits.begin(); jt != it; ++jt) {
      if (*jt == *it) throw ValidationError("gate targets must be distinct");
    }
  }
}

void Circuit::add(const Gate& g) {
  switch (g.kind) {
    case GateKind::H:
    case GateKind::X:
    case GateKind::RY:
    case GateKind::Phase: check({g.q0}); break;
    case GateKind::CNOT:
    case GateKind::CPhase:
    case GateKind::Swap: check({g.q0, g.q1}); break;
    case GateKind::CCPhase: check({g.q0, g.q1, g.q2}); break;
    case GateKind::Oracle: {
      const auto& o = *g.oracle;
      if (!o.table) throw ValidationError("oracle without table");
      if (o.input.count < 1 || o.target.count < 1 || o.input.count > 40 || o.target.count > 63)
        throw ValidationError("oracle register widths out of range");
      if (o.input.offset < 0 || o.target.offset < 0 ||
          o.input.offset + o.input.count > num_qubits_ ||
          o.target.offset + o.target.count > num_qubits_)
        throw ValidationError("oracle registers out of range");
      const bool overlap = o.input.offset < o.target.offset + o.target.count &&
                           o.target.offset < o.input.offset + o.input.count;
      if (overlap) throw ValidationError("oracle input and target overlap");
      if (o.control >= 0 && (o.control >= num_qubits_ || o.input.contains(o.control) ||
                             o.target.contains(o.control)))
        throw ValidationError("oracle control invalid");
      if (o.table->size() != (std::size_t{1} << o.input.count))
        throw ValidationError("oracle table must have 2^width entries");
      break;
    }
  }
  gates_.push_back(g);
  tally_.count(g);
}

void Circuit::h(int q) { add(Gate{GateKind::H, q}); }
void Circuit::x(int q) { add(Gate{GateKind::X, q}); }
void Circuit::ry(int q, double theta) { add(Gate{GateKind::RY, q, -1, -1, theta}); }
void Circuit::phase(int q, double theta) { add(Gate{GateKind::Phase, q, -1, -1, theta}); }
void Circuit::cnot(int c, int t) { add(Gate{GateKind::CNOT, c, t}); }
void Circuit::cphase(int c, int t, double theta) { add(Gate{GateKind::CPhase, c, t, -1, theta}); }
void Circuit::ccphase(int c0, int c1, int t, double theta) {
  add(Gate{GateKind::CCPhase, c0, c1, t, theta});
}
void Circuit::swap(int a, int b) { add(Gate{GateKind::Swap, a, b}); }

void Circuit::toffoli(int c0, int c1, int target) {
  h(target);
  ccphase(c0, c1, target, std::numbers::pi);
  h(target);
}

void Circuit::oracle(TableOracle spec) {
  Gate g{GateKind::Oracle};
  g.oracle = std::make_shared<const TableOracle>(std::move(spec));
  add(g);
}

void Circuit::append(const Circuit& other) {
  if (other.num_qubits_ > num_qubits_) resize(other.num_qubits_);
  gates_.reserve(gates_.size() + other.gates_.size());
  for (const auto& g : other.gates_) {
    gates_.push_back(g);
    tally_.count(g);
  }
  ledger_.append(other.ledger_);
}

Circuit Circuit::inverse() const {
  Circuit inv(num_qubits_);
  for (auto it = gates_.rbegin(); it != gates_.rend(); ++it) {
    Gate g = *it;
    switch (g.kind) {
      case GateKind::RY:
      case GateKind::Phase:
      case GateKind::CPhase:
      case GateKind::CCPhase: g.angle = -g.angle; break;
      case GateKind::Oracle:
        if (g.oracle->mode == OracleMode::Add) {
          auto spec = *g.oracle;
          const std::uint64_t mod_mask =
              spec.target.count >= 64 ? ~0ULL : ((1ULL << spec.target.count) - 1);
          auto table = std::make_shared<std::vector<std::uint64_t>>(*spec.table);
          for (auto& v : *table) v = (0 - v) & mod_mask;
          spec.table = std::move(table);
          spec.label += "^-1";
          g.oracle = std::make_shared<const TableOracle>(std::move(spec));
        }
        break;
      default: break;
    }
    inv.gates_.push_back(g);
    inv.tally_.count(g);
  }
  inv.ledger_ = ledger_;
  return inv;
}

void Circuit::to_text(std::ostream& out) const {
  char buf[64];
  for (const auto& g : gates_) {
    out << g.name();
    switch (g.kind) {
      case GateKind::Oracle: {
        const auto& o = *g.oracle;
        out << (o.mode == OracleMode::Add ? " add " : " xor ") << o.input.offset << ':'
            << o.input.count << ' ' << o.target.offset << ':' << o.target.count << ' '
            << o.control << ' ' << (o.label.empty() ? "-" : o.label) << '\n';
        continue;
      }
      default: break;
    }
    for (int q : {g.q0, g.q1, g.q2}) {
      if (q >= 0) out << ' ' << q;
    }
    if (g.kind == GateKind::RY || g.kind == GateKind::Phase || g.kind == GateKind::CPhase ||
        g.kind == GateKind::CCPhase) {
      std::snprintf(buf, sizeof buf, " %.17g", g.angle);
      out << buf;
    }
    out << '\n';
  }
}

Circuit Circuit::from_text(std::istream& in) {
  std::vector<Gate> gates;
  int max_q = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    if (name == "oracle") continue;
    Gate g;
    int arity = 1;
    bool has_angle = false;
    if (name == "h") g.kind = GateKind::H;
    else if (name == "x") g.kind = GateKind::X;
    else if (name == "ry") g.kind = GateKind::RY, has_angle = true;
    else if (name == "p") g.kind = GateKind::Phase, has_angle = true;
    else if (name == "cnot") g.kind = GateKind::CNOT, arity = 2;
    else if (name == "cp") g.kind = GateKind::CPhase, arity = 2, has_angle = true;
    else if (name == "ccp") g.kind = GateKind::CCPhase, arity = 3, has_angle = true;
    else if (name == "swap") g.kind = GateKind::Swap, arity = 2;
    else throw ValidationError("unknown gate '" + name + "' in circuit text");
    int* slots[3] = {&g.q0, &g.q1, &g.q2};
    for (int i = 0; i < arity; ++i) {
      if (!(ls >> *slots[i])) throw ValidationError("missing qubit in line: " + line);
      max_q = std::max(max_q, *slots[i]);
    }
    if (has_angle && !(ls >> g.angle)) throw ValidationError("missing angle in line: " + line);
    gates.push_back(g);
  }
  Circuit c(max_q + 1);
  for (const auto& g : gates) c.add(g);
  return c;
}

const Register& CircuitBuilder::allocate(const std::string& name, int size) {
  const auto& reg = layout.add(name, size);
  circuit.resize(layout.total_qubits());
  return reg;
}

void append_qft(Circuit& c, QubitRange reg, bool bit_reverse) {
  const int k = reg.count;
  for (int j = k - 1; j >= 0; --j) {
    c.h(reg.qubit(j));
    for (int i = j - 1; i >= 0; --i) {
      c.cphase(reg.qubit(i), reg.qubit(j), std::numbers::pi / static_cast<double>(1ULL << (j - i)));
    }
  }
  if (bit_reverse) {
    for (int j = 0; j < k / 2; ++j) c.swap(reg.qubit(j), reg.qubit(k - 1 - j));
  }
}

void append_iqft(Circuit& c, QubitRange reg, bool bit_reverse) {
  Circuit fwd(c.num_qubits());
  append_qft(fwd, reg, bit_reverse);
  c.append(fwd.inverse());
}

}  // namespace qdyn
