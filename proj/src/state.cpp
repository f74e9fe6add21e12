#include "qdyn/state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "qdyn/errors.hpp"

namespace qdyn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

std::uint64_t low_mask(int bits) { return bits >= 64 ? ~0ULL : ((1ULL << bits) - 1); }

void check_cap(int qubits, int cap) {
  if (qubits > cap) {
    throw ResourceCapError("dense state needs " + std::to_string(qubits) +
                               " qubits, cap is " + std::to_string(cap),
                           qubits);
  }
}

struct PositionBlock {
  int base = 0;
  int width = 0;
};

PositionBlock position_block(const RegisterLayout& layout, const std::vector<std::string>& regs) {
  if (regs.empty()) throw ValidationError("no position registers given");
  PositionBlock block{layout[regs.front()].offset, 0};
  int expected = block.base;
  for (const auto& name : regs) {
    const auto& r = layout[name];
    if (r.offset != expected) throw ValidationError("position registers must be consecutive");
    expected += r.size;
    block.width += r.size;
  }
  return block;
}

}  // namespace

CircuitState::CircuitState(RegisterLayout layout, int qubit_cap) : layout_(std::move(layout)) {
  check_cap(layout_.total_qubits(), qubit_cap);
  amps_.assign(std::size_t{1} << layout_.total_qubits(), Complex{0.0, 0.0});
  amps_[0] = 1.0;
}

CircuitState CircuitState::basis(RegisterLayout layout,
                                 const std::map<std::string, std::uint64_t>& values, int qubit_cap) {
  CircuitState s(std::move(layout), qubit_cap);
  std::size_t index = 0;
  for (const auto& [name, value] : values) {
    const auto& r = s.layout_[name];
    if (value > low_mask(r.size)) throw ValidationError("value does not fit register " + name);
    index |= static_cast<std::size_t>(value) << r.offset;
  }
  s.amps_[0] = 0.0;
  s.amps_[index] = 1.0;
  return s;
}

CircuitState CircuitState::from_amplitudes(RegisterLayout layout, std::vector<Complex> amplitudes,
                                           int qubit_cap) {
  CircuitState s(std::move(layout), qubit_cap);
  if (amplitudes.size() != s.amps_.size()) throw ValidationError("amplitude count mismatch");
  s.amps_ = std::move(amplitudes);
  if (std::abs(s.norm_squared() - 1.0) > 1e-10) throw ValidationError("state is not normalized");
  return s;
}

double CircuitState::norm_squared() const {
  double s = 0.0;
  for (const auto& v : amps_) s += std::norm(v);
  return s;
}

void CircuitState::apply(const Circuit& c) {
  if (c.num_qubits() > num_qubits()) throw ValidationError("circuit is wider than the state");
  for (const auto& g : c.gates()) apply(g);
}

void CircuitState::apply(const Gate& g) {
  const auto n = static_cast<std::int64_t>(amps_.size());
  auto* a = amps_.data();
  const auto bit = [](int q) { return std::int64_t{1} << q; };
  switch (g.kind) {
    case GateKind::H: {
      const auto m = bit(g.q0);
#pragma omp parallel for if (n > (1 << 18))
      for (std::int64_t i = 0; i < n; ++i) {
        if (i & m) continue;
        const Complex x = a[i], y = a[i | m];
        a[i] = (x + y) * kInvSqrt2;
        a[i | m] = (x - y) * kInvSqrt2;
      }
      break;
    }
    case GateKind::X: {
      const auto m = bit(g.q0);
#pragma omp parallel for if (n > (1 << 18))
      for (std::int64_t i = 0; i < n; ++i) {
        if (!(i & m)) std::swap(a[i], a[i | m]);
      }
      break;
    }
    case GateKind::RY: {
      const auto m = bit(g.q0);
      const double c = std::cos(g.angle / 2), s = std::sin(g.angle / 2);
#pragma omp parallel for if (n > (1 << 18))
      for (std::int64_t i = 0; i < n; ++i) {
        if (i & m) continue;
        const Complex x = a[i], y = a[i | m];
        a[i] = c * x - s * y;
        a[i | m] = s * x + c * y;
      }
      break;
    }
    case GateKind::Phase:
    case GateKind::CPhase:
    case GateKind::CCPhase: {
      std::int64_t m = bit(g.q0);
      if (g.q1 >= 0) m |= bit(g.q1);
      if (g.q2 >= 0) m |= bit(g.q2);
      const Complex f = std::polar(1.0, g.angle);
#pragma omp parallel for if (n > (1 << 18))
      for (std::int64_t i = 0; i < n; ++i) {
        if ((i & m) == m) a[i] *= f;
      }
      break;
    }
    case GateKind::CNOT: {
      const auto c = bit(g.q0), t = bit(g.q1);
#pragma omp parallel for if (n > (1 << 18))
      for (std::int64_t i = 0; i < n; ++i) {
        if ((i & c) && !(i & t)) std::swap(a[i], a[i | t]);
      }
      break;
    }
    case GateKind::Swap: {
      const auto p = bit(g.q0), q = bit(g.q1);
#pragma omp parallel for if (n > (1 << 18))
      for (std::int64_t i = 0; i < n; ++i) {
        if ((i & p) && !(i & q)) std::swap(a[i], a[(i ^ p) | q]);
      }
      break;
    }
    case GateKind::Oracle: {
      const auto& o = *g.oracle;
      const auto in_mask = low_mask(o.input.count);
      const auto out_mask = low_mask(o.target.count);
      const std::int64_t clear = ~static_cast<std::int64_t>(out_mask << o.target.offset);
      const std::int64_t ctrl = o.control >= 0 ? bit(o.control) : 0;
      std::vector<Complex> out(amps_.size());
#pragma omp parallel for if (n > (1 << 18))
      for (std::int64_t i = 0; i < n; ++i) {
        if (ctrl && !(i & ctrl)) {
          out[i] = a[i];
          continue;
        }
        const auto x = (static_cast<std::uint64_t>(i) >> o.input.offset) & in_mask;
        const auto y = (static_cast<std::uint64_t>(i) >> o.target.offset) & out_mask;
        const auto j = (i & clear) | static_cast<std::int64_t>(o.apply(x, y) << o.target.offset);
        out[j] = a[i];
      }
      amps_ = std::move(out);
      break;
    }
  }
  tally_.count(g);
}

std::vector<double> CircuitState::marginal(const std::string& reg) const {
  const auto& r = layout_[reg];
  const auto mask = low_mask(r.size);
  std::vector<double> p(std::size_t{1} << r.size, 0.0);
  for (std::size_t i = 0; i < amps_.size(); ++i) p[(i >> r.offset) & mask] += std::norm(amps_[i]);
  return p;
}

void apply_gate(CircuitState& state, const Gate& g) {
  if (g.kind != GateKind::Oracle) {
    Circuit probe(state.num_qubits());
    probe.add(g);  // validates targets
  }
  state.apply(g);
}

std::map<std::uint64_t, std::size_t> measure_register(const CircuitState& state,
                                                      const std::string& reg, std::size_t shots,
                                                      std::uint64_t seed) {
  if (shots < 1) throw ValidationError("shots must be >= 1");
  const auto p = state.marginal(reg);
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::uint64_t> dist(p.begin(), p.end());
  std::map<std::uint64_t, std::size_t> hist;
  for (std::size_t s = 0; s < shots; ++s) ++hist[dist(rng)];
  return hist;
}

CircuitState load_grid_state(const GridWavefunction& psi, const RegisterLayout& layout,
                             const std::vector<std::string>& position_regs, int qubit_cap) {
  const auto block = position_block(layout, position_regs);
  if (block.width != psi.spec().total_qubits())
    throw ValidationError("position registers must hold d*n qubits");
  for (const auto& name : position_regs) {
    if (layout[name].size != psi.spec().qubits_per_axis())
      throw ValidationError("each position register must hold n qubits");
  }
  check_cap(layout.total_qubits(), qubit_cap);
  std::vector<Complex> amps(std::size_t{1} << layout.total_qubits(), Complex{0.0, 0.0});
  for (std::size_t i = 0; i < psi.size(); ++i) amps[i << block.base] = psi[i];
  return CircuitState::from_amplitudes(layout, std::move(amps), qubit_cap);
}

namespace {

// Rows: position index; columns: remaining bits packed low-to-high.
std::vector<std::vector<Complex>> split_columns(const CircuitState& state, PositionBlock block) {
  const int rest_bits = state.num_qubits() - block.width;
  const std::size_t rows = std::size_t{1} << block.width;
  const std::size_t cols = std::size_t{1} << rest_bits;
  std::vector<std::vector<Complex>> m(cols, std::vector<Complex>(rows));
  const auto amps = state.amplitudes();
  const auto pos_mask = low_mask(block.width);
  const auto below = low_mask(block.base);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const auto pos = (i >> block.base) & pos_mask;
    const auto rest = (i & below) | ((i >> (block.base + block.width)) << block.base);
    m[rest][pos] = amps[i];
  }
  return m;
}

Extraction finish(const GridSpec& spec, std::vector<Complex> psi, double residual, double norm,
                  double tolerance) {
  const double deviation = std::max(0.0, residual) / norm;
  if (deviation > tolerance) {
    throw ContractViolation("position registers are entangled with the rest of the machine "
                            "(product deviation " + std::to_string(deviation) + ")");
  }
  return Extraction{GridWavefunction::normalized(spec, std::move(psi)), deviation};
}

}  // namespace

Extraction extract_grid_state(const CircuitState& state, const GridSpec& spec,
                              const std::vector<std::string>& position_regs, double tolerance) {
  const auto block = position_block(state.layout(), position_regs);
  if (block.width != spec.total_qubits()) throw ValidationError("grid spec does not match registers");
  const auto cols = split_columns(state, block);
  std::size_t best = 0;
  double best_norm = -1.0;
  std::vector<double> col_norm(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    double s = 0.0;
    for (const auto& v : cols[c]) s += std::norm(v);
    col_norm[c] = s;
    if (s > best_norm) best_norm = s, best = c;
  }
  std::vector<Complex> u = cols[best];
  const double un = std::sqrt(best_norm);
  for (auto& v : u) v /= un;
  double residual = 0.0;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    Complex beta{0.0, 0.0};
    for (std::size_t r = 0; r < u.size(); ++r) beta += std::conj(u[r]) * cols[c][r];
    residual += std::max(0.0, col_norm[c] - std::norm(beta));
  }
  double total = 0.0;
  for (auto n : col_norm) total += n;
  return finish(spec, std::move(u), residual, total, tolerance);
}

Extraction extract_grid_state(const CircuitState& state, const GridSpec& spec,
                              const std::vector<std::string>& position_regs,
                              std::span<const Complex> rest, double tolerance) {
  const auto block = position_block(state.layout(), position_regs);
  if (block.width != spec.total_qubits()) throw ValidationError("grid spec does not match registers");
  const auto cols = split_columns(state, block);
  if (rest.size() != cols.size()) throw ValidationError("reference state has the wrong size");
  std::vector<Complex> psi(spec.size(), Complex{0.0, 0.0});
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (rest[c] == Complex{0.0, 0.0}) continue;
    const auto w = std::conj(rest[c]);
    for (std::size_t r = 0; r < psi.size(); ++r) psi[r] += w * cols[c][r];
  }
  double kept = 0.0;
  for (const auto& v : psi) kept += std::norm(v);
  const double norm = state.norm_squared();
  return finish(spec, std::move(psi), norm - kept, norm, tolerance);
}

SparseState::SparseState(RegisterLayout layout) : layout_(std::move(layout)) {
  if (layout_.total_qubits() > kMaxQubits) {
    throw ResourceCapError("sparse state supports at most 512 qubits", layout_.total_qubits());
  }
  amps_.emplace(Key{}, Complex{1.0, 0.0});
}

SparseState SparseState::basis(RegisterLayout layout,
                               const std::map<std::string, std::uint64_t>& values) {
  SparseState s(std::move(layout));
  Key k;
  for (const auto& [name, value] : values) {
    const auto& r = s.layout_[name];
    if (value > low_mask(r.size)) throw ValidationError("value does not fit register " + name);
    write(k, r.range(), value);
  }
  s.amps_.clear();
  s.amps_.emplace(k, Complex{1.0, 0.0});
  return s;
}

SparseState SparseState::from_entries(RegisterLayout layout,
                                      const std::vector<std::pair<Key, Complex>>& entries) {
  SparseState s(std::move(layout));
  s.amps_.clear();
  double norm = 0.0;
  for (const auto& [k, a] : entries) {
    s.amps_[k] += a;
    norm += std::norm(a);
  }
  if (std::abs(norm - 1.0) > 1e-10) throw ValidationError("sparse state is not normalized");
  s.peak_terms_ = s.amps_.size();
  return s;
}

std::uint64_t SparseState::read(const Key& k, QubitRange r) {
  std::uint64_t v = 0;
  for (int i = 0; i < r.count; ++i) {
    if (k.test(r.offset + i)) v |= 1ULL << i;
  }
  return v;
}

void SparseState::write(Key& k, QubitRange r, std::uint64_t v) {
  for (int i = 0; i < r.count; ++i) k.set(r.offset + i, (v >> i) & 1ULL);
}

void SparseState::prune() {
  for (auto it = amps_.begin(); it != amps_.end();) {
    if (std::norm(it->second) < 1e-26) it = amps_.erase(it);
    else ++it;
  }
  peak_terms_ = std::max(peak_terms_, amps_.size());
}

void SparseState::apply(const Circuit& c) {
  if (c.num_qubits() > layout_.total_qubits()) throw ValidationError("circuit is wider than the state");
  for (const auto& g : c.gates()) apply(g);
}

void SparseState::apply(const Gate& g) {
  tally_.count(g);
  switch (g.kind) {
    case GateKind::H:
    case GateKind::RY: {
      const double c = g.kind == GateKind::H ? kInvSqrt2 : std::cos(g.angle / 2);
      const double s = g.kind == GateKind::H ? kInvSqrt2 : std::sin(g.angle / 2);
      std::unordered_map<Key, Complex> next;
      next.reserve(amps_.size() * 2);
      for (const auto& [k, a] : amps_) {
        Key k0 = k, k1 = k;
        k0.reset(g.q0);
        k1.set(g.q0);
        if (g.kind == GateKind::H) {
          next[k0] += a * c;
          next[k1] += k.test(g.q0) ? -a * s : a * s;
        } else if (!k.test(g.q0)) {
          next[k0] += a * c;
          next[k1] += a * s;
        } else {
          next[k0] -= a * s;
          next[k1] += a * c;
        }
      }
      amps_ = std::move(next);
      prune();
      break;
    }
    case GateKind::Phase:
    case GateKind::CPhase:
    case GateKind::CCPhase: {
      const Complex f = std::polar(1.0, g.angle);
      for (auto& [k, a] : amps_) {
        if (k.test(g.q0) && (g.q1 < 0 || k.test(g.q1)) && (g.q2 < 0 || k.test(g.q2))) a *= f;
      }
      break;
    }
    case GateKind::X:
    case GateKind::CNOT:
    case GateKind::Swap:
    case GateKind::Oracle: {
      std::unordered_map<Key, Complex> next;
      next.reserve(amps_.size());
      for (const auto& [k, a] : amps_) {
        Key nk = k;
        if (g.kind == GateKind::X) {
          nk.flip(g.q0);
        } else if (g.kind == GateKind::CNOT) {
          if (k.test(g.q0)) nk.flip(g.q1);
        } else if (g.kind == GateKind::Swap) {
          nk.set(g.q0, k.test(g.q1));
          nk.set(g.q1, k.test(g.q0));
        } else {
          const auto& o = *g.oracle;
          if (o.control < 0 || k.test(o.control)) write(nk, o.target, o.apply(read(k, o.input), read(k, o.target)));
        }
        next.emplace(nk, a);
      }
      amps_ = std::move(next);
      break;
    }
  }
}

std::uint64_t SparseState::register_value(const std::string& reg, double tolerance) const {
  const auto& r = layout_[reg];
  const Key* best = nullptr;
  double best_p = -1.0;
  for (const auto& [k, a] : amps_) {
    if (std::norm(a) > best_p) best_p = std::norm(a), best = &k;
  }
  if (best == nullptr || std::abs(best_p - 1.0) > tolerance) {
    throw ContractViolation("sparse state is not a single basis state (peak probability " +
                            std::to_string(best_p) + ")");
  }
  return read(*best, r.range());
}

Complex SparseState::basis_amplitude(double tolerance) const {
  for (const auto& [k, a] : amps_) {
    if (std::abs(std::norm(a) - 1.0) <= tolerance) return a;
  }
  throw ContractViolation("sparse state is not a single basis state");
}

}  // namespace qdyn
