#include "qdyn/arith.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>

#include "qdyn/errors.hpp"

namespace qdyn {

namespace {

using u128 = unsigned __int128;

bool overlaps(QubitRange a, QubitRange b) {
  return a.offset < b.offset + b.count && b.offset < a.offset + a.count;
}

void require_disjoint(QubitRange a, QubitRange b, const char* what) {
  if (overlaps(a, b)) throw ValidationError(std::string(what) + ": registers overlap");
}

void require_width(QubitRange r, const char* what) {
  if (r.count < 1 || r.count > 64) throw ValidationError(std::string(what) + ": width out of range");
}

std::int64_t sq(std::int64_t m) { return m * m; }

// Charges whatever `emit` adds at its measured rotation-class count.
template <class F>
void helper(Circuit& c, int width, F&& emit) {
  const auto before = c.tally().rotation_class();
  emit();
  c.ledger().charge(kLedgerHelper, width, 4 * (c.tally().rotation_class() - before));
}

void charge_product(Circuit& c, int m) {
  c.ledger().charge(kLedgerQftPair, m, 4 * sq(m));
  for (int k = 0; k < m; ++k) c.ledger().charge(kLedgerTruncatedAdd, m, 5 * sq(m));
}

void emit_square_into(Circuit& c, QubitRange x, QubitRange acc) {
  for (int k = 0; k < x.count; ++k) emit_phase_add(c, x, acc, 1, k, x.qubit(k));
}

void load_constant(Circuit& c, std::uint64_t value, QubitRange r) {
  for (int b = 0; b < r.count; ++b) {
    if ((value >> b) & 1ULL) c.x(r.qubit(b));
  }
}

}  // namespace

FixedPointSpec::FixedPointSpec(int bits, double units_per_count) : m(bits), scale(units_per_count) {
  if (m < 1 || m > 62) throw ValidationError("fixed-point width must be in [1, 62]");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ValidationError("fixed-point scale must be positive");
}

double FixedPointSpec::dt() const { return 2.0 * std::numbers::pi / static_cast<double>(modulus()); }

std::uint64_t FixedPointSpec::encode(double value) const {
  if (!std::isfinite(value)) throw DomainError("cannot encode a non-finite value");
  const double counts = std::round(value / scale);
  if (counts < 0.0 || counts > static_cast<double>(max_value()))
    throw DomainError("value " + std::to_string(value) + " outside the encodable range");
  return static_cast<std::uint64_t>(counts);
}

void emit_phase_add(Circuit& c, QubitRange addend, QubitRange target, std::int64_t weight, int shift,
                    int control) {
  require_width(target, "phase add");
  const u128 w = static_cast<u128>(static_cast<__int128>(weight));
  for (int j = 0; j < target.count; ++j) {
    const u128 mod = u128{1} << (j + 1);
    for (int i = 0; i < addend.count; ++i) {
      if (i + shift >= 128) break;
      const u128 v = (w << (i + shift)) & (mod - 1);
      if (v == 0) continue;
      const double frac = v > mod / 2 ? -static_cast<double>(mod - v) : static_cast<double>(v);
      const double angle = 2.0 * std::numbers::pi * std::ldexp(frac, -(j + 1));
      const int a = addend.qubit(i), t = target.qubit(j);
      if (control < 0) c.cphase(a, t, angle);
      else if (control == a) c.cphase(control, t, angle);
      else c.ccphase(control, a, t, angle);
    }
  }
}

void emit_phase_add_constant(Circuit& c, std::uint64_t constant, QubitRange target, int control) {
  require_width(target, "constant add");
  for (int j = 0; j < target.count; ++j) {
    const u128 mod = u128{1} << (j + 1);
    const u128 v = static_cast<u128>(constant) & (mod - 1);
    if (v == 0) continue;
    const double frac = v > mod / 2 ? -static_cast<double>(mod - v) : static_cast<double>(v);
    const double angle = 2.0 * std::numbers::pi * std::ldexp(frac, -(j + 1));
    if (control < 0) c.phase(target.qubit(j), angle);
    else c.cphase(control, target.qubit(j), angle);
  }
}

void append_draper_add(Circuit& c, QubitRange a, QubitRange b, int sign) {
  if (sign != 1 && sign != -1) throw ValidationError("adder sign must be +1 or -1");
  append_weighted_add(c, a, b, sign);
}

void append_weighted_add(Circuit& c, QubitRange a, QubitRange b, std::int64_t weight) {
  require_width(a, "adder");
  require_width(b, "adder");
  require_disjoint(a, b, "adder");
  append_qft(c, b, false);
  emit_phase_add(c, a, b, weight);
  append_iqft(c, b, false);
  c.ledger().charge(kLedgerAdd, b.count, 6 * sq(b.count));
}

void append_controlled_add(Circuit& c, int control, QubitRange a, QubitRange b) {
  require_width(a, "controlled adder");
  require_width(b, "controlled adder");
  require_disjoint(a, b, "controlled adder");
  if (a.contains(control) || b.contains(control))
    throw ValidationError("controlled adder: control lies inside an operand");
  append_qft(c, b, false);
  emit_phase_add(c, a, b, 1, 0, control);
  append_iqft(c, b, false);
  c.ledger().charge(kLedgerQftPair, b.count, 4 * sq(b.count));
  c.ledger().charge(kLedgerControlledAdd, b.count, 10 * sq(b.count));
}

void append_product_add(Circuit& c, QubitRange x, QubitRange y, QubitRange acc) {
  require_width(x, "multiplier");
  require_width(y, "multiplier");
  require_width(acc, "multiplier");
  require_disjoint(x, acc, "multiplier");
  require_disjoint(y, acc, "multiplier");
  const bool square = x.offset == y.offset && x.count == y.count;
  if (!square && overlaps(x, y)) throw ValidationError("multiplier: operands partially overlap");
  append_qft(c, acc, false);
  for (int k = 0; k < y.count; ++k) emit_phase_add(c, x, acc, 1, k, y.qubit(k));
  append_iqft(c, acc, false);
  charge_product(c, y.count);
}

void append_abs(Circuit& c, QubitRange v, int sign) {
  require_width(v, "abs");
  if (v.contains(sign)) throw ValidationError("abs: sign qubit inside the value register");
  helper(c, v.count, [&] {
    c.cnot(v.qubit(v.count - 1), sign);
    for (int j = 0; j < v.count; ++j) c.cnot(sign, v.qubit(j));
    append_qft(c, v, false);
    emit_phase_add_constant(c, 1, v, sign);
    append_iqft(c, v, false);
  });
}

void append_copy(Circuit& c, QubitRange source, QubitRange target) {
  if (source.count != target.count) throw ValidationError("copy: width mismatch");
  require_disjoint(source, target, "copy");
  helper(c, source.count, [&] {
    for (int j = 0; j < source.count; ++j) c.cnot(source.qubit(j), target.qubit(j));
  });
}

ArithmeticCircuit make_adder(int m) {
  ArithmeticCircuit b;
  const auto a = b.allocate("a", m).range();
  const auto t = b.allocate("b", m).range();
  append_draper_add(b.circuit, a, t);
  return b;
}

ArithmeticCircuit make_controlled_adder(int m) {
  ArithmeticCircuit b;
  const int ctrl = b.allocate("ctrl", 1).offset;
  const auto a = b.allocate("a", m).range();
  const auto t = b.allocate("b", m).range();
  append_controlled_add(b.circuit, ctrl, a, t);
  return b;
}

namespace {

QubitRange allocate_window(CircuitBuilder& b, const std::string& low, const std::string& out, int shift,
                           int m) {
  int offset = b.layout.total_qubits();
  if (shift > 0) b.allocate(low, shift);
  b.allocate(out, m);
  return QubitRange{offset, shift + m};
}

}  // namespace

ArithmeticCircuit make_multiplier(int m, int shift) {
  if (shift < 0) shift = m;
  ArithmeticCircuit b;
  const auto x = b.allocate("a", m).range();
  const auto y = b.allocate("b", m).range();
  const auto acc = allocate_window(b, "lo", "out", shift, m);
  append_product_add(b.circuit, x, y, acc);
  return b;
}

ArithmeticCircuit make_squarer(int m, int shift) {
  if (shift < 0) shift = m;
  ArithmeticCircuit b;
  const auto x = b.allocate("a", m).range();
  const auto acc = allocate_window(b, "lo", "out", shift, m);
  append_product_add(b.circuit, x, x, acc);
  return b;
}

QubitRange RSquaredScratch::result() const { return QubitRange{acc.offset + acc.count / 2, acc.count / 2}; }

RSquaredScratch allocate_r_squared(CircuitBuilder& b, int m, int dims, const std::string& prefix) {
  if (dims < 1) throw ValidationError("r^2 needs at least one axis");
  RSquaredScratch s;
  for (int a = 0; a < dims; ++a) {
    s.delta.push_back(b.allocate(prefix + "d" + std::to_string(a), m).range());
    s.sign.push_back(b.allocate(prefix + "s" + std::to_string(a), 1).offset);
  }
  s.acc = allocate_window(b, prefix + "S_lo", prefix + "S", m, m);
  return s;
}

void emit_r_squared(Circuit& c, const RSquaredScratch& s, const std::vector<QubitRange>& xi,
                    const std::vector<QubitRange>& xj) {
  if (xi.size() != s.delta.size() || xj.size() != s.delta.size())
    throw ValidationError("r^2: coordinate count mismatch");
  const int m = s.acc.count / 2;
  for (std::size_t a = 0; a < s.delta.size(); ++a) {
    if (xi[a].count != m || xj[a].count != m) throw ValidationError("r^2: coordinate width mismatch");
    append_copy(c, xj[a], s.delta[a]);
    append_draper_add(c, xi[a], s.delta[a], -1);
    append_abs(c, s.delta[a], s.sign[a]);
  }
  append_qft(c, s.acc, false);
  for (const auto& d : s.delta) {
    emit_square_into(c, d, s.acc);
    charge_product(c, m);
  }
  append_iqft(c, s.acc, false);
}

ArithmeticCircuit make_r_squared(int m, int dims) {
  ArithmeticCircuit b;
  std::vector<QubitRange> xi, xj;
  for (int a = 0; a < dims; ++a) xi.push_back(b.allocate("xi" + std::to_string(a), m).range());
  for (int a = 0; a < dims; ++a) xj.push_back(b.allocate("xj" + std::to_string(a), m).range());
  const auto s = allocate_r_squared(b, m, dims, "");
  emit_r_squared(b.circuit, s, xi, xj);
  return b;
}

int default_integer_bits(int m) {
  if (m < 3) throw ValidationError("Newton-Raphson needs m >= 3");
  return m >= 5 ? 2 : 1;
}

QubitRange InvSqrtScratch::result() const {
  if (iter.empty()) return x0;
  const auto& last = iter.back().x_acc;
  return QubitRange{last.offset + last.count - m, m};
}

InvSqrtScratch allocate_inv_sqrt(CircuitBuilder& b, int m, int ix, const std::string& prefix,
                                 int iterations) {
  if (ix < 1 || m < 2 * ix + 1) throw ValidationError("Newton-Raphson needs 1 <= ix and m >= 2 ix + 1");
  if (iterations < 0) throw ValidationError("iteration count must be non-negative");
  InvSqrtScratch s;
  s.m = m;
  s.ix = ix;
  const int levels = 2 * ix;
  for (int k = 0; k < levels; ++k) s.flag.push_back(b.allocate(prefix + "f" + std::to_string(k), 1).offset);
  for (int k = 0; k + 2 < levels; ++k)
    s.seen.push_back(b.allocate(prefix + "seen" + std::to_string(k), 1).offset);
  s.x0 = b.allocate(prefix + (iterations == 0 ? "x" : "x0"), m).range();
  const int sh = m - 2 * ix + 1;
  for (int it = 0; it < iterations; ++it) {
    const auto tag = prefix + "nr" + std::to_string(it) + "_";
    InvSqrtScratch::Iteration r;
    r.t1_acc = allocate_window(b, tag + "t1_lo", tag + "t1", m, m);
    r.t2_acc = allocate_window(b, tag + "t2_lo", tag + "t2", m, m);
    r.t3 = b.allocate(tag + "t3", m).range();
    const bool last = it + 1 == iterations;
    r.x_acc = allocate_window(b, tag + "x_lo", last ? prefix + "x" : prefix + "x" + std::to_string(it + 1),
                              sh, m);
    s.iter.push_back(r);
  }
  return s;
}

void emit_inv_sqrt(Circuit& c, const InvSqrtScratch& s, QubitRange S) {
  const int m = s.m;
  if (S.count != m) throw ValidationError("inv_sqrt: S width mismatch");
  const int levels = static_cast<int>(s.flag.size());
  helper(c, m, [&] {
    // One-hot flag for the most significant set bit of S; the last flag
    // catches everything at or below e_min.
    c.cnot(S.qubit(m - 1), s.flag[0]);
    int prev = S.qubit(m - 1);
    for (int k = 1; k + 1 < levels; ++k) {
      const int e = m - 1 - k;
      c.x(prev);
      c.toffoli(S.qubit(e), prev, s.flag[k]);
      c.x(prev);
      c.cnot(prev, s.seen[k - 1]);
      c.cnot(s.flag[k], s.seen[k - 1]);
      prev = s.seen[k - 1];
    }
    c.x(s.flag[levels - 1]);
    c.cnot(prev, s.flag[levels - 1]);
    for (int k = 0; k < levels; ++k) {
      const auto seed = oracle::seed_value(m - 1 - k, m, s.ix);
      for (int bit = 0; bit < m; ++bit) {
        if ((seed >> bit) & 1ULL) c.cnot(s.flag[k], s.x0.qubit(bit));
      }
    }
  });
  const std::uint64_t three = std::uint64_t{3} << (m - 2 * s.ix);
  QubitRange x = s.x0;
  for (const auto& r : s.iter) {
    append_product_add(c, x, x, r.t1_acc);
    const QubitRange t1{r.t1_acc.offset + m, m};
    append_product_add(c, S, t1, r.t2_acc);
    const QubitRange t2{r.t2_acc.offset + m, m};
    load_constant(c, three, r.t3);
    append_draper_add(c, t2, r.t3, -1);
    append_product_add(c, x, r.t3, r.x_acc);
    x = QubitRange{r.x_acc.offset + r.x_acc.count - m, m};
  }
}

ArithmeticCircuit make_inv_sqrt(int m, int ix, int iterations) {
  if (ix < 0) ix = default_integer_bits(m);
  ArithmeticCircuit b;
  const auto S = b.allocate("S", m).range();
  const auto s = allocate_inv_sqrt(b, m, ix, "", iterations);
  emit_inv_sqrt(b.circuit, s, S);
  return b;
}

void append_coulomb(CircuitBuilder& b, const std::vector<std::vector<QubitRange>>& positions,
                    const std::vector<std::int64_t>& charges, QubitRange out, const CoulombOptions& opt) {
  const auto B = positions.size();
  if (B < 2) throw ValidationError("Coulomb oracle needs at least two particles");
  if (charges.size() != B) throw ValidationError("Coulomb oracle: one charge per particle");
  const auto dims = static_cast<int>(positions.front().size());
  const int m = out.count;
  for (const auto& p : positions) {
    if (static_cast<int>(p.size()) != dims) throw ValidationError("Coulomb oracle: ragged positions");
    for (const auto& r : p) {
      if (r.count != m) throw ValidationError("Coulomb oracle: position width must equal m");
    }
  }
  const int ix = opt.ix < 0 ? default_integer_bits(m) : opt.ix;

  struct Scratch {
    RSquaredScratch r2;
    InvSqrtScratch nr;
  };
  auto allocate = [&](const std::string& prefix) {
    Scratch s;
    s.r2 = allocate_r_squared(b, m, dims, prefix);
    s.nr = allocate_inv_sqrt(b, m, ix, prefix);
    return s;
  };
  std::optional<Scratch> shared;
  if (opt.uncompute) shared = allocate("c_");

  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = i + 1; j < B; ++j) {
      const auto s = shared ? *shared : allocate("c" + std::to_string(i) + "_" + std::to_string(j) + "_");
      Circuit compute(b.layout.total_qubits());
      emit_r_squared(compute, s.r2, positions[i], positions[j]);
      emit_inv_sqrt(compute, s.nr, s.r2.result());
      b.circuit.resize(b.layout.total_qubits());
      b.circuit.append(compute);
      append_weighted_add(b.circuit, s.nr.result(), out, charges[i] * charges[j]);
      if (opt.uncompute) b.circuit.append(compute.inverse());
    }
  }
}

ArithmeticCircuit make_coulomb(int m, int particles, int dims, const std::vector<std::int64_t>& charges,
                               const CoulombOptions& opt) {
  ArithmeticCircuit b;
  std::vector<std::vector<QubitRange>> pos(particles);
  for (int i = 0; i < particles; ++i) {
    for (int a = 0; a < dims; ++a)
      pos[i].push_back(b.allocate("p" + std::to_string(i) + "_" + std::to_string(a), m).range());
  }
  const auto out = b.allocate("out", m).range();
  append_coulomb(b, pos, charges, out, opt);
  return b;
}

void append_kinetic(CircuitBuilder& b, const std::vector<QubitRange>& momentum,
                    const std::vector<std::int64_t>& weights, int shift, QubitRange out) {
  if (momentum.empty()) throw ValidationError("kinetic oracle needs at least one momentum register");
  if (weights.size() != momentum.size()) throw ValidationError("kinetic oracle: one weight per axis");
  const int n = momentum.front().count;
  if (shift < 0 || shift >= 2 * n) throw ValidationError("kinetic oracle: shift must lie in [0, 2n)");
  std::vector<int> sign;
  std::vector<QubitRange> square;
  for (std::size_t a = 0; a < momentum.size(); ++a) {
    if (momentum[a].count != n) throw ValidationError("kinetic oracle: momentum widths differ");
    sign.push_back(b.allocate("kin_s" + std::to_string(a), 1).offset);
    square.push_back(b.allocate("kin_sq" + std::to_string(a), 2 * n).range());
  }
  Circuit compute(b.layout.total_qubits());
  for (std::size_t a = 0; a < momentum.size(); ++a) {
    append_abs(compute, momentum[a], sign[a]);
    append_product_add(compute, momentum[a], momentum[a], square[a]);
  }
  b.circuit.resize(b.layout.total_qubits());
  b.circuit.append(compute);
  for (std::size_t a = 0; a < momentum.size(); ++a) {
    if (weights[a] == 0) continue;
    const QubitRange window{square[a].offset + shift, 2 * n - shift};
    append_weighted_add(b.circuit, window, out, weights[a]);
  }
  b.circuit.append(compute.inverse());
}

ArithmeticCircuit make_kinetic(int n, int m, int dims, const std::vector<std::int64_t>& weights, int shift) {
  ArithmeticCircuit b;
  std::vector<QubitRange> k;
  for (int a = 0; a < dims; ++a) k.push_back(b.allocate("k" + std::to_string(a), n).range());
  const auto out = b.allocate("out", m).range();
  append_kinetic(b, k, weights, shift, out);
  return b;
}

namespace oracle {

std::uint64_t mask(int bits) { return bits >= 64 ? ~0ULL : ((std::uint64_t{1} << bits) - 1); }

std::uint64_t add(std::uint64_t a, std::uint64_t b, int m) { return (a + b) & mask(m); }

std::uint64_t sub(std::uint64_t b, std::uint64_t a, int m) { return (b - a) & mask(m); }

std::uint64_t controlled_add(bool control, std::uint64_t a, std::uint64_t b, int m) {
  return control ? add(a, b, m) : (b & mask(m));
}

std::uint64_t product(std::uint64_t a, std::uint64_t b, int shift, int m) {
  const u128 p = static_cast<u128>(a) * b;
  return static_cast<std::uint64_t>(p >> shift) & mask(m);
}

std::uint64_t abs_twos(std::uint64_t v, int bits) {
  v &= mask(bits);
  return ((v >> (bits - 1)) & 1ULL) ? ((0 - v) & mask(bits)) : v;
}

std::uint64_t r_squared(const std::vector<std::uint64_t>& xi, const std::vector<std::uint64_t>& xj, int m) {
  if (xi.size() != xj.size()) throw ValidationError("r^2 oracle: coordinate count mismatch");
  u128 acc = 0;
  for (std::size_t a = 0; a < xi.size(); ++a) {
    const u128 d = abs_twos(sub(xj[a], xi[a], m), m);
    acc += d * d;
  }
  const u128 wide = acc & ((u128{1} << (2 * m)) - 1);
  return static_cast<std::uint64_t>(wide >> m);
}

int seed_exponent(std::uint64_t S, int m, int ix) {
  const int e_min = m - 2 * ix;
  if (S == 0) return e_min;
  const int msb = 63 - std::countl_zero(S);
  return msb > e_min ? msb : e_min;
}

std::uint64_t seed_value(int e, int m, int ix) {
  const double v = 0.8 * std::pow(2.0, 0.5 * (m - e)) * std::ldexp(1.0, m - ix);
  return static_cast<std::uint64_t>(std::floor(v)) & mask(m);
}

std::uint64_t newton_step(std::uint64_t S, std::uint64_t x, int m, int ix) {
  const auto t1 = product(x, x, m, m);
  const auto t2 = product(S, t1, m, m);
  const auto t3 = sub(std::uint64_t{3} << (m - 2 * ix), t2, m);
  return product(x, t3, m - 2 * ix + 1, m);
}

std::vector<std::uint64_t> inv_sqrt_trace(std::uint64_t S, int m, int ix, int iterations) {
  if (ix < 1 || m < 2 * ix + 1) throw ValidationError("Newton-Raphson needs 1 <= ix and m >= 2 ix + 1");
  std::vector<std::uint64_t> xs{seed_value(seed_exponent(S, m, ix), m, ix)};
  for (int it = 0; it < iterations; ++it) xs.push_back(newton_step(S, xs.back(), m, ix));
  return xs;
}

std::uint64_t inv_sqrt_raw(std::uint64_t S, int m, int ix, int iterations) {
  return inv_sqrt_trace(S, m, ix, iterations).back();
}

std::uint64_t inv_sqrt(std::uint64_t S, int m, int ix, int iterations) {
  if (S == 0) throw DomainError("inverse square root of zero separation");
  return inv_sqrt_raw(S, m, ix, iterations);
}

std::uint64_t coulomb(const std::vector<std::vector<std::uint64_t>>& positions,
                      const std::vector<std::int64_t>& charges, int m, int ix) {
  if (charges.size() != positions.size()) throw ValidationError("Coulomb oracle: one charge per particle");
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      const auto x = inv_sqrt_raw(r_squared(positions[i], positions[j], m), m, ix);
      acc = (acc + static_cast<std::uint64_t>(charges[i] * charges[j]) * x) & mask(m);
    }
  }
  return acc;
}

std::uint64_t kinetic(const std::vector<std::uint64_t>& k, int n, const std::vector<std::int64_t>& weights,
                      int shift, int m) {
  if (weights.size() != k.size()) throw ValidationError("kinetic oracle: one weight per axis");
  std::uint64_t acc = 0;
  for (std::size_t a = 0; a < k.size(); ++a) {
    const auto mag = abs_twos(k[a], n);
    acc = (acc + static_cast<std::uint64_t>(weights[a]) * ((mag * mag) >> shift)) & mask(m);
  }
  return acc;
}

}  // namespace oracle

std::string to_string(ArithKind kind) {
  switch (kind) {
    case ArithKind::Adder: return "adder";
    case ArithKind::ControlledAdder: return "controlled_adder";
    case ArithKind::Multiply: return "multiply";
    case ArithKind::Square: return "square";
    case ArithKind::RSquared: return "r_squared";
    case ArithKind::InvSqrt: return "inv_sqrt";
    case ArithKind::Coulomb: return "coulomb";
  }
  return "?";
}

ArithKind parse_arith_kind(const std::string& name) {
  for (auto k : {ArithKind::Adder, ArithKind::ControlledAdder, ArithKind::Multiply, ArithKind::Square,
                 ArithKind::RSquared, ArithKind::InvSqrt, ArithKind::Coulomb}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown arithmetic circuit kind '" + name + "'");
}

std::int64_t formula_quarter_gates(ArithKind kind, int m) {
  const std::int64_t m2 = sq(m), m3 = m2 * m;
  switch (kind) {
    case ArithKind::Adder: return 6 * m2;
    case ArithKind::ControlledAdder: return 10 * m2;
    case ArithKind::Multiply:
    case ArithKind::Square: return 5 * m3 + 4 * m2;
    case ArithKind::RSquared: return 15 * m3 + 30 * m2;
    case ArithKind::InvSqrt: return 60 * m3 + 72 * m2;
    case ArithKind::Coulomb: return 75 * m3 + 102 * m2;
  }
  return 0;
}

AuditRow audit_counts(ArithKind kind, int m) {
  if (m < 2 || m > 32) throw ValidationError("audit width must lie in [2, 32]");
  ArithmeticCircuit c = [&] {
    switch (kind) {
      case ArithKind::Adder: return make_adder(m);
      case ArithKind::ControlledAdder: return make_controlled_adder(m);
      case ArithKind::Multiply: return make_multiplier(m);
      case ArithKind::Square: return make_squarer(m);
      case ArithKind::RSquared: return make_r_squared(m, 3);
      case ArithKind::InvSqrt: return make_inv_sqrt(m);
      case ArithKind::Coulomb: return make_coulomb(m, 2, 3, {1, 1});
    }
    throw ValidationError("unknown arithmetic kind");
  }();
  const auto& ledger = c.circuit.ledger();
  std::int64_t measured = ledger.quarter_total();
  // The controlled adder's Fourier frame is shared by a whole multiplication,
  // so the stand-alone figure leaves it out.
  if (kind == ArithKind::ControlledAdder) measured -= ledger.quarter_total(kLedgerQftPair);
  const std::int64_t model = measured - ledger.quarter_total(kLedgerHelper);
  const std::int64_t formula = formula_quarter_gates(kind, m);
  AuditRow row{kind, m};
  row.measured = measured / 4.0;
  row.model = model / 4.0;
  row.formula = formula / 4.0;
  row.ratio = static_cast<double>(measured) / static_cast<double>(formula);
  row.elementary_rotation_class = c.circuit.tally().rotation_class();
  row.qubits = c.layout.total_qubits();
  return row;
}

void write_audit_csv(std::ostream& out, const std::vector<AuditRow>& rows) {
  out << "kind,m,measured,formula,ratio,model,elementary_rotation_class,qubits\n";
  for (const auto& r : rows) {
    out << to_string(r.kind) << ',' << r.m << ',' << r.measured << ',' << r.formula << ',' << r.ratio << ','
        << r.model << ',' << r.elementary_rotation_class << ',' << r.qubits << '\n';
  }
}

}  // namespace qdyn
