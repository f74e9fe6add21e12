#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qdyn/circuit.hpp"

namespace qdyn {

/// m-bit unsigned fixed-point encoding, value = count * scale.
struct FixedPointSpec {
  int m = 8;
  double scale = 1.0;

  FixedPointSpec() = default;
  FixedPointSpec(int bits, double units_per_count = 1.0);

  std::uint64_t modulus() const { return std::uint64_t{1} << m; }
  std::uint64_t max_value() const { return modulus() - 1; }
  /// Time step that makes one count of phase equal 2 pi / M.
  double dt() const;
  /// round(value / scale); DomainError outside [0, M-1] or non-finite.
  std::uint64_t encode(double value) const;
  double decode(std::uint64_t count) const { return static_cast<double>(count) * scale; }
};

using ArithmeticCircuit = CircuitBuilder;

// Ledger operation names. Primitive blocks are charged at model price,
// everything else at its measured rotation-class count under kHelper.
inline constexpr const char* kLedgerQftPair = "qft_pair";
inline constexpr const char* kLedgerAdd = "add";
inline constexpr const char* kLedgerControlledAdd = "cadd";
inline constexpr const char* kLedgerTruncatedAdd = "cadd_truncated";
inline constexpr const char* kLedgerHelper = "helper";

// --- Fourier-space emitters (no ledger charges) ---------------------------

/// Target must be in the no-swap Fourier layout of append_qft(.., false).
/// Adds weight * 2^shift * value(addend) modulo 2^{target.count}; with a
/// control, the addition only happens when that qubit is 1. A control that
/// coincides with an addend bit collapses the doubly-controlled phase to a
/// controlled phase (used for squaring).
void emit_phase_add(Circuit& c, QubitRange addend, QubitRange target, std::int64_t weight,
                    int shift = 0, int control = -1);
/// Adds a classical constant (optionally controlled) in Fourier space.
void emit_phase_add_constant(Circuit& c, std::uint64_t constant, QubitRange target,
                             int control = -1);

// --- Ledger-charged blocks ------------------------------------------------

/// b <- (b + sign * a) mod 2^{|b|}. Addend may be narrower than b.
void append_draper_add(Circuit& c, QubitRange a, QubitRange b, int sign = 1);
/// b <- (b + weight * a) mod 2^{|b|}.
void append_weighted_add(Circuit& c, QubitRange a, QubitRange b, std::int64_t weight);
/// b <- b + a iff control is 1.
void append_controlled_add(Circuit& c, int control, QubitRange a, QubitRange b);
/// acc <- (acc + x * y) mod 2^{|acc|}. Schoolbook: one controlled shifted
/// addition per bit of y inside a single Fourier frame on acc. When x and y
/// are the same register the product is a square.
void append_product_add(Circuit& c, QubitRange x, QubitRange y, QubitRange acc);
/// Two's-complement magnitude in place; `sign` (zeroed) receives the sign.
void append_abs(Circuit& c, QubitRange v, int sign);
/// target ^= source, bitwise.
void append_copy(Circuit& c, QubitRange source, QubitRange target);

// --- Standalone circuits (layouts used by tests and the audit) ------------

/// Registers a, b (m each): b <- a + b.
ArithmeticCircuit make_adder(int m);
/// Registers ctrl (1), a, b: b <- b + ctrl * a.
ArithmeticCircuit make_controlled_adder(int m);
/// Registers a, b, lo (shift), out (m) with lo and out adjacent:
/// out <- (a * b >> shift) mod 2^m. shift defaults to m (keep the top half).
ArithmeticCircuit make_multiplier(int m, int shift = -1);
/// Registers a, lo, out: out <- (a^2 >> shift) mod 2^m.
ArithmeticCircuit make_squarer(int m, int shift = -1);

/// Registers for the separation of two particles in d dimensions.
struct RSquaredScratch {
  std::vector<QubitRange> delta;  // per-axis |x_j - x_i|
  std::vector<int> sign;
  QubitRange acc;                 // 2m accumulator
  QubitRange result() const;      // top m bits of acc
};
RSquaredScratch allocate_r_squared(CircuitBuilder& b, int m, int dims, const std::string& prefix);
/// S <- (sum_a d_a^2) >> m, coordinates unsigned Q0.m. d_a is the
/// minimum-image separation min(|x_j,a - x_i,a|, 2^m - |x_j,a - x_i,a|):
/// the m-bit difference register wraps, matching the periodic grid.
void emit_r_squared(Circuit& c, const RSquaredScratch& s, const std::vector<QubitRange>& xi,
                    const std::vector<QubitRange>& xj);
/// Registers xi0.., xj0.. (m each), then scratch; result register "S".
ArithmeticCircuit make_r_squared(int m, int dims);

/// Fixed-point layout for Newton-Raphson: S is Q0.m, x is Q(ix).(m-ix).
/// Requires m >= 2*ix + 1.
int default_integer_bits(int m);

struct InvSqrtScratch {
  int m = 0;
  int ix = 0;
  std::vector<int> flag;  // one-hot MSB selectors, from e = m-1 downward
  std::vector<int> seen;  // running OR of S bits above e
  QubitRange x0;
  struct Iteration {
    QubitRange t1_acc, t2_acc, t3, x_acc;
  };
  std::vector<Iteration> iter;
  QubitRange result() const;
};
inline constexpr int kNewtonIterations = 4;
InvSqrtScratch allocate_inv_sqrt(CircuitBuilder& b, int m, int ix, const std::string& prefix,
                                 int iterations = kNewtonIterations);
void emit_inv_sqrt(Circuit& c, const InvSqrtScratch& s, QubitRange S);
/// Registers S then scratch; result register "x".
ArithmeticCircuit make_inv_sqrt(int m, int ix = -1, int iterations = kNewtonIterations);

struct CoulombOptions {
  int ix = -1;           // Newton-Raphson integer bits; -1 picks default_integer_bits
  bool uncompute = false;
};
/// out <- out + sum_{i<j} q_i q_j * X(r_ij) mod 2^m, where X is the
/// Q(ix).(m-ix) Newton-Raphson estimate of 1/r_ij with positions read as
/// unsigned Q0.m fractions. With `uncompute`, every pair's scratch is
/// returned to |0> (and reused by the next pair); otherwise each pair leaves
/// its intermediate registers behind.
void append_coulomb(CircuitBuilder& b, const std::vector<std::vector<QubitRange>>& positions,
                    const std::vector<std::int64_t>& charges, QubitRange out,
                    const CoulombOptions& opt = {});
/// Registers p{i}_{a} for B particles x d axes, then "out", then scratch.
ArithmeticCircuit make_coulomb(int m, int particles, int dims, const std::vector<std::int64_t>& charges,
                               const CoulombOptions& opt = {});

/// out <- out + sum_a w_a * floor(k_a^2 / 2^shift) mod 2^{|out|}, with each
/// k_a read as an n-bit two's-complement frequency. Always uncomputes its
/// scratch and restores the momentum registers.
void append_kinetic(CircuitBuilder& b, const std::vector<QubitRange>& momentum,
                    const std::vector<std::int64_t>& weights, int shift, QubitRange out);
/// Registers k0.. (n each), "out" (m), then scratch.
ArithmeticCircuit make_kinetic(int n, int m, int dims, const std::vector<std::int64_t>& weights,
                               int shift);

/// Integer reference implementations; bit-exact mirrors of the circuits.
namespace oracle {

std::uint64_t mask(int bits);
std::uint64_t add(std::uint64_t a, std::uint64_t b, int m);
std::uint64_t sub(std::uint64_t b, std::uint64_t a, int m);
std::uint64_t controlled_add(bool control, std::uint64_t a, std::uint64_t b, int m);
/// (a * b >> shift) mod 2^m.
std::uint64_t product(std::uint64_t a, std::uint64_t b, int shift, int m);
std::uint64_t abs_twos(std::uint64_t v, int bits);
std::uint64_t r_squared(const std::vector<std::uint64_t>& xi, const std::vector<std::uint64_t>& xj,
                        int m);
/// Most significant set bit position, clamped to the seed table.
int seed_exponent(std::uint64_t S, int m, int ix);
std::uint64_t seed_value(int e, int m, int ix);
std::uint64_t newton_step(std::uint64_t S, std::uint64_t x, int m, int ix);
/// Raw iteration from the seed (no domain check).
std::uint64_t inv_sqrt_raw(std::uint64_t S, int m, int ix, int iterations = kNewtonIterations);
/// Checked variant: DomainError for S = 0.
std::uint64_t inv_sqrt(std::uint64_t S, int m, int ix, int iterations = kNewtonIterations);
/// Every iterate, seed first.
std::vector<std::uint64_t> inv_sqrt_trace(std::uint64_t S, int m, int ix,
                                          int iterations = kNewtonIterations);
std::uint64_t coulomb(const std::vector<std::vector<std::uint64_t>>& positions,
                      const std::vector<std::int64_t>& charges, int m, int ix);
std::uint64_t kinetic(const std::vector<std::uint64_t>& k, int n,
                      const std::vector<std::int64_t>& weights, int shift, int m);

}  // namespace oracle

enum class ArithKind { Adder, ControlledAdder, Multiply, Square, RSquared, InvSqrt, Coulomb };

std::string to_string(ArithKind kind);
ArithKind parse_arith_kind(const std::string& name);
/// Closed-form cost in quarter gates.
std::int64_t formula_quarter_gates(ArithKind kind, int m);

struct AuditRow {
  ArithKind kind;
  int m = 0;
  double measured = 0.0;   // ledger total, helpers included
  double model = 0.0;      // ledger total without helpers
  double formula = 0.0;
  double ratio = 0.0;      // measured / formula
  std::int64_t elementary_rotation_class = 0;
  std::int64_t qubits = 0;
};

/// Builds the circuit for `kind` at width m (count only, no simulation).
/// Coulomb is audited for one pair in three dimensions.
AuditRow audit_counts(ArithKind kind, int m);
void write_audit_csv(std::ostream& out, const std::vector<AuditRow>& rows);

}  // namespace qdyn
