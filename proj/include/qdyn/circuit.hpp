#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qdyn {

/// Contiguous block of qubits, LSB at `offset`.
struct QubitRange {
  int offset = 0;
  int count = 0;
  int qubit(int i) const { return offset + i; }
  bool contains(int q) const { return q >= offset && q < offset + count; }
};

struct Register {
  std::string name;
  int offset = 0;
  int size = 0;
  int qubit(int i) const;
  QubitRange range() const { return {offset, size}; }
};

/// Ordered named registers; register k occupies the qubits right after
/// register k-1. Qubit q is bit q of a basis-state index.
class RegisterLayout {
 public:
  RegisterLayout() = default;
  RegisterLayout(std::initializer_list<std::pair<std::string, int>> regs);

  const Register& add(const std::string& name, int size);
  const Register& operator[](const std::string& name) const;
  const Register* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }
  int total_qubits() const { return total_; }
  const std::vector<Register>& registers() const { return regs_; }

 private:
  std::vector<Register> regs_;
  int total_ = 0;
};

enum class GateKind { H, X, RY, Phase, CNOT, CPhase, CCPhase, Swap, Oracle };

enum class OracleMode { Add, Xor };

/// Black-box basis permutation |x>|y> -> |x>|y (+) table[x]> used for
/// table-driven potentials and region labels. `control`, when set, gates the
/// whole action on one more qubit.
struct TableOracle {
  QubitRange input;
  QubitRange target;
  std::shared_ptr<const std::vector<std::uint64_t>> table;
  OracleMode mode = OracleMode::Add;
  int control = -1;
  std::string label;

  std::uint64_t apply(std::uint64_t x, std::uint64_t y) const;
};

struct Gate {
  GateKind kind = GateKind::H;
  int q0 = -1;  // target for single-qubit gates; first control otherwise
  int q1 = -1;
  int q2 = -1;
  double angle = 0.0;
  std::shared_ptr<const TableOracle> oracle;

  std::string name() const;
};

/// Elementary-gate counts by class. Doubly-controlled phases are tallied as
/// their own class and priced at 5 (two CNOTs and three controlled
/// rotations) when forming rotation-class totals. Swaps and single-qubit
/// gates are kept out of rotation-class totals.
struct GateTally {
  std::int64_t single_qubit = 0;
  std::int64_t controlled_rotation = 0;
  std::int64_t doubly_controlled_rotation = 0;
  std::int64_t cnot = 0;
  std::int64_t swap = 0;
  std::int64_t oracle_calls = 0;

  std::int64_t rotation_class() const {
    return controlled_rotation + cnot + 5 * doubly_controlled_rotation;
  }
  std::int64_t total() const { return single_qubit + rotation_class() + swap; }

  void count(const Gate& g);
  GateTally& operator+=(const GateTally& other);
  GateTally operator-(const GateTally& other) const;
  bool operator==(const GateTally&) const = default;
};

/// Resource accounting in the units the closed-form cost model uses.
///
/// Primitive blocks (QFT pairs, Fourier-space additions, controlled
/// additions) are charged at their model price; helper logic that the model
/// does not price (sign handling, seed selection, copies) is charged at its
/// measured rotation-class count. Values are stored in quarter gates so
/// 5/4 m^3 stays exact.
class CostLedger {
 public:
  struct Entry {
    std::string op;
    int width = 0;
    std::int64_t quarter_gates = 0;
  };

  void charge(std::string op, int width, std::int64_t quarter_gates);
  void append(const CostLedger& other);

  std::int64_t quarter_total() const;
  std::int64_t quarter_total(const std::string& op) const;
  double total() const { return static_cast<double>(quarter_total()) / 4.0; }
  double total(const std::string& op) const {
    return static_cast<double>(quarter_total(op)) / 4.0;
  }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

/// Gate list over a fixed qubit count with its tally and cost ledger.
class Circuit {
 public:
  explicit Circuit(int num_qubits = 0) : num_qubits_(num_qubits) {}

  int num_qubits() const { return num_qubits_; }
  void resize(int num_qubits);

  void h(int q);
  void x(int q);
  void ry(int q, double theta);
  void phase(int q, double theta);
  void cnot(int control, int target);
  void cphase(int control, int target, double theta);
  void ccphase(int c0, int c1, int target, double theta);
  void swap(int a, int b);
  void toffoli(int c0, int c1, int target);
  void oracle(TableOracle spec);
  void add(const Gate& g);

  /// Appends `other`; both ledgers and gate lists concatenate.
  void append(const Circuit& other);
  /// Reverse order, negated angles. Oracles in Add mode are inverted by
  /// negating their table modulo the target width.
  Circuit inverse() const;

  const std::vector<Gate>& gates() const { return gates_; }
  std::size_t size() const { return gates_.size(); }
  const GateTally& tally() const { return tally_; }
  CostLedger& ledger() { return ledger_; }
  const CostLedger& ledger() const { return ledger_; }

  /// One gate per line: `name q... [angle]`. Oracles serialize by label and
  /// are skipped by `from_text`, which only rebuilds elementary gates.
  void to_text(std::ostream& out) const;
  static Circuit from_text(std::istream& in);

 private:
  void check(std::initializer_list<int> qubits) const;

  int num_qubits_;
  std::vector<Gate> gates_;
  GateTally tally_;
  CostLedger ledger_;
};

/// Register allocator bundled with the circuit it grows.
struct CircuitBuilder {
  RegisterLayout layout;
  Circuit circuit;

  const Register& allocate(const std::string& name, int size);
  const Register& operator[](const std::string& name) const { return layout[name]; }
};

/// QFT on a register: |j> -> 2^{-k/2} sum_y exp(+2 pi i j y / 2^k) |y>.
/// Emits k Hadamards and k(k-1)/2 controlled phases, plus floor(k/2) swaps
/// when `bit_reverse` is set. Without bit reversal, qubit j of the register
/// carries phase exp(2 pi i value / 2^{j+1}) (the layout the Fourier-space
/// adders use).
void append_qft(Circuit& c, QubitRange reg, bool bit_reverse = true);
void append_iqft(Circuit& c, QubitRange reg, bool bit_reverse = true);

}  // namespace qdyn
