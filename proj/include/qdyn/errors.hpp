#pragma once

#include <stdexcept>
#include <string>

namespace qdyn {

/// Input rejected before any computation (bad config, malformed spec).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& message)
      : std::invalid_argument(message) {}
};

/// A value lies outside the domain an operation is defined on
/// (zero separation for 1/r, non-finite samples, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& message)
      : std::domain_error(message) {}
};

/// A run would exceed the configured qubit or memory cap.
class ResourceCapError : public std::runtime_error {
 public:
  ResourceCapError(const std::string& message, int required_qubits)
      : std::runtime_error(message), required_qubits_(required_qubits) {}
  int required_qubits() const { return required_qubits_; }

 private:
  int required_qubits_;
};

/// A numerical contract was broken at run time, e.g. the kickback ancilla
/// ended up entangled with the position registers.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& message)
      : std::runtime_error(message) {}
};

}  // namespace qdyn
