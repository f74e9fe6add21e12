#pragma once

#include <map>
#include <string>
#include <vector>

#include "qdyn/arith.hpp"
#include "qdyn/state.hpp"

namespace qdyn::testing {

struct BasisRun {
  // Every register that is neither an input nor read back ended at zero.
  bool scratch_clean = false;
  Complex amplitude;
  std::size_t peak_terms = 0;
};

// Runs a circuit on one basis input through the sparse engine and reads the
// named registers of the (single) output basis state.
inline std::map<std::string, std::uint64_t> run_basis(const ArithmeticCircuit& c,
                                                      const std::map<std::string, std::uint64_t>& inputs,
                                                      const std::vector<std::string>& reads,
                                                      BasisRun* run = nullptr) {
  auto s = SparseState::basis(c.layout, inputs);
  s.apply(c.circuit);
  std::map<std::string, std::uint64_t> out;
  for (const auto& r : reads) out[r] = s.register_value(r);
  if (run) {
    run->scratch_clean = true;
    for (const auto& reg : c.layout.registers()) {
      if (inputs.count(reg.name) || out.count(reg.name)) continue;
      if (s.register_value(reg.name) != 0) run->scratch_clean = false;
    }
    run->amplitude = s.basis_amplitude();
    run->peak_terms = s.peak_terms();
  }
  return out;
}

}  // namespace qdyn::testing
