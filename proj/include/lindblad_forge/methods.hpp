#pragma once

#include <string>
#include <vector>

#include "lindblad_forge/master_equation.hpp"

namespace lindblad_forge {

/// A named way of producing dynamics: the exact benchmark or a master-equation prescription.
struct Method {
  std::string name;
  bool exact = false;
  Prescription prescription;
};

inline Method parse_method(const std::string& name) {
  Method m;
  if (name == "Exact" || name == "exact") {
    m.name = "Exact";
    m.exact = true;
    return m;
  }
  m.prescription = Prescription::parse(name);
  m.name = m.prescription.name();
  return m;
}

/// Generator of a non-exact method. Plain BRE is assembled term by term; every other
/// prescription (and BRE+) goes through the Lindblad-like form.
inline Superoperator method_generator(const Prescription& p, const TransitionTable& table,
                                      const SpectralModel& bath) {
  if (p.tag == PrescriptionTag::BRE && !p.repaired && !p.secular_cutoff) return build_bre(table, bath);
  return to_liouvillian(build_prescription(table, bath, p));
}

/// Smallest and largest golden-rule rates Γ_jj(ω_j) over transitions with ω_j > 0 and a
/// nonzero rate. Both are zero when there is no such transition.
inline std::pair<double, double> golden_rule_rate_range(const TransitionTable& table,
                                                        const SpectralModel& bath) {
  double lo = 0.0, hi = 0.0;
  for (const auto& t : table.transitions) {
    if (!(t.frequency > 0.0)) continue;
    const ComplexMatrix gamma = eval_gamma(bath, t.frequency);
    const double rate = (t.elements.adjoint() * gamma * t.elements)(0, 0).real();
    if (!(rate > 0.0)) continue;
    lo = lo == 0.0 ? rate : std::min(lo, rate);
    hi = std::max(hi, rate);
  }
  return {lo, hi};
}

}  // namespace lindblad_forge
