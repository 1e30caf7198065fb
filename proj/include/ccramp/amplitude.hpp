#pragma once

// Transition amplitude between square roots of two coherent states:
//
//   (phi_{S,alpha}^{1/2} | phi_{T,beta}^{1/2})
//       = sqrt(det(2 sqrt(AB)/(A+B))) * exp(-(A+B)^{-1}(alpha - beta) / 2)
//
// with 2A = (S^{1/2} + conj(S)^{1/2})^2 and 2B likewise for T.

#include <string_view>

#include "ccramp/ccr.hpp"

namespace ccramp {

/// Which branch decided the value. Checks run in the declared order and the
/// first cause found is reported.
enum class CaseTag {
  generic,
  disjoint_kernel_mismatch,
  disjoint_shift_on_kernel,
  det_singular,
  exponent_infinite,
};

constexpr std::string_view to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::generic: return "generic";
    case CaseTag::disjoint_kernel_mismatch: return "disjoint_kernel_mismatch";
    case CaseTag::disjoint_shift_on_kernel: return "disjoint_shift_on_kernel";
    case CaseTag::det_singular: return "det_singular";
    case CaseTag::exponent_infinite: return "exponent_infinite";
  }
  return "unknown";
}

struct AmplitudeResult {
  double value = 0;
  double log_value = 0;
  double det_factor = 0;
  double log_det_factor = 0;
  /// (A+B)^{-1}(alpha - beta) / 2, possibly +inf.
  double exponent = 0;
  CaseTag case_tag = CaseTag::generic;
};

AmplitudeResult transition_amplitude(const CoherentStateSpec& a, const CoherentStateSpec& b);

AmplitudeResult quasifree_amplitude(const CovarianceForm& s, const CovarianceForm& t);

/// quasifree(S, T) - transition((S, lambda), (T, 0)); never below -1e-12.
double shift_monotonicity_gap(const CovarianceForm& s, const CovarianceForm& t,
                              const Vector& lambda);

}  // namespace ccramp
