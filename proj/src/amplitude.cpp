#include "ccramp/amplitude.hpp"

#include <cmath>
#include <limits>

namespace ccramp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Factors {
  DetRatio<double> det;
  double exponent = 0;
};

Factors formula_factors(const CovarianceForm& s, const CovarianceForm& t, const Vector& lambda) {
  const Form a = half_sum_sqrt_form(s.form());
  const Form b = half_sum_sqrt_form(t.form());
  Factors f;
  f.det = det_sqrt_ratio(a, b);
  f.exponent = 0.5 * inverse_form(a + b, lambda).value;
  return f;
}

AmplitudeResult assemble(const Factors& f, CaseTag tag) {
  AmplitudeResult r;
  r.det_factor = f.det.value;
  r.log_det_factor = f.det.log_value;
  r.exponent = f.exponent;
  r.case_tag = tag;
  if (tag == CaseTag::generic) {
    if (f.det.value == 0) {
      r.case_tag = CaseTag::det_singular;
    } else if (std::isinf(f.exponent)) {
      r.case_tag = CaseTag::exponent_infinite;
    }
  }
  if (r.case_tag == CaseTag::generic) {
    r.log_value = 0.5 * f.det.log_value - f.exponent;
    r.value = std::exp(r.log_value);
  } else {
    r.log_value = -kInf;
    r.value = 0;
  }
  return r;
}

}  // namespace

AmplitudeResult transition_amplitude(const CoherentStateSpec& a, const CoherentStateSpec& b) {
  if (!(a.space() == b.space())) {
    throw Error(ErrorCode::DimensionMismatch, "states live on different presymplectic spaces");
  }
  const Vector lambda = a.shift - b.shift;
  const QuotientReduction red = reduce_pair(a.covariance, b.covariance, lambda);
  switch (red.verdict) {
    case ReductionVerdict::disjoint_kernel_mismatch:
      return assemble(formula_factors(a.covariance, b.covariance, lambda),
                      CaseTag::disjoint_kernel_mismatch);
    case ReductionVerdict::disjoint_shift_on_kernel:
      return assemble(formula_factors(a.covariance, b.covariance, lambda),
                      CaseTag::disjoint_shift_on_kernel);
    case ReductionVerdict::reducible:
      break;
  }
  return assemble(formula_factors(*red.reduced_s, *red.reduced_t, red.reduced_shift),
                  CaseTag::generic);
}

AmplitudeResult quasifree_amplitude(const CovarianceForm& s, const CovarianceForm& t) {
  return transition_amplitude(CoherentStateSpec(s), CoherentStateSpec(t));
}

double shift_monotonicity_gap(const CovarianceForm& s, const CovarianceForm& t,
                              const Vector& lambda) {
  return quasifree_amplitude(s, t).value -
         transition_amplitude(CoherentStateSpec(s, lambda), CoherentStateSpec(t)).value;
}

}  // namespace ccramp
