#pragma once

// Presymplectic spaces, covariance forms, coherent-state specifications and
// the quotient reduction of a pair of states by the kernel of S + conj(S).

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string_view>

#include "ccramp/forms.hpp"

namespace ccramp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = CMatrix<double>;
using ComplexVector = CVector<double>;
using Form = PositiveForm<double>;

/// Real vector space R^n with an alternating form sigma(x, y) = x^T Sigma y.
class PresymplecticSpace {
 public:
  /// Throws InvalidArgument unless Sigma is square and Sigma^T == -Sigma exactly.
  explicit PresymplecticSpace(Matrix sigma);

  /// Sigma = 0.
  static PresymplecticSpace classical(Eigen::Index n);
  /// Standard symplectic form on R^{2m}, modes interleaved as (q_1, p_1, ...).
  static PresymplecticSpace canonical(Eigen::Index modes);

  Eigen::Index dim() const { return sigma_.rows(); }
  const Matrix& sigma() const { return sigma_; }

  bool operator==(const PresymplecticSpace& other) const { return sigma_ == other.sigma_; }

 private:
  Matrix sigma_;
};

/// Positive form S on C^n with S - conj(S) = i sigma, i.e. Im(M) = Sigma / 2.
class CovarianceForm {
 public:
  const PresymplecticSpace& space() const { return space_; }
  const Form& form() const { return form_; }
  const ComplexMatrix& matrix() const { return form_.matrix(); }
  Eigen::Index dim() const { return space_.dim(); }
  double tol() const { return form_.tol(); }

  /// S + conj(S) = 2 Re(M), the inner product the state lives on.
  Matrix inner_product() const { return 2.0 * form_.matrix().real(); }

 private:
  friend CovarianceForm validate_covariance(const PresymplecticSpace&, const ComplexMatrix&,
                                            double);
  CovarianceForm(PresymplecticSpace space, Form form)
      : space_(std::move(space)), form_(std::move(form)) {}

  PresymplecticSpace space_;
  Form form_;
};

/// Checks Hermitian PSD and M - M^T = i Sigma. Throws DimensionMismatch,
/// CovarianceMismatch, NotHermitian or NotPSD.
CovarianceForm validate_covariance(const PresymplecticSpace& space, const ComplexMatrix& m,
                                   double rel_tol = kDefaultRelTol);

/// Convenience overload taking Re(M); Im(M) is set to Sigma / 2.
CovarianceForm covariance_from_real_part(const PresymplecticSpace& space, const Matrix& re,
                                         double rel_tol = kDefaultRelTol);

/// The quasifree state phi_S shifted by the gauge automorphism of lambda.
struct CoherentStateSpec {
  CoherentStateSpec(CovarianceForm covariance, Vector shift);
  explicit CoherentStateSpec(CovarianceForm covariance);

  CovarianceForm covariance;
  Vector shift;

  const PresymplecticSpace& space() const { return covariance.space(); }
};

/// phi(e^{ix}) = e^{i lambda(x)} e^{-S(x,x)/2}.
std::complex<double> weyl_value(const CoherentStateSpec& state, const Vector& x);

/// Composes the gauge automorphism of mu with the state's own shift.
CoherentStateSpec gauge_shift(const CoherentStateSpec& state, const Vector& mu);

enum class ReductionVerdict { reducible, disjoint_kernel_mismatch, disjoint_shift_on_kernel };

constexpr std::string_view to_string(ReductionVerdict v) {
  switch (v) {
    case ReductionVerdict::reducible: return "reducible";
    case ReductionVerdict::disjoint_kernel_mismatch: return "disjoint_kernel_mismatch";
    case ReductionVerdict::disjoint_shift_on_kernel: return "disjoint_shift_on_kernel";
  }
  return "unknown";
}

struct QuotientReduction {
  ReductionVerdict verdict = ReductionVerdict::reducible;
  /// k x n, rows orthonormal; maps V onto V' = V / ker(S + conj(S)).
  Matrix projector;
  /// Orthonormal basis (columns) of ker(S + conj(S)).
  Matrix kernel;
  /// Reduced forms; present iff verdict == reducible.
  std::optional<CovarianceForm> reduced_s;
  std::optional<CovarianceForm> reduced_t;
  Vector reduced_shift;
};

/// Threshold on the sine of the largest principal angle between kernels.
inline constexpr double kKernelAngleTol = 1e-8;

QuotientReduction reduce_pair(const CovarianceForm& s, const CovarianceForm& t,
                              const Vector& lambda);

/// Orthonormal real basis of ker(S + conj(S)).
Matrix covariance_kernel(const CovarianceForm& s);

/// Transports a covariance form along a real invertible map P: the new
/// problem has Sigma' = P^T Sigma P and M' = P^T M P.
CovarianceForm pull_back(const CovarianceForm& s, const Matrix& p);

/// Block-diagonal direct sum over V_1 (+) V_2.
PresymplecticSpace direct_sum(const PresymplecticSpace& a, const PresymplecticSpace& b);
CovarianceForm direct_sum(const CovarianceForm& a, const CovarianceForm& b);
CoherentStateSpec direct_sum(const CoherentStateSpec& a, const CoherentStateSpec& b);

/// Restriction to span(e_1, ..., e_n).
CovarianceForm restrict_leading(const CovarianceForm& s, Eigen::Index n);

}  // namespace ccramp
