#pragma once

// Positive sesquilinear forms on C^n and the functional calculus needed for
// transition amplitudes: conjugates, kernels, ratio operators F/G, the
// half-sum-of-square-roots form A = (S^{1/2} + conj(S)^{1/2})^2 / 2,
// det(2 sqrt(AB)/(A+B)) and inverse forms.
//
// Convention: a form F(x, y) = x^* M y is conjugate-linear in its first
// argument. Complex conjugation on C^n is entrywise, so conj(F) has matrix
// conj(M) = M^T.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ccramp/error.hpp"

namespace ccramp {

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Relative rank/PSD tolerance, scaled by the largest eigenvalue.
inline constexpr double kDefaultRelTol = 1e-10;

template <typename Derived>
auto hermitize(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix h = (m + m.adjoint()) / typename Eigen::NumTraits<Scalar>::Real(2);
  return h;
}

/// Eigen-split of a Hermitian PSD matrix into an orthonormal range basis
/// (eigenvalues above rel_tol * largest) and an orthonormal kernel basis.
template <typename Real>
struct SpectralSplit {
  CMatrix<Real> range;
  RVector<Real> range_values;
  CMatrix<Real> kernel;
  Real largest = 0;
  Real smallest = 0;

  Eigen::Index rank() const { return range.cols(); }

  /// Columns W with W^* M W = I on the range.
  CMatrix<Real> whitener() const {
    return range * range_values.cwiseSqrt().cwiseInverse().asDiagonal();
  }
  /// Left inverse of whitener(): diag(d^{1/2}) range^*.
  CMatrix<Real> dewhitener() const {
    return range_values.cwiseSqrt().asDiagonal() * range.adjoint();
  }
};

template <typename Real>
SpectralSplit<Real> spectral_split(const CMatrix<Real>& m, Real rel_tol) {
  const Eigen::Index n = m.rows();
  SpectralSplit<Real> out;
  if (n == 0) {
    out.range.resize(0, 0);
    out.kernel.resize(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(hermitize(m));
  const RVector<Real>& ev = es.eigenvalues();
  out.largest = ev(n - 1);
  out.smallest = ev(0);
  const Real threshold = rel_tol * std::max(out.largest, Real(0));
  Eigen::Index k = 0;
  while (k < n && !(ev(k) > threshold)) ++k;
  out.kernel = es.eigenvectors().leftCols(k);
  out.range = es.eigenvectors().rightCols(n - k);
  out.range_values = ev.tail(n - k);
  return out;
}

/// Hermitian positive-semidefinite form on C^n.
template <typename Real>
class PositiveForm {
 public:
  using Matrix = CMatrix<Real>;
  using Vector = CVector<Real>;

  /// Validates Hermitian (max entry deviation <= tol) and PSD (eigenvalues
  /// >= -tol * largest). The stored matrix is re-Hermitized.
  explicit PositiveForm(const Matrix& m, Real rel_tol = Real(kDefaultRelTol))
      : tol_(rel_tol) {
    if (m.rows() != m.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "form matrix must be square");
    }
    if (!(rel_tol >= 0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be >= 0");
    const Real scale = std::max(Real(1), m.cwiseAbs().maxCoeff());
    if (m.size() > 0 && (m - m.adjoint()).cwiseAbs().maxCoeff() > rel_tol * scale) {
      throw Error(ErrorCode::NotHermitian, "form matrix is not Hermitian");
    }
    matrix_ = hermitize(m);
    if (matrix_.size() > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_, Eigen::EigenvaluesOnly);
      const Real lo = es.eigenvalues()(0);
      const Real hi = es.eigenvalues()(matrix_.rows() - 1);
      if (lo < -rel_tol * std::max(hi, Real(0))) {
        throw Error(ErrorCode::NotPSD, "smallest eigenvalue " + std::to_string(double(lo)) +
                                           " is below the tolerance");
      }
    }
  }

  /// For results of operations that are PSD by construction.
  static PositiveForm trusted(const Matrix& m, Real rel_tol) {
    PositiveForm f;
    f.matrix_ = hermitize(m);
    f.tol_ = rel_tol;
    return f;
  }

  static PositiveForm zero(Eigen::Index n, Real rel_tol = Real(kDefaultRelTol)) {
    return trusted(Matrix::Zero(n, n), rel_tol);
  }

  Eigen::Index dim() const { return matrix_.rows(); }
  const Matrix& matrix() const { return matrix_; }
  Real tol() const { return tol_; }

  std::complex<Real> operator()(const Vector& x, const Vector& y) const {
    return x.dot(matrix_ * y);
  }

  PositiveForm operator+(const PositiveForm& other) const {
    check_same_dim(other);
    return trusted(matrix_ + other.matrix_, std::max(tol_, other.tol_));
  }

  PositiveForm scaled(Real c) const { return trusted(matrix_ * c, tol_); }

  void check_same_dim(const PositiveForm& other) const {
    if (dim() != other.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "forms live on spaces of different dimension");
    }
  }

  SpectralSplit<Real> split() const { return spectral_split<Real>(matrix_, tol_); }

 private:
  PositiveForm() = default;

  Matrix matrix_;
  Real tol_ = Real(kDefaultRelTol);
};

/// X with F(x, y) = G(x, X y) on the quotient by ker(G), zero on ker(G).
template <typename Real>
struct RatioOperator {
  CMatrix<Real> matrix;
  bool dominated = false;
  PositiveForm<Real> reference;
};

template <typename Real>
struct InverseFormValue {
  Real value = 0;  // +inf when alpha is not representable
  std::optional<CVector<Real>> witness;

  bool finite() const { return witness.has_value(); }
};

/// det(2 sqrt(AB)/(A+B)) on the quotient by ker(A+B), with its logarithm and
/// the spectrum t_i of A/(A+B) it was computed from.
template <typename Real>
struct DetRatio {
  Real value = 0;
  Real log_value = -std::numeric_limits<Real>::infinity();
  RVector<Real> ratios;
};

template <typename Real>
PositiveForm<Real> conjugate_form(const PositiveForm<Real>& f) {
  return PositiveForm<Real>::trusted(f.matrix().conjugate(), f.tol());
}

/// Orthonormal basis of ker(F); eigenvalues <= tol * largest count as zero.
template <typename Real>
std::vector<CVector<Real>> kernel_basis(const PositiveForm<Real>& f) {
  const auto split = f.split();
  std::vector<CVector<Real>> out;
  out.reserve(split.kernel.cols());
  for (Eigen::Index j = 0; j < split.kernel.cols(); ++j) out.emplace_back(split.kernel.col(j));
  return out;
}

template <typename Real>
RatioOperator<Real> ratio_operator(const PositiveForm<Real>& f, const PositiveForm<Real>& g) {
  f.check_same_dim(g);
  const Real tol = std::max(f.tol(), g.tol());
  const auto split = spectral_split<Real>(g.matrix(), tol);

  bool dominated = true;
  if (split.kernel.cols() > 0) {
    const CMatrix<Real> on_kernel = hermitize(split.kernel.adjoint() * f.matrix() * split.kernel);
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(on_kernel, Eigen::EigenvaluesOnly);
    const Real f_norm = f.matrix().size() > 0 ? f.matrix().norm() : Real(0);
    dominated = es.eigenvalues().cwiseAbs().maxCoeff() <= tol * f_norm;
  }

  // In whitened coordinates the ratio is the Hermitian matrix W^* F W.
  const CMatrix<Real> w = split.whitener();
  const CMatrix<Real> f_hat = hermitize(w.adjoint() * f.matrix() * w);
  CMatrix<Real> x = w * f_hat * split.dewhitener();
  if (x.size() == 0) x = CMatrix<Real>::Zero(f.dim(), f.dim());
  return {std::move(x), dominated, g};
}

/// A = (S^{1/2} + conj(S)^{1/2})^2 / 2 relative to R0 = S + conj(S).
///
/// With s = S/R0 we have conj(S)/R0 = 1 - s on the range of R0, so the two
/// square roots commute and A/R0 = 1/2 + sqrt(s (1 - s)).
template <typename Real>
PositiveForm<Real> half_sum_sqrt_form(const PositiveForm<Real>& s) {
  const Eigen::Index n = s.dim();
  const CMatrix<Real> r0 = s.matrix() + s.matrix().conjugate();
  const auto split = spectral_split<Real>(r0, s.tol());
  if (split.rank() == 0) return PositiveForm<Real>::zero(n, s.tol());

  const CMatrix<Real> w = split.whitener();
  const CMatrix<Real> s_hat = hermitize(w.adjoint() * s.matrix() * w);
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(s_hat);
  RVector<Real> g(es.eigenvalues().size());
  // sqrt(t(1-t)) is not Lipschitz at t in {0, 1}; ratios within tolerance
  // of the ends are snapped so pure directions stay exact.
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    Real t = std::clamp(es.eigenvalues()(i), Real(0), Real(1));
    if (t <= s.tol() || t >= Real(1) - s.tol()) t = 0;
    g(i) = Real(0.5) + std::sqrt(t * (Real(1) - t));
  }
  const CMatrix<Real> a_hat = es.eigenvectors() * g.asDiagonal() * es.eigenvectors().adjoint();
  const CMatrix<Real> lift = split.dewhitener();
  return PositiveForm<Real>::trusted(lift.adjoint() * a_hat * lift, s.tol());
}

template <typename Real>
DetRatio<Real> det_sqrt_ratio(const PositiveForm<Real>& a, const PositiveForm<Real>& b) {
  a.check_same_dim(b);
  const Real tol = std::max(a.tol(), b.tol());
  const auto split = spectral_split<Real>(a.matrix() + b.matrix(), tol);

  DetRatio<Real> out;
  out.ratios.resize(split.rank());
  if (split.rank() == 0) {
    out.value = 1;
    out.log_value = 0;
    return out;
  }
  const CMatrix<Real> w = split.whitener();
  Eigen::SelfAdjointEigenSolver<CMatrix<Real>> es(hermitize(w.adjoint() * a.matrix() * w),
                                                  Eigen::EigenvaluesOnly);
  bool singular = false;
  Real log_sum = 0;
  for (Eigen::Index i = 0; i < split.rank(); ++i) {
    const Real t = std::clamp(es.eigenvalues()(i), Real(0), Real(1));
    out.ratios(i) = t;
    if (t <= tol || t >= Real(1) - tol) {
      singular = true;
      continue;
    }
    log_sum += std::log(Real(2)) + Real(0.5) * (std::log(t) + std::log1p(-t));
  }
  if (singular) {
    out.value = 0;
    out.log_value = -std::numeric_limits<Real>::infinity();
  } else {
    out.log_value = log_sum;
    out.value = std::exp(log_sum);
  }
  return out;
}

/// Q^{-1}(alpha) for a real functional alpha(x) = sum_j alpha_j x_j.
template <typename Real>
InverseFormValue<Real> inverse_form(const PositiveForm<Real>& q, const RVector<Real>& alpha) {
  if (alpha.size() != q.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "functional and form dimensions differ");
  }
  InverseFormValue<Real> out;
  const CVector<Real> a = alpha.template cast<std::complex<Real>>();
  const Real a_norm = alpha.norm();
  if (a_norm == 0) {
    out.value = 0;
    out.witness = CVector<Real>::Zero(q.dim());
    return out;
  }
  const auto split = q.split();
  if (split.kernel.cols() > 0 && (split.kernel.adjoint() * a).norm() > q.tol() * a_norm) {
    out.value = std::numeric_limits<Real>::infinity();
    return out;
  }
  // Q a_rep = alpha on the range of Q.
  const CVector<Real> coeffs = split.range.adjoint() * a;
  const CVector<Real> rep = split.range * coeffs.cwiseQuotient(
                                              split.range_values.template cast<std::complex<Real>>());
  const std::complex<Real> val = a.dot(rep);
  if (std::abs(val.imag()) > Real(1e-10) * std::max(Real(1), std::abs(val.real()))) {
    throw Error(ErrorCode::InternalCheck, "inverse form has an imaginary residue");
  }
  out.value = std::max(val.real(), Real(0));
  out.witness = rep;
  return out;
}

}  // namespace ccramp
