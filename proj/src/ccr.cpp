#include "ccramp/ccr.hpp"

#include <algorithm>
#include <cmath>

namespace ccramp {

namespace {

// Exactly antisymmetric part: entry (j,i) is the negation of entry (i,j).
Matrix antisymmetrize(const Matrix& x) {
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.cols(); ++j) {
      out(i, j) = 0.5 * (x(i, j) - x(j, i));
      out(j, i) = -out(i, j);
    }
  }
  return out;
}

struct RealSplit {
  Matrix range;
  Matrix kernel;
};

RealSplit real_split(const Matrix& m, double rel_tol) {
  const Eigen::Index n = m.rows();
  RealSplit out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  const double threshold = rel_tol * std::max(es.eigenvalues()(n - 1), 0.0);
  Eigen::Index k = 0;
  while (k < n && !(es.eigenvalues()(k) > threshold)) ++k;
  out.kernel = es.eigenvectors().leftCols(k);
  out.range = es.eigenvectors().rightCols(n - k);
  return out;
}

double sine_of_largest_angle(const Matrix& a, const Matrix& b) {
  if (b.cols() == 0) return 0.0;
  const Matrix residual = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Matrix> svd(residual);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

}  // namespace

PresymplecticSpace::PresymplecticSpace(Matrix sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols()) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be square");
  }
  if (sigma_ != -sigma_.transpose()) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be antisymmetric");
  }
}

PresymplecticSpace PresymplecticSpace::classical(Eigen::Index n) {
  return PresymplecticSpace(Matrix::Zero(n, n));
}

PresymplecticSpace PresymplecticSpace::canonical(Eigen::Index modes) {
  Matrix sigma = Matrix::Zero(2 * modes, 2 * modes);
  for (Eigen::Index k = 0; k < modes; ++k) {
    sigma(2 * k, 2 * k + 1) = 1.0;
    sigma(2 * k + 1, 2 * k) = -1.0;
  }
  return PresymplecticSpace(std::move(sigma));
}

CovarianceForm validate_covariance(const PresymplecticSpace& space, const ComplexMatrix& m,
                                   double rel_tol) {
  if (m.rows() != space.dim() || m.cols() != space.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "covariance matrix does not match the space");
  }
  const double scale = m.size() > 0 ? std::max(1.0, m.cwiseAbs().maxCoeff()) : 1.0;
  const ComplexMatrix defect =
      m - m.transpose() - std::complex<double>(0.0, 1.0) * space.sigma().cast<std::complex<double>>();
  if (m.size() > 0 && defect.cwiseAbs().maxCoeff() > rel_tol * scale) {
    throw Error(ErrorCode::CovarianceMismatch, "M - M^T differs from i*Sigma");
  }
  return CovarianceForm(space, Form(m, rel_tol));
}

CovarianceForm covariance_from_real_part(const PresymplecticSpace& space, const Matrix& re,
                                         double rel_tol) {
  ComplexMatrix m(re.rows(), re.cols());
  m.real() = re;
  if (re.rows() == space.dim() && re.cols() == space.dim()) m.imag() = 0.5 * space.sigma();
  return validate_covariance(space, m, rel_tol);
}

CoherentStateSpec::CoherentStateSpec(CovarianceForm cov, Vector lambda)
    : covariance(std::move(cov)), shift(std::move(lambda)) {
  if (shift.size() != covariance.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "shift has the wrong dimension");
  }
}

CoherentStateSpec::CoherentStateSpec(CovarianceForm cov)
    : CoherentStateSpec(cov, Vector::Zero(cov.dim())) {}

std::complex<double> weyl_value(const CoherentStateSpec& state, const Vector& x) {
  if (x.size() != state.covariance.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "argument has the wrong dimension");
  }
  // For real x the antisymmetric imaginary part drops out of x^T M x.
  const double quad = x.dot(state.covariance.matrix().real() * x);
  return std::polar(std::exp(-0.5 * quad), state.shift.dot(x));
}

CoherentStateSpec gauge_shift(const CoherentStateSpec& state, const Vector& mu) {
  if (mu.size() != state.shift.size()) {
    throw Error(ErrorCode::DimensionMismatch, "gauge shift has the wrong dimension");
  }
  return CoherentStateSpec(state.covariance, state.shift + mu);
}

Matrix covariance_kernel(const CovarianceForm& s) {
  return real_split(s.inner_product(), s.tol()).kernel;
}

QuotientReduction reduce_pair(const CovarianceForm& s, const CovarianceForm& t,
                              const Vector& lambda) {
  if (!(s.space() == t.space())) {
    throw Error(ErrorCode::DimensionMismatch, "states live on different presymplectic spaces");
  }
  if (lambda.size() != s.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "shift has the wrong dimension");
  }
  const Eigen::Index n = s.dim();
  const double tol = std::max(s.tol(), t.tol());
  const RealSplit ks = real_split(s.inner_product(), tol);
  const RealSplit kt = real_split(t.inner_product(), tol);

  QuotientReduction out;
  out.kernel = ks.kernel;
  if (ks.kernel.cols() != kt.kernel.cols() ||
      sine_of_largest_angle(ks.kernel, kt.kernel) > kKernelAngleTol ||
      sine_of_largest_angle(kt.kernel, ks.kernel) > kKernelAngleTol) {
    out.verdict = ReductionVerdict::disjoint_kernel_mismatch;
    return out;
  }
  const double lambda_norm = lambda.norm();
  if (ks.kernel.cols() > 0 && lambda_norm > 0 &&
      (ks.kernel.transpose() * lambda).norm() > tol * lambda_norm) {
    out.verdict = ReductionVerdict::disjoint_shift_on_kernel;
    return out;
  }

  out.verdict = ReductionVerdict::reducible;
  if (ks.kernel.cols() == 0) {
    out.projector = Matrix::Identity(n, n);
    out.reduced_s = s;
    out.reduced_t = t;
    out.reduced_shift = lambda;
    return out;
  }
  out.projector = ks.range.transpose();
  const Matrix& p = out.projector;
  const PresymplecticSpace reduced_space(antisymmetrize(p * s.space().sigma() * p.transpose()));
  const ComplexMatrix pc = p.cast<std::complex<double>>();
  out.reduced_s = validate_covariance(reduced_space, pc * s.matrix() * pc.transpose(), s.tol());
  out.reduced_t = validate_covariance(reduced_space, pc * t.matrix() * pc.transpose(), t.tol());
  out.reduced_shift = p * lambda;
  return out;
}

CovarianceForm pull_back(const CovarianceForm& s, const Matrix& p) {
  if (p.rows() != s.dim() || p.cols() != s.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "transport map has the wrong shape");
  }
  const PresymplecticSpace space(antisymmetrize(p.transpose() * s.space().sigma() * p));
  const ComplexMatrix pc = p.cast<std::complex<double>>();
  ComplexMatrix m = pc.transpose() * s.matrix() * pc;
  // Keep the covariance condition exact with respect to the rounded Sigma.
  m.imag() = 0.5 * space.sigma();
  return validate_covariance(space, m, s.tol());
}

PresymplecticSpace direct_sum(const PresymplecticSpace& a, const PresymplecticSpace& b) {
  Matrix sigma = Matrix::Zero(a.dim() + b.dim(), a.dim() + b.dim());
  sigma.topLeftCorner(a.dim(), a.dim()) = a.sigma();
  sigma.bottomRightCorner(b.dim(), b.dim()) = b.sigma();
  return PresymplecticSpace(std::move(sigma));
}

CovarianceForm direct_sum(const CovarianceForm& a, const CovarianceForm& b) {
  const Eigen::Index n = a.dim() + b.dim();
  ComplexMatrix m = ComplexMatrix::Zero(n, n);
  m.topLeftCorner(a.dim(), a.dim()) = a.matrix();
  m.bottomRightCorner(b.dim(), b.dim()) = b.matrix();
  return validate_covariance(direct_sum(a.space(), b.space()), m, std::max(a.tol(), b.tol()));
}

CoherentStateSpec direct_sum(const CoherentStateSpec& a, const CoherentStateSpec& b) {
  Vector shift(a.shift.size() + b.shift.size());
  shift << a.shift, b.shift;
  return CoherentStateSpec(direct_sum(a.covariance, b.covariance), std::move(shift));
}

CovarianceForm restrict_leading(const CovarianceForm& s, Eigen::Index n) {
  if (n < 1 || n > s.dim()) throw Error(ErrorCode::InvalidArgument, "restriction size out of range");
  const PresymplecticSpace space(s.space().sigma().topLeftCorner(n, n));
  return validate_covariance(space, s.matrix().topLeftCorner(n, n), s.tol());
}

}  // namespace ccramp
