#include "ccramp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace ccramp {

namespace {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0;
  double comp_ = 0;
};

Matrix symmetric(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double log_det_spd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().array().log().sum();
}

void require_nondegenerate(const Matrix& m, double rel_tol, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric(m), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (ev.size() == 0 || !(ev(0) > rel_tol * ev(ev.size() - 1))) {
    throw Error(ErrorCode::DegenerateOracle,
                std::string(what) + " is degenerate; reduce the pair first");
  }
}

// Eigenvalues at or below `floor` are taken as exact zeros; the root is not
// Lipschitz there and pure states put half the spectrum on it.
ComplexMatrix hermitian_sqrt(const ComplexMatrix& m, double floor) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitize(m));
  const Vector roots =
      es.eigenvalues().unaryExpr([floor](double x) { return x <= floor ? 0.0 : std::sqrt(x); });
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint();
}

// Whitened coordinates x = U D^{-1/2} z for (A+B) = U D U^T.
struct Whitening {
  double log_det = 0;
  Vector mu;  // lambda(x) = mu . z
};

Whitening whiten(const OverlapIntegrand& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric(w.a + w.b));
  Whitening out;
  out.log_det = es.eigenvalues().array().log().sum();
  out.mu = es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
           (es.eigenvectors().transpose() * w.lambda);
  return out;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

GaussHermiteRule gauss_hermite_rule(int count) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "quadrature needs at least one node");
  // Golub-Welsch: Jacobi matrix of the Hermite recurrence.
  Vector diag = Vector::Zero(count);
  Vector sub(std::max(count - 1, 0));
  for (int k = 1; k < count; ++k) sub(k - 1) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag, sub);
  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = std::sqrt(std::numbers::pi) * es.eigenvectors().row(0).transpose().array().square();
  // Symmetrize so that odd integrands cancel to rounding.
  for (int i = 0; i < count / 2; ++i) {
    const int j = count - 1 - i;
    const double x = 0.5 * (rule.nodes(j) - rule.nodes(i));
    const double wt = 0.5 * (rule.weights(i) + rule.weights(j));
    rule.nodes(i) = -x;
    rule.nodes(j) = x;
    rule.weights(i) = rule.weights(j) = wt;
  }
  if (count % 2 == 1) rule.nodes(count / 2) = 0.0;
  return rule;
}

ComplexMatrix half_sum_sqrt_by_separate_roots(const CovarianceForm& s) {
  const Eigen::Index n = s.dim();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric(s.inner_product()));
  const double threshold = s.tol() * std::max(es.eigenvalues()(n - 1), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (es.eigenvalues()(i) > threshold) keep.push_back(i);
  }
  const auto k = static_cast<Eigen::Index>(keep.size());
  ComplexMatrix w(n, k);
  ComplexMatrix lift(k, n);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double d = es.eigenvalues()(keep[j]);
    w.col(j) = es.eigenvectors().col(keep[j]).cast<std::complex<double>>() / std::sqrt(d);
    lift.row(j) = es.eigenvectors().col(keep[j]).transpose().cast<std::complex<double>>() *
                  std::sqrt(d);
  }
  const ComplexMatrix root_s = hermitian_sqrt(w.adjoint() * s.matrix() * w, s.tol());
  const ComplexMatrix root_conj = hermitian_sqrt(w.adjoint() * s.matrix().conjugate() * w, s.tol());
  const ComplexMatrix sum = root_s + root_conj;
  return lift.adjoint() * (0.5 * sum * sum) * lift;
}

OverlapIntegrand make_overlap_integrand(const CovarianceForm& s, const CovarianceForm& t,
                                        const Vector& lambda) {
  if (!(s.space() == t.space())) {
    throw Error(ErrorCode::DimensionMismatch, "states live on different presymplectic spaces");
  }
  if (lambda.size() != s.dim()) throw Error(ErrorCode::DimensionMismatch, "shift dimension");
  OverlapIntegrand w;
  w.a = symmetric(half_sum_sqrt_by_separate_roots(s).real());
  w.b = symmetric(half_sum_sqrt_by_separate_roots(t).real());
  w.lambda = lambda;
  const double tol = std::max(s.tol(), t.tol());
  require_nondegenerate(w.a, tol, "A");
  require_nondegenerate(w.b, tol, "B");
  const double half_n_log_pi = 0.5 * static_cast<double>(s.dim()) * std::log(std::numbers::pi);
  w.log_norm_s = half_n_log_pi - 0.5 * log_det_spd(w.a);
  w.log_norm_t = half_n_log_pi - 0.5 * log_det_spd(w.b);
  return w;
}

int effective_quadrature_nodes(int requested, Eigen::Index dim) {
  if (requested < kMinQuadratureNodes) {
    throw Error(ErrorCode::InvalidArgument, "quadrature needs at least 20 nodes per dimension");
  }
  int cap_nodes = 1;
  auto fits = [dim](long long k) {
    long long total = 1;
    for (Eigen::Index i = 0; i < dim; ++i) {
      total *= k;
      if (total > kQuadratureTensorCap) return false;
    }
    return true;
  };
  while (fits(cap_nodes + 1) && cap_nodes < requested) ++cap_nodes;
  return std::max(kMinQuadratureNodes, std::min(requested, cap_nodes));
}

QuadratureResult overlap_quadrature(const CovarianceForm& s, const CovarianceForm& t,
                                    const Vector& lambda, int nodes) {
  const Eigen::Index n = s.dim();
  if (n > kMaxQuadratureDim) {
    throw Error(ErrorCode::DimensionTooLarge, "quadrature supports dim V <= 6");
  }
  const OverlapIntegrand integrand = make_overlap_integrand(s, t, lambda);
  const Whitening wh = whiten(integrand);
  const int m = effective_quadrature_nodes(nodes, n);
  const GaussHermiteRule rule = gauss_hermite_rule(m);

  // z = sqrt(2) u turns exp(-|z|^2/2) dz into 2^{n/2} exp(-|u|^2) du.
  const Vector coef = std::numbers::sqrt2 * wh.mu;
  CompensatedSum re;
  CompensatedSum im;
  std::vector<double> phase(n + 1, 0.0);
  std::vector<double> weight(n + 1, 1.0);
  std::vector<int> index(n, 0);
  long long points = 0;
  // Odometer over the tensor grid; the innermost axis is a flat loop.
  const Eigen::Index last = n - 1;
  while (true) {
    for (Eigen::Index d = 0; d < last; ++d) {
      phase[d + 1] = phase[d] + coef(d) * rule.nodes(index[d]);
      weight[d + 1] = weight[d] * rule.weights(index[d]);
    }
    for (int i = 0; i < m; ++i) {
      const double ph = phase[last] + coef(last) * rule.nodes(i);
      const double wt = weight[last] * rule.weights(i);
      re.add(wt * std::cos(ph));
      im.add(wt * std::sin(ph));
    }
    points += m;
    Eigen::Index d = last - 1;
    while (d >= 0) {
      if (++index[d] < m) break;
      index[d] = 0;
      --d;
    }
    if (d < 0) break;
  }

  const double log_prefactor = 0.5 * static_cast<double>(n) * std::log(2.0) - 0.5 * wh.log_det -
                               0.5 * (integrand.log_norm_s + integrand.log_norm_t);
  QuadratureResult out;
  out.value = std::exp(log_prefactor) * re.value();
  out.imag = std::exp(log_prefactor) * im.value();
  out.nodes_per_dim = m;
  out.points = points;
  if (std::abs(out.imag) > 1e-10) {
    throw Error(ErrorCode::InternalCheck, "quadrature produced an imaginary part");
  }
  return out;
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
  return splitmix64(seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform(std::uint64_t counter) const {
  return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t k) const {
  const std::uint64_t pair = k / 2;
  const double r = std::sqrt(-2.0 * std::log(uniform(2 * pair)));
  const double theta = 2.0 * std::numbers::pi * uniform(2 * pair + 1);
  return (k % 2 == 0) ? r * std::cos(theta) : r * std::sin(theta);
}

MonteCarloResult overlap_monte_carlo(const CovarianceForm& s, const CovarianceForm& t,
                                     const Vector& lambda, long long samples,
                                     std::uint64_t seed) {
  if (samples < 2) throw Error(ErrorCode::InvalidArgument, "need at least two samples");
  const OverlapIntegrand integrand = make_overlap_integrand(s, t, lambda);
  const Whitening wh = whiten(integrand);
  const Eigen::Index n = s.dim();
  const CounterRng rng(seed);
  const double scale = std::sqrt(kProposalScale);
  const double log_weight0 = 0.5 * static_cast<double>(n) * std::log(kProposalScale);
  const double damping = 0.5 * (1.0 - 1.0 / kProposalScale);

  // Integrand / proposal density, in whitened coordinates z ~ N(0, kappa I).
  CompensatedSum sum;
  CompensatedSum sum_sq;
  const auto stride = static_cast<std::uint64_t>(n + (n % 2));
  for (long long i = 0; i < samples; ++i) {
    double z2 = 0;
    double ph = 0;
    for (Eigen::Index d = 0; d < n; ++d) {
      const double z = scale * rng.normal(static_cast<std::uint64_t>(i) * stride + d);
      z2 += z * z;
      ph += wh.mu(d) * z;
    }
    const double y = std::exp(log_weight0 - damping * z2) * std::cos(ph);
    sum.add(y);
    sum_sq.add(y * y);
  }
  const auto count = static_cast<double>(samples);
  const double mean = sum.value() / count;
  const double var = std::max(0.0, (sum_sq.value() / count - mean * mean) * count / (count - 1));
  const double log_prefactor = 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) -
                               0.5 * wh.log_det -
                               0.5 * (integrand.log_norm_s + integrand.log_norm_t);
  const double factor = std::exp(log_prefactor);
  return {factor * mean, factor * std::sqrt(var / count), samples, seed};
}

GaussianMeasure measure_of_state(const CoherentStateSpec& state) {
  return {0.5 * symmetric(half_sum_sqrt_by_separate_roots(state.covariance).real()), state.shift};
}

double hellinger_affinity(const GaussianMeasure& mu1, const GaussianMeasure& mu2) {
  const Eigen::Index n = mu1.covariance.rows();
  if (mu2.covariance.rows() != n || mu1.mean.size() != n || mu2.mean.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "measures on different spaces");
  }
  require_nondegenerate(mu1.covariance, kDefaultRelTol, "first covariance");
  require_nondegenerate(mu2.covariance, kDefaultRelTol, "second covariance");
  const Matrix mid = symmetric(0.5 * (mu1.covariance + mu2.covariance));
  const Vector delta = mu1.mean - mu2.mean;
  const double quad = delta.dot(mid.ldlt().solve(delta));
  const double log_bc = 0.25 * log_det_spd(mu1.covariance) + 0.25 * log_det_spd(mu2.covariance) -
                        0.5 * log_det_spd(mid) - 0.125 * quad;
  return std::min(1.0, std::exp(log_bc));
}

}  // namespace ccramp
