#pragma once

// Independent checks of the amplitude formula. These evaluate the overlap
// integral of the square-root densities directly,
//
//   (N_S N_T)^{-1/2} \int_V exp(-(A(x,x) + B(x,x))/2 + i lambda(x)) dx,
//   N_S = \int_V exp(-A(x,x)) dx,
//
// by tensor Gauss-Hermite quadrature or importance sampling, and the
// closed-form Hellinger affinity of Gaussian measures.
//
// A and B are rebuilt here from separately computed square roots of
// S/(S+conj S) and conj(S)/(S+conj S), so they do not share the commuting
// shortcut used by half_sum_sqrt_form.

#include <cstdint>

#include "ccramp/ccr.hpp"

namespace ccramp {

/// Nodes and weights for \int f(u) exp(-u^2) du.
struct GaussHermiteRule {
  Vector nodes;
  Vector weights;
};

GaussHermiteRule gauss_hermite_rule(int count);

/// (S^{1/2} + conj(S)^{1/2})^2 / 2 from two independent matrix square roots.
ComplexMatrix half_sum_sqrt_by_separate_roots(const CovarianceForm& s);

struct OverlapIntegrand {
  Matrix a;  // A restricted to real arguments
  Matrix b;
  Vector lambda;
  double log_norm_s = 0;  // log N_S = (n/2) log pi - (1/2) log det A
  double log_norm_t = 0;
};

/// Throws DegenerateOracle unless A and B are nondegenerate on V.
OverlapIntegrand make_overlap_integrand(const CovarianceForm& s, const CovarianceForm& t,
                                        const Vector& lambda);

inline constexpr int kDefaultQuadratureNodes = 60;
inline constexpr int kMinQuadratureNodes = 20;
inline constexpr long long kQuadratureTensorCap = 60LL * 60 * 60 * 60;
inline constexpr int kMaxQuadratureDim = 6;

struct QuadratureResult {
  double value = 0;
  double imag = 0;
  int nodes_per_dim = 0;
  long long points = 0;
};

/// Nodes actually used per dimension for a requested count in dimension n.
int effective_quadrature_nodes(int requested, Eigen::Index dim);

QuadratureResult overlap_quadrature(const CovarianceForm& s, const CovarianceForm& t,
                                    const Vector& lambda, int nodes = kDefaultQuadratureNodes);

/// Counter-based SplitMix64 stream: draw k depends only on (seed, k).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::uint64_t counter) const;
  /// Uniform on (0, 1).
  double uniform(std::uint64_t counter) const;
  /// Standard normal from the Box-Muller pair at counters (2k, 2k+1).
  double normal(std::uint64_t k) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Proposal covariance is kProposalScale * ((A+B)|_real)^{-1}.
inline constexpr double kProposalScale = 1.25;

struct MonteCarloResult {
  double estimate = 0;
  double standard_error = 0;
  long long samples = 0;
  std::uint64_t seed = 0;
};

MonteCarloResult overlap_monte_carlo(const CovarianceForm& s, const CovarianceForm& t,
                                     const Vector& lambda, long long samples, std::uint64_t seed);

struct GaussianMeasure {
  Matrix covariance;
  Vector mean;
};

/// mu_{S,alpha}: covariance A|_real / 2 and mean alpha. For Sigma = 0 the
/// covariance is Re(S), the one read off the characteristic function.
GaussianMeasure measure_of_state(const CoherentStateSpec& state);

/// \int sqrt(p_1 p_2) dx for Gaussian densities. Throws DegenerateOracle.
double hellinger_affinity(const GaussianMeasure& mu1, const GaussianMeasure& mu2);

}  // namespace ccramp
