#pragma once

// Finite truncation studies of infinite systems.
//
// Two models: a ModeSequence is an ordered direct sum of small blocks (so
// restriction to a prefix is exact and amplitudes factor), and a
// NestedAmbient is one dense problem restricted to the nested coordinate
// subspaces V_n = span(e_1, ..., e_n). For the latter the exponent is
// computed twice per step: directly as (A_n+B_n)^{-1}(lambda_n)/2 and through
// the operator C_n = 1 - g_n + g_n (2A_n/R_n) g_n + g_n (2B_n/R_n) g_n built
// in the ambient geometry of R = S + conj(S) + T + conj(T).

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "ccramp/amplitude.hpp"

namespace ccramp {

/// Analytic per-block values, when the block family has them.
struct BlockClosedForm {
  double log_det = 0;  // log det(2 sqrt(AB)/(A+B))
  double exponent = 0;
};

struct ModeBlock {
  CovarianceForm s;
  CovarianceForm t;
  Vector shift;
  std::optional<BlockClosedForm> closed_form;
};

struct ModeSequence {
  std::vector<ModeBlock> blocks;

  int size() const { return static_cast<int>(blocks.size()); }
};

/// One-dimensional blocks with Sigma = 0, S = (s_k), T = (t_k), lambda = (l_k).
/// k runs from 1.
ModeSequence classical_sequence(int count, const std::function<double(int)>& s,
                                const std::function<double(int)>& t,
                                const std::function<double(int)>& shift);

/// One-mode blocks with both covariances minimal (the vacuum) and
/// lambda_k = (l_k, 0).
ModeSequence minimal_sequence(int count, const std::function<double(int)>& shift);

struct TruncationOptions {
  /// Exponent partial sums above this, trending up, count as unbounded.
  double unbounded_threshold = 1e6;
  /// Cauchy tail tolerance over the last quarter of the steps.
  double cauchy_tol = 1e-8;
};

enum class Classification { converged_positive, vanishing_det, diverging_exponent };

constexpr std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::converged_positive: return "converged_positive";
    case Classification::vanishing_det: return "vanishing_det";
    case Classification::diverging_exponent: return "diverging_exponent";
  }
  return "unknown";
}

struct TruncationRow {
  int step = 0;
  double log_det_partial = 0;
  double exponent_partial = 0;
  double amplitude = 0;
  double hs_partial = 0;
};

/// Remaining contribution beyond the last step, from a power-law fit
/// c * k^{-p} to the increments over the last quarter. Infinite when p <= 1.
struct TailEstimate {
  double log_det = 0;
  double exponent = 0;
};

struct TruncationReport {
  std::vector<TruncationRow> rows;
  Classification classification = Classification::converged_positive;
  TailEstimate tail;
  bool exponent_unbounded = false;
  /// Final amplitude with the tail estimates applied.
  double extrapolated_amplitude = 0;
  TruncationOptions options;
};

/// Running products over the first `upto` blocks, in log space.
TruncationReport prefix_amplitudes(const ModeSequence& seq, int upto,
                                   const TruncationOptions& options = {});

/// Running sums of ||A/R - B/R||_HS^2 with R the per-block S+conj(S)+T+conj(T).
std::vector<double> hs_indicator(const ModeSequence& seq, int upto);

/// ||A/R - B/R||_HS^2 for a single pair.
double hs_distance_squared(const CovarianceForm& s, const CovarianceForm& t);

struct NestedAmbient {
  CovarianceForm s;
  CovarianceForm t;
  Vector lambda;
};

struct NestedStep {
  int n = 0;
  AmplitudeResult amplitude;
  double exponent_direct = 0;  // (A_n+B_n)^{-1}(lambda_n) / 2
  double exponent_via_c = 0;   // R(x_n, C_n x_n)
  double c_min = 0;            // spectrum of C_n
  double c_max = 0;
};

struct NestedReport {
  /// Per-step (not cumulative) values in the row layout of TruncationReport.
  TruncationReport table;
  std::vector<NestedStep> steps;
  /// max |g_m y_n - y_m| over m <= n.
  double projection_defect = 0;
};

/// Allowed slack on 1 <= spec(C_n) <= 2.
inline constexpr double kCSpectrumSlack = 1e-10;

/// Throws SingularStep when some R_n is degenerate.
NestedReport nested_study(const NestedAmbient& problem, const TruncationOptions& options = {});

/// Classification and tails from per-step cumulative log-det and exponent
/// values; exposed for reuse by nested studies and tests.
void classify(TruncationReport& report);

}  // namespace ccramp
