#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ccramp/truncation.hpp"
#include "test_support.hpp"

using namespace ccramp;
using namespace ccramp::testing;

namespace {

double one(int) { return 1.0; }
double zero(int) { return 0.0; }

CovarianceForm classical_diag(const Vector& d) {
  return covariance_from_real_part(PresymplecticSpace::classical(d.size()), d.asDiagonal());
}

// Dense valid ambient problem of dimension 2 * modes + classical.
NestedAmbient random_ambient(Rng& rng, const Frame& f) {
  const auto [a, b] = random_pair(rng, f, 1.0);
  return {a.covariance, b.covariance, a.shift - b.shift};
}

}  // namespace

TEST_CASE("identical blocks give amplitude one everywhere") {
  const auto seq = classical_sequence(30, one, one, zero);
  const auto report = prefix_amplitudes(seq, 30);
  for (const auto& row : report.rows) {
    CHECK(row.amplitude == 1.0);
    CHECK(row.hs_partial == 0.0);
  }
  CHECK(report.classification == Classification::converged_positive);
  for (double h : hs_indicator(seq, 30)) CHECK(h == 0.0);
}

TEST_CASE("prefix values match the per-block closed forms") {
  const auto seq = classical_sequence(
      50, one, [](int k) { return 1.0 + 1.0 / k; }, [](int k) { return 1.0 / k; });
  const auto report = prefix_amplitudes(seq, 50);
  double log_det = 0;
  double exponent = 0;
  for (int k = 0; k < 50; ++k) {
    log_det += seq.blocks[k].closed_form->log_det;
    exponent += seq.blocks[k].closed_form->exponent;
    CHECK(std::abs(report.rows[k].log_det_partial - log_det) < 1e-12);
    CHECK(std::abs(report.rows[k].exponent_partial - exponent) < 1e-12);
    CHECK(rel_diff(report.rows[k].amplitude, std::exp(0.5 * log_det - exponent)) < 1e-12);
  }
}

TEST_CASE("HS-equivalent classical sequence converges") {
  const auto seq = classical_sequence(200, one, [](int k) { return 1.0 + 1.0 / (double(k) * k); }, zero);
  const auto report = prefix_amplitudes(seq, 200);
  CHECK(report.classification == Classification::converged_positive);
  CHECK_FALSE(report.exponent_unbounded);
  CHECK(report.rows.back().amplitude > 0.9);
}

TEST_CASE("constant mismatch drives the determinant to zero") {
  const auto seq = classical_sequence(200, one, [](int) { return 2.0; }, zero);
  const auto report = prefix_amplitudes(seq, 200);
  CHECK(report.classification == Classification::vanishing_det);
  const double factor = std::sqrt(2.0 * std::sqrt(2.0) / 3.0);
  CHECK(rel_diff(report.rows.back().amplitude, std::pow(factor, 200)) < 1e-10);
  CHECK(std::isinf(report.tail.log_det));
  CHECK(report.extrapolated_amplitude == 0.0);
}

TEST_CASE("shift sequences: summable vs not") {
  // sum 1/(2k^2) -> pi^2/12. Its tail after 200 steps is ~1e-3, too slow for
  // the 1e-8 Cauchy test, but the fitted tail is finite and accurate.
  const auto summable = prefix_amplitudes(minimal_sequence(200, [](int k) { return 1.0 / k; }), 200);
  CHECK(std::isfinite(summable.tail.exponent));
  CHECK_FALSE(summable.exponent_unbounded);
  const double pi = std::acos(-1.0);
  CHECK(std::abs(summable.rows.back().exponent_partial + summable.tail.exponent - pi * pi / 12) <
        1e-4);

  const auto fast = prefix_amplitudes(
      minimal_sequence(200, [](int k) { return std::pow(double(k), -3.0); }), 200);
  CHECK(fast.classification == Classification::converged_positive);

  const auto constant = prefix_amplitudes(minimal_sequence(200, one), 200);
  CHECK(constant.classification == Classification::diverging_exponent);
  CHECK(std::abs(constant.rows.back().exponent_partial - 100.0) < 1e-10);
  CHECK_FALSE(constant.exponent_unbounded);

  const auto growing = prefix_amplitudes(minimal_sequence(200, [](int k) { return double(k); }), 200);
  CHECK(growing.classification == Classification::diverging_exponent);
  CHECK(growing.exponent_unbounded);
  CHECK(growing.rows.back().amplitude == 0.0);
}

TEST_CASE("hs_indicator examples") {
  const auto bounded = hs_indicator(classical_sequence(400, one, [](int k) { return 1.0 + 1.0 / k; }, zero), 400);
  CHECK(bounded[399] - bounded[199] < 0.01 * bounded[199]);
  const auto linear = hs_indicator(classical_sequence(200, one, [](int) { return 2.0; }, zero), 200);
  const double per_block = linear[0];
  CHECK(per_block > 0);
  CHECK(rel_diff(linear[199], 200 * per_block) < 1e-12);
}

TEST_CASE("hs_distance_squared closed form for scalars") {
  // A/R = 2s / (2s + 2t).
  for (auto [s, t] : {std::pair{1.0, 2.0}, {0.5, 3.0}}) {
    const double d = (s - t) / (s + t);
    CHECK(rel_diff(hs_distance_squared(classical_diag(Vector::Constant(1, s)),
                                       classical_diag(Vector::Constant(1, t))),
                   d * d) < 1e-12);
  }
}

TEST_CASE("prefix amplitudes are nonincreasing") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto seq = classical_sequence(
        60, [&](int) { return rng.uniform(0.2, 3.0); }, [&](int) { return rng.uniform(0.2, 3.0); },
        [&](int) { return rng.normal(); });
    const auto report = prefix_amplitudes(seq, 60);
    for (std::size_t k = 1; k < report.rows.size(); ++k) {
      CHECK(report.rows[k].amplitude <= report.rows[k - 1].amplitude);
    }
  }
}

TEST_CASE("upto out of range") {
  const auto seq = classical_sequence(3, one, one, zero);
  CHECK_THROWS_AS(prefix_amplitudes(seq, 4), Error);
  CHECK_THROWS_AS(prefix_amplitudes(seq, 0), Error);
}

TEST_CASE("nested study on a block-diagonal problem reproduces prefix amplitudes") {
  const auto seq = classical_sequence(
      8, [](int k) { return 0.5 + 0.1 * k; }, [](int k) { return 1.0 + 0.3 / k; },
      [](int k) { return 0.2 * k; });
  Vector sd(8), td(8), lambda(8);
  for (int k = 0; k < 8; ++k) {
    sd(k) = 0.5 + 0.1 * (k + 1);
    td(k) = 1.0 + 0.3 / (k + 1);
    lambda(k) = 0.2 * (k + 1);
  }
  const auto nested = nested_study({classical_diag(sd), classical_diag(td), lambda});
  const auto prefix = prefix_amplitudes(seq, 8);
  for (int k = 0; k < 8; ++k) {
    CHECK(rel_diff(nested.table.rows[k].amplitude, prefix.rows[k].amplitude) < 1e-12);
    CHECK(std::abs(nested.table.rows[k].log_det_partial - prefix.rows[k].log_det_partial) < 1e-12);
  }
}

TEST_CASE("nested study on dense problems") {
  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const Frame f = trial % 2 == 0 ? Frame{3, 2} : Frame{4, 0};
    const NestedAmbient problem = random_ambient(rng, f);
    const auto report = nested_study(problem);
    REQUIRE(report.steps.size() == static_cast<std::size_t>(f.dim()));
    for (const auto& step : report.steps) {
      CHECK(std::abs(step.exponent_via_c - step.exponent_direct) <
            1e-9 * std::max(1.0, step.exponent_direct));
      CHECK(step.c_min >= 1.0 - kCSpectrumSlack);
      CHECK(step.c_max <= 2.0 + kCSpectrumSlack);
      CHECK(step.amplitude.value >= 0.0);
      CHECK(step.amplitude.value <= 1.0);
    }
    const double full = transition_amplitude(CoherentStateSpec(problem.s, problem.lambda),
                                             CoherentStateSpec(problem.t))
                            .value;
    CHECK(std::abs(report.steps.back().amplitude.value - full) < 1e-10);
    CHECK(report.projection_defect < 1e-9);
  }
}

TEST_CASE("nested study rejects a degenerate restriction") {
  Vector d(3);
  d << 0.0, 1.0, 1.0;
  try {
    nested_study({classical_diag(d), classical_diag(d), Vector::Zero(3)});
    FAIL("expected SingularStep");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularStep);
  }
}
