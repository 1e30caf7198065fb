#include "ccramp/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccramp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ComplexMatrix minimal_form_matrix() {
  ComplexMatrix m(2, 2);
  m << 0.5, std::complex<double>(0.0, 0.5), std::complex<double>(0.0, -0.5), 0.5;
  return m;
}

double amplitude_from_logs(double log_det, double exponent) {
  if (std::isinf(log_det) || std::isinf(exponent)) return 0.0;
  return std::exp(0.5 * log_det - exponent);
}

struct PowerFit {
  bool ok = false;
  double log_c = 0;
  double p = 0;
};

// Least-squares fit of log|d_k| = log c - p log k.
PowerFit fit_power_law(const std::vector<double>& ks, const std::vector<double>& ds) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ds[i] != 0 && std::isfinite(ds[i])) {
      xs.push_back(std::log(ks[i]));
      ys.push_back(std::log(std::abs(ds[i])));
    }
  }
  PowerFit fit;
  if (xs.size() < 2) return fit;
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom <= 0) return fit;
  const double slope = (n * sxy - sx * sy) / denom;
  fit.ok = true;
  fit.p = -slope;
  fit.log_c = (sy - slope * sx) / n;
  return fit;
}

// Signed tail sum over steps > last for increments following the fit.
double tail_sum(const std::vector<double>& ks, const std::vector<double>& ds, double last,
                bool cauchy) {
  const bool all_zero = std::all_of(ds.begin(), ds.end(), [](double d) { return d == 0; });
  if (all_zero) return 0.0;
  double sign = 0;
  for (double d : ds) {
    if (d != 0) sign = d > 0 ? 1.0 : -1.0;
  }
  const PowerFit fit = fit_power_law(ks, ds);
  if (!fit.ok) return cauchy ? 0.0 : sign * kInf;
  if (fit.p <= 1.0) return sign * kInf;
  return sign * std::exp(fit.log_c) * std::pow(last + 0.5, 1.0 - fit.p) / (fit.p - 1.0);
}

// R-orthonormal basis of span(e_1..e_n) in R^N by modified Gram-Schmidt,
// pivoting on the largest remaining R-norm.
Matrix r_orthonormal_prefix(const Matrix& r, Eigen::Index n, int step) {
  const Eigen::Index big_n = r.rows();
  Matrix cand = Matrix::Identity(big_n, n);
  Matrix q(big_n, n);
  std::vector<bool> used(n, false);
  const double scale = r.diagonal().head(n).maxCoeff();
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index best = -1;
    double best_norm = -1;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (used[c]) continue;
      const double nrm = cand.col(c).dot(r * cand.col(c));
      if (nrm > best_norm) {
        best_norm = nrm;
        best = c;
      }
    }
    if (!(best_norm > kDefaultRelTol * scale)) {
      throw Error(ErrorCode::SingularStep, "R is degenerate on V_" + std::to_string(step));
    }
    used[best] = true;
    q.col(j) = cand.col(best) / std::sqrt(best_norm);
    const Vector rq = r * q.col(j);
    for (Eigen::Index c = 0; c < n; ++c) {
      if (!used[c]) cand.col(c) -= q.col(j) * rq.dot(cand.col(c));
    }
  }
  return q;
}

}  // namespace

ModeSequence classical_sequence(int count, const std::function<double(int)>& s,
                                const std::function<double(int)>& t,
                                const std::function<double(int)>& shift) {
  const auto space = PresymplecticSpace::classical(1);
  ModeSequence seq;
  seq.blocks.reserve(count);
  for (int k = 1; k <= count; ++k) {
    const double sk = s(k);
    const double tk = t(k);
    const double lk = shift(k);
    Vector lambda(1);
    lambda << lk;
    std::optional<BlockClosedForm> closed;
    if (sk > 0 && tk > 0) {
      // A = 2s, B = 2t.
      closed = BlockClosedForm{std::log(2.0 * std::sqrt(sk * tk) / (sk + tk)),
                               lk * lk / (4.0 * (sk + tk))};
    }
    seq.blocks.push_back({covariance_from_real_part(space, Matrix::Constant(1, 1, sk)),
                          covariance_from_real_part(space, Matrix::Constant(1, 1, tk)),
                          std::move(lambda), closed});
  }
  return seq;
}

ModeSequence minimal_sequence(int count, const std::function<double(int)>& shift) {
  const auto space = PresymplecticSpace::canonical(1);
  const CovarianceForm vacuum = validate_covariance(space, minimal_form_matrix());
  ModeSequence seq;
  seq.blocks.reserve(count);
  for (int k = 1; k <= count; ++k) {
    const double lk = shift(k);
    Vector lambda(2);
    lambda << lk, 0.0;
    // A = B = 1/2, so (A+B)^{-1}(lambda)/2 = |lambda|^2/2.
    seq.blocks.push_back({vacuum, vacuum, std::move(lambda), BlockClosedForm{0.0, 0.5 * lk * lk}});
  }
  return seq;
}

double hs_distance_squared(const CovarianceForm& s, const CovarianceForm& t) {
  const Form a = half_sum_sqrt_form(s.form());
  const Form b = half_sum_sqrt_form(t.form());
  const Form r = s.form() + conjugate_form(s.form()) + t.form() + conjugate_form(t.form());
  const ComplexMatrix diff = ratio_operator(a, r).matrix - ratio_operator(b, r).matrix;
  // The difference is R-self-adjoint, so tr(D^2) is its squared HS norm.
  return std::max(0.0, (diff * diff).trace().real());
}

std::vector<double> hs_indicator(const ModeSequence& seq, int upto) {
  if (upto < 0 || upto > seq.size()) throw Error(ErrorCode::InvalidArgument, "upto out of range");
  std::vector<double> out;
  out.reserve(upto);
  double running = 0;
  for (int k = 0; k < upto; ++k) {
    running += hs_distance_squared(seq.blocks[k].s, seq.blocks[k].t);
    out.push_back(running);
  }
  return out;
}

void classify(TruncationReport& report) {
  const auto& rows = report.rows;
  const auto& opt = report.options;
  if (rows.empty()) {
    report.classification = Classification::converged_positive;
    report.extrapolated_amplitude = 1.0;
    return;
  }
  const std::size_t k = rows.size();
  const std::size_t quarter = std::max<std::size_t>(1, k / 4);
  const double ld_base = k > quarter ? rows[k - 1 - quarter].log_det_partial : 0.0;
  const double ex_base = k > quarter ? rows[k - 1 - quarter].exponent_partial : 0.0;
  const TruncationRow& last = rows.back();

  const bool det_cauchy = std::isfinite(last.log_det_partial) &&
                          std::abs(last.log_det_partial - ld_base) < opt.cauchy_tol;
  const bool exp_cauchy = std::isfinite(last.exponent_partial) &&
                          std::abs(last.exponent_partial - ex_base) < opt.cauchy_tol;

  std::vector<double> ks;
  std::vector<double> dld;
  std::vector<double> dex;
  bool nondecreasing = true;
  for (std::size_t i = k - quarter; i < k; ++i) {
    const double prev_ld = i > 0 ? rows[i - 1].log_det_partial : 0.0;
    const double prev_ex = i > 0 ? rows[i - 1].exponent_partial : 0.0;
    ks.push_back(static_cast<double>(rows[i].step));
    dld.push_back(rows[i].log_det_partial - prev_ld);
    dex.push_back(rows[i].exponent_partial - prev_ex);
    if (dex.back() < 0) nondecreasing = false;
  }

  if (det_cauchy && exp_cauchy) {
    report.classification = Classification::converged_positive;
  } else if (!det_cauchy) {
    report.classification = Classification::vanishing_det;
  } else {
    report.classification = Classification::diverging_exponent;
  }
  report.exponent_unbounded = last.exponent_partial > opt.unbounded_threshold && nondecreasing &&
                              last.exponent_partial > ex_base;

  const double last_step = static_cast<double>(last.step);
  report.tail.log_det = std::isfinite(last.log_det_partial)
                            ? tail_sum(ks, dld, last_step, det_cauchy)
                            : -kInf;
  report.tail.exponent = std::isfinite(last.exponent_partial)
                             ? tail_sum(ks, dex, last_step, exp_cauchy)
                             : kInf;
  report.extrapolated_amplitude =
      amplitude_from_logs(last.log_det_partial + report.tail.log_det,
                          last.exponent_partial + report.tail.exponent);
}

TruncationReport prefix_amplitudes(const ModeSequence& seq, int upto,
                                   const TruncationOptions& options) {
  if (upto < 1 || upto > seq.size()) throw Error(ErrorCode::InvalidArgument, "upto out of range");
  TruncationReport report;
  report.options = options;
  report.rows.reserve(upto);
  double log_det = 0;
  double exponent = 0;
  double hs = 0;
  for (int k = 0; k < upto; ++k) {
    const ModeBlock& block = seq.blocks[k];
    const AmplitudeResult amp = transition_amplitude(CoherentStateSpec(block.s, block.shift),
                                                     CoherentStateSpec(block.t));
    double block_log_det = amp.log_det_factor;
    if (amp.case_tag == CaseTag::disjoint_kernel_mismatch) block_log_det = -kInf;
    double block_exponent = amp.exponent;
    if (amp.case_tag == CaseTag::disjoint_shift_on_kernel) block_exponent = kInf;
    log_det += block_log_det;
    exponent += block_exponent;
    hs += hs_distance_squared(block.s, block.t);
    report.rows.push_back({k + 1, log_det, exponent, amplitude_from_logs(log_det, exponent), hs});
  }
  classify(report);
  return report;
}

NestedReport nested_study(const NestedAmbient& problem, const TruncationOptions& options) {
  const CovarianceForm& s = problem.s;
  const CovarianceForm& t = problem.t;
  if (!(s.space() == t.space())) {
    throw Error(ErrorCode::DimensionMismatch, "states live on different presymplectic spaces");
  }
  const Eigen::Index big_n = s.dim();
  if (problem.lambda.size() != big_n) throw Error(ErrorCode::DimensionMismatch, "shift dimension");

  const Matrix r = s.inner_product() + t.inner_product();
  Eigen::LLT<Matrix> llt(r);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularStep, "ambient R is degenerate");
  }
  const Matrix l = llt.matrixL();
  const Matrix l_inv_t = l.transpose().triangularView<Eigen::Upper>().solve(
      Matrix::Identity(big_n, big_n));
  const ComplexMatrix rc = r.cast<std::complex<double>>();

  NestedReport out;
  out.table.options = options;
  std::vector<Matrix> projections;
  std::vector<ComplexVector> ys;

  for (Eigen::Index n = 1; n <= big_n; ++n) {
    const int step = static_cast<int>(n);
    const CovarianceForm sn = restrict_leading(s, n);
    const CovarianceForm tn = restrict_leading(t, n);
    const Vector lambda_n = problem.lambda.head(n);

    NestedStep rec;
    rec.n = step;
    rec.amplitude = transition_amplitude(CoherentStateSpec(sn, lambda_n), CoherentStateSpec(tn));

    const Form an = half_sum_sqrt_form(sn.form());
    const Form bn = half_sum_sqrt_form(tn.form());
    const Form rn = Form::trusted(rc.topLeftCorner(n, n), s.tol());
    if (rn.split().rank() != n) {
      throw Error(ErrorCode::SingularStep, "R_n is degenerate at n = " + std::to_string(step));
    }
    rec.exponent_direct = 0.5 * inverse_form(an + bn, lambda_n).value;

    const Matrix q = r_orthonormal_prefix(r, n, step);
    const Matrix g = q * q.transpose() * r;
    const ComplexMatrix gc = g.cast<std::complex<double>>();
    const ComplexMatrix ratio =
        ratio_operator(an.scaled(2.0), rn).matrix + ratio_operator(bn.scaled(2.0), rn).matrix;
    ComplexMatrix c = ComplexMatrix::Identity(big_n, big_n) - gc;
    c.topRows(n) += ratio * gc.topRows(n);

    // C_n is R-self-adjoint; its spectrum is that of L^T C L^{-T}.
    const ComplexMatrix c_hat =
        hermitize(l.transpose().cast<std::complex<double>>() * c * l_inv_t.cast<std::complex<double>>());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(c_hat, Eigen::EigenvaluesOnly);
    rec.c_min = es.eigenvalues()(0);
    rec.c_max = es.eigenvalues()(big_n - 1);
    if (rec.c_min < 1.0 - kCSpectrumSlack || rec.c_max > 2.0 + kCSpectrumSlack) {
      throw Error(ErrorCode::InternalCheck,
                  "spec(C_n) left [1, 2] at n = " + std::to_string(step));
    }

    // R(x_n, C_n x) = lambda(x) on V_n.
    const ComplexMatrix f = (rc * c).topLeftCorner(n, n);
    const ComplexVector coeffs =
        f.adjoint().partialPivLu().solve(lambda_n.cast<std::complex<double>>());
    rec.exponent_via_c = coeffs.dot(f * coeffs).real();

    ComplexVector x_n = ComplexVector::Zero(big_n);
    x_n.head(n) = coeffs;
    ys.push_back(c * x_n);
    projections.push_back(g);

    out.table.rows.push_back({step, rec.amplitude.log_det_factor, rec.amplitude.exponent,
                              rec.amplitude.value, hs_distance_squared(sn, tn)});
    out.steps.push_back(rec);
  }

  // g_m y_n = y_m for m <= n.
  double defect = 0;
  for (std::size_t nn = 0; nn < ys.size(); ++nn) {
    for (std::size_t m = 0; m <= nn; ++m) {
      const ComplexVector gy = projections[m].cast<std::complex<double>>() * ys[nn];
      defect = std::max(defect, (gy - ys[m]).cwiseAbs().maxCoeff());
    }
  }
  out.projection_defect = defect;
  classify(out.table);
  return out;
}

}  // namespace ccramp
