// ccr-amplitude: batch front end for transition amplitudes between coherent
// states, their quadrature / Monte-Carlo cross-checks and truncation studies.
//
// Exit codes: 0 success, 1 validation failure, 2 oracle mismatch,
// 3 I/O or parse error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ccramp/amplitude.hpp"
#include "ccramp/oracle.hpp"
#include "ccramp/problem_io.hpp"
#include "ccramp/truncation.hpp"
#include "json.hpp"

namespace {

using namespace ccramp;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kValidation = 1, kOracleMismatch = 2, kParse = 3 };

struct Flags {
  std::string input;
  std::string pair;
  std::string output;
  double rtol = 1e-6;
  int nodes = 0;
  long long samples = 0;
  long long seed = -1;
  bool reduce = false;
  bool log_only = false;
  bool as_json = false;
  int jobs = 1;
};

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json jnum(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}

// Outcome of one unit of work; text is printed in input order.
struct Outcome {
  std::string text;
  int code = kOk;
};

double tolerance_from_env() {
  if (const char* env = std::getenv("CCR_AMPLITUDE_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0) return v;
  }
  return 0;
}

OracleSettings effective_oracle(const ProblemFile& file, const Flags& flags) {
  OracleSettings o = file.oracle;
  if (flags.nodes > 0) o.nodes = flags.nodes;
  if (flags.samples > 0) o.samples = flags.samples;
  if (flags.seed >= 0) o.seed = static_cast<std::uint64_t>(flags.seed);
  return o;
}

std::vector<std::pair<std::string, std::string>> selected_pairs(const ProblemFile& file,
                                                                const Flags& flags) {
  if (flags.pair.empty()) return file.pairs;
  const auto colon = flags.pair.find(':');
  if (colon == std::string::npos) throw ParseError("--pair expects NAME:NAME");
  std::pair<std::string, std::string> p{flags.pair.substr(0, colon), flags.pair.substr(colon + 1)};
  file.raw_state(p.first);
  file.raw_state(p.second);
  return {p};
}

template <typename Work>
std::vector<Outcome> run_ordered(std::size_t count, int jobs, Work work) {
  std::vector<Outcome> out(count);
  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) out[i] = work(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) out[i] = work(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

int emit(const std::vector<Outcome>& outcomes) {
  int code = kOk;
  for (const auto& o : outcomes) {
    std::cout << o.text;
    code = std::max(code, o.code);
  }
  return code;
}

std::string header(const char* command, const ProblemFile& file) {
  std::ostringstream os;
  os << "# ccr-amplitude " << command << "\n"
     << "tolerance = " << num(file.tolerance) << "\n";
  return os.str();
}

// ---- validate ------------------------------------------------------------

Outcome validate_state(const ProblemFile& file, const RawState& raw) {
  Outcome o;
  try {
    file.state(raw.name);
    o.text = "state " + raw.name + ": valid\n";
  } catch (const Error& e) {
    o.text = "state " + raw.name + ": invalid (" + e.what() + ")\n";
    o.code = kValidation;
  }
  return o;
}

int cmd_validate(const ProblemFile& file, const Flags& flags) {
  std::cout << header("validate", file);
  return emit(run_ordered(file.states.size(), flags.jobs,
                          [&](std::size_t i) { return validate_state(file, file.states[i]); }));
}

// ---- amplitude -----------------------------------------------------------

json amplitude_json(const std::string& pair, const AmplitudeResult& r, double tol) {
  return json{{"pair", pair},
              {"value", jnum(r.value)},
              {"log_value", jnum(r.log_value)},
              {"det_factor", jnum(r.det_factor)},
              {"exponent", jnum(r.exponent)},
              {"case_tag", std::string(to_string(r.case_tag))},
              {"tolerance", tol}};
}

Outcome amplitude_outcome(const ProblemFile& file, const std::pair<std::string, std::string>& p,
                          const Flags& flags) {
  Outcome o;
  const std::string name = p.first + ":" + p.second;
  std::ostringstream os;
  try {
    const AmplitudeResult r = transition_amplitude(file.state(p.first), file.state(p.second));
    if (flags.as_json) {
      json j = amplitude_json(name, r, file.tolerance);
      if (flags.log_only) {
        j.erase("value");
        j.erase("det_factor");
      }
      os << j.dump() << "\n";
    } else {
      os << "pair = " << name << "\n";
      if (!flags.log_only) os << "value = " << num(r.value) << "\n";
      os << "log_value = " << num(r.log_value) << "\n";
      if (!flags.log_only) os << "det_factor = " << num(r.det_factor) << "\n";
      os << "log_det_factor = " << num(r.log_det_factor) << "\n"
         << "exponent = " << num(r.exponent) << "\n"
         << "case_tag = " << to_string(r.case_tag) << "\n";
    }
  } catch (const Error& e) {
    os << "pair = " << name << "\nerror = " << e.what() << "\n";
    o.code = kValidation;
  }
  o.text = os.str();
  return o;
}

int cmd_amplitude(const ProblemFile& file, const Flags& flags) {
  const auto pairs = selected_pairs(file, flags);
  if (!flags.as_json) std::cout << header("amplitude", file);
  return emit(run_ordered(pairs.size(), flags.jobs,
                          [&](std::size_t i) { return amplitude_outcome(file, pairs[i], flags); }));
}

// ---- oracle-check --------------------------------------------------------

Outcome oracle_outcome(const ProblemFile& file, const std::pair<std::string, std::string>& p,
                       const Flags& flags, const OracleSettings& settings, bool reduce) {
  Outcome o;
  const std::string name = p.first + ":" + p.second;
  json rec{{"pair", name},
           {"tolerance", file.tolerance},
           {"rtol", flags.rtol},
           {"seed", settings.seed},
           {"samples", settings.samples}};
  try {
    const CoherentStateSpec a = file.state(p.first);
    const CoherentStateSpec b = file.state(p.second);
    const AmplitudeResult formula = transition_amplitude(a, b);
    rec["formula"] = jnum(formula.value);
    rec["case_tag"] = std::string(to_string(formula.case_tag));

    CovarianceForm s = a.covariance;
    CovarianceForm t = b.covariance;
    Vector lambda = a.shift - b.shift;
    bool run = true;
    if (reduce) {
      const QuotientReduction red = reduce_pair(s, t, lambda);
      rec["reduction"] = std::string(to_string(red.verdict));
      if (red.verdict == ReductionVerdict::reducible) {
        s = *red.reduced_s;
        t = *red.reduced_t;
        lambda = red.reduced_shift;
      } else {
        run = false;  // disjoint: the formula value 0 needs no integral
      }
    }
    if (run) {
      const bool use_quadrature = s.dim() <= kMaxQuadratureDim;
      double deviation = 0;
      if (use_quadrature) {
        const QuadratureResult q = overlap_quadrature(s, t, lambda, settings.nodes);
        deviation = std::abs(formula.value - q.value) / std::max(formula.value, 1e-300);
        rec["quadrature"] = jnum(q.value);
        rec["nodes"] = q.nodes_per_dim;
        rec["quadrature_rel_dev"] = jnum(deviation);
      } else {
        rec["quadrature"] = "skipped";
        rec["nodes"] = 0;
      }
      const MonteCarloResult mc = overlap_monte_carlo(s, t, lambda, settings.samples, settings.seed);
      rec["monte_carlo"] = jnum(mc.estimate);
      rec["monte_carlo_stderr"] = jnum(mc.standard_error);
      const double mc_dev = std::abs(formula.value - mc.estimate);
      rec["monte_carlo_rel_dev"] = jnum(mc_dev / std::max(formula.value, 1e-300));
      const bool ok = use_quadrature ? deviation <= flags.rtol : mc_dev <= 4.0 * mc.standard_error;
      rec["status"] = ok ? "ok" : "mismatch";
      if (!ok) o.code = kOracleMismatch;
    } else {
      rec["status"] = "ok";
    }
  } catch (const Error& e) {
    rec["status"] = "error";
    rec["error"] = e.what();
    o.code = e.code() == ErrorCode::DegenerateOracle ? kOracleMismatch : kValidation;
  }

  std::ostringstream os;
  if (flags.as_json) {
    os << rec.dump() << "\n";
  } else {
    for (const auto& [key, value] : rec.items()) {
      os << key << " = " << (value.is_string() ? value.get<std::string>()
                             : value.is_number_float() ? num(value.get<double>())
                                                       : value.dump())
         << "\n";
    }
  }
  o.text = os.str();
  return o;
}

int cmd_oracle_check(const ProblemFile& file, const Flags& flags) {
  const auto pairs = selected_pairs(file, flags);
  const OracleSettings settings = effective_oracle(file, flags);
  if (!flags.as_json) std::cout << header("oracle-check", file);
  return emit(run_ordered(pairs.size(), flags.jobs, [&](std::size_t i) {
    return oracle_outcome(file, pairs[i], flags, settings, flags.reduce);
  }));
}

// ---- truncation-study ----------------------------------------------------

std::string truncation_csv(const TruncationReport& report) {
  std::ostringstream os;
  os << "step,log_det_partial,exponent_partial,amplitude,hs_partial,classification\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    os << r.step << "," << num(r.log_det_partial) << "," << num(r.exponent_partial) << ","
       << num(r.amplitude) << "," << num(r.hs_partial) << ",";
    if (i + 1 == report.rows.size()) os << to_string(report.classification);
    os << "\n";
  }
  return os.str();
}

Outcome truncation_outcome(const ProblemFile& file, const Flags& flags, bool write_csv_inline) {
  Outcome o;
  std::ostringstream os;
  const TruncationSettings& ts = *file.truncation;
  os << "truncation = " << ts.description << "\n"
     << "threshold = " << num(ts.options.unbounded_threshold) << "\n"
     << "cauchy_tol = " << num(ts.options.cauchy_tol) << "\n";
  try {
    TruncationReport report;
    if (ts.kind == TruncationSettings::Kind::sequence) {
      report = prefix_amplitudes(ts.sequence, ts.upto, ts.options);
    } else {
      const CoherentStateSpec a = file.state(ts.ambient_s);
      const CoherentStateSpec b = file.state(ts.ambient_t);
      const NestedReport nested =
          nested_study({a.covariance, b.covariance, a.shift - b.shift}, ts.options);
      double gap = 0;
      double c_min = 2;
      double c_max = 1;
      for (const auto& st : nested.steps) {
        gap = std::max(gap, std::abs(st.exponent_direct - st.exponent_via_c));
        c_min = std::min(c_min, st.c_min);
        c_max = std::max(c_max, st.c_max);
      }
      os << "exponent_route_gap = " << num(gap) << "\n"
         << "c_spectrum_min = " << num(c_min) << "\n"
         << "c_spectrum_max = " << num(c_max) << "\n"
         << "projection_defect = " << num(nested.projection_defect) << "\n";
      report = nested.table;
    }
    os << "steps = " << report.rows.size() << "\n"
       << "classification = " << to_string(report.classification) << "\n"
       << "exponent_unbounded = " << (report.exponent_unbounded ? "true" : "false") << "\n"
       << "tail_log_det = " << num(report.tail.log_det) << "\n"
       << "tail_exponent = " << num(report.tail.exponent) << "\n"
       << "extrapolated_amplitude = " << num(report.extrapolated_amplitude) << "\n";
    const std::string csv = truncation_csv(report);
    if (!flags.output.empty()) {
      std::ofstream out(flags.output);
      if (!out) throw ParseError("cannot write " + flags.output);
      out << csv;
      os << "csv = " << flags.output << "\n";
    } else if (write_csv_inline) {
      os << csv;
    }
  } catch (const Error& e) {
    os << "error = " << e.what() << "\n";
    o.code = kValidation;
  }
  o.text = os.str();
  return o;
}

int cmd_truncation(const ProblemFile& file, const Flags& flags) {
  if (!file.truncation) throw ParseError("truncation: the input file has no \"truncation\" section");
  std::cout << header("truncation-study", file);
  return emit({truncation_outcome(file, flags, true)});
}

// ---- batch ---------------------------------------------------------------

int cmd_batch(const ProblemFile& file, const Flags& flags) {
  const OracleSettings settings = effective_oracle(file, flags);
  std::cout << header("batch", file) << "nodes = " << settings.nodes << "\n"
            << "samples = " << settings.samples << "\n"
            << "seed = " << settings.seed << "\n"
            << "rtol = " << num(flags.rtol) << "\n";
  int code = kOk;
  std::cout << "## validate\n";
  code = std::max(code, emit(run_ordered(file.states.size(), flags.jobs, [&](std::size_t i) {
                    return validate_state(file, file.states[i]);
                  })));
  const auto& pairs = file.pairs;
  std::cout << "## amplitude\n";
  code = std::max(code, emit(run_ordered(pairs.size(), flags.jobs, [&](std::size_t i) {
                    return amplitude_outcome(file, pairs[i], flags);
                  })));
  std::cout << "## oracle-check\n";
  code = std::max(code, emit(run_ordered(pairs.size(), flags.jobs, [&](std::size_t i) {
                    return oracle_outcome(file, pairs[i], flags, settings, true);
                  })));
  if (file.truncation) {
    std::cout << "## truncation-study\n";
    code = std::max(code, emit({truncation_outcome(file, flags, true)}));
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transition amplitudes between square roots of coherent CCR states"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&flags](CLI::App* sub) {
    sub->add_option("--input", flags.input, "problem file (JSON)")->required();
    sub->add_option("--jobs", flags.jobs, "parallel workers across pairs")->check(CLI::Range(1, 64));
  };
  auto add_pair = [&flags](CLI::App* sub) {
    sub->add_option("--pair", flags.pair, "NAME:NAME (default: every pair in the file)");
    sub->add_flag("--json", flags.as_json, "machine-readable records");
  };
  auto add_oracle = [&flags](CLI::App* sub) {
    sub->add_option("--rtol", flags.rtol, "relative tolerance for the quadrature check");
    sub->add_option("--nodes", flags.nodes, "Gauss-Hermite nodes per dimension");
    sub->add_option("--samples", flags.samples, "Monte-Carlo samples");
    sub->add_option("--seed", flags.seed, "Monte-Carlo seed");
  };

  auto* validate = app.add_subcommand("validate", "validate every state in a problem file");
  add_common(validate);

  auto* amplitude = app.add_subcommand("amplitude", "evaluate the amplitude formula");
  add_common(amplitude);
  add_pair(amplitude);
  amplitude->add_flag("--log", flags.log_only, "print log-space quantities only");

  auto* oracle = app.add_subcommand("oracle-check", "compare the formula with quadrature and Monte Carlo");
  add_common(oracle);
  add_pair(oracle);
  add_oracle(oracle);
  oracle->add_flag("--reduce", flags.reduce, "quotient degenerate pairs before integrating");

  auto* truncation = app.add_subcommand("truncation-study", "run the file's truncation study");
  add_common(truncation);
  truncation->add_option("--output", flags.output, "write the CSV table here instead of stdout");

  auto* batch = app.add_subcommand("batch", "validate, evaluate and cross-check everything");
  add_common(batch);
  add_oracle(batch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }

  try {
    const ProblemFile file = load_problem(flags.input, tolerance_from_env());
    if (validate->parsed()) return cmd_validate(file, flags);
    if (amplitude->parsed()) return cmd_amplitude(file, flags);
    if (oracle->parsed()) return cmd_oracle_check(file, flags);
    if (truncation->parsed()) return cmd_truncation(file, flags);
    if (batch->parsed()) return cmd_batch(file, flags);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  }
  return kParse;
}
