#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" CCRAMP_CLI_PATH "\" " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const char* name) { return std::string("\"" CCRAMP_DATA_DIR "/") + name + "\""; }

double field(const std::string& text, const std::string& key) {
  const std::string needle = key + " = ";
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  return std::strtod(text.c_str() + pos + needle.size(), nullptr);
}

bool contains(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("validate exit codes") {
  const Run ok = run("validate --input " + data("vacuum.json"));
  CHECK(ok.code == 0);
  CHECK(contains(ok.out, "state vacuum: valid"));

  const Run bad = run("validate --input " + data("not_psd.json"));
  CHECK(bad.code == 1);
  CHECK(contains(bad.out, "state too_narrow: invalid (NotPSD"));

  CHECK(run("validate --input " + data("bad_sigma.json")).code == 3);
  CHECK(run("validate --input " + data("missing.json")).code == 3);
  CHECK(run("validate").code == 3);
  CHECK(run("no-such-command --input " + data("vacuum.json")).code == 3);
}

TEST_CASE("amplitude values") {
  const Run same = run("amplitude --input " + data("vacuum.json") + " --pair vacuum:vacuum");
  CHECK(same.code == 0);
  CHECK(field(same.out, "value") == 1.0);

  const Run shifted = run("amplitude --input " + data("vacuum.json") + " --pair vacuum:displaced");
  CHECK(shifted.code == 0);
  CHECK(std::abs(field(shifted.out, "value") - std::exp(-0.5)) < 1e-15);

  const Run disjoint = run("amplitude --input " + data("example.json") + " --pair vacuum:sharp");
  CHECK(disjoint.code == 0);
  CHECK(field(disjoint.out, "value") == 0.0);
  CHECK(contains(disjoint.out, "case_tag = disjoint_kernel_mismatch"));

  const Run log_only = run("amplitude --log --input " + data("vacuum.json") + " --pair vacuum:displaced");
  CHECK_FALSE(contains(log_only.out, "\nvalue = "));
  CHECK(std::abs(field(log_only.out, "log_value") + 0.5) < 1e-15);

  CHECK(run("amplitude --input " + data("vacuum.json") + " --pair vacuum:nobody").code == 3);
  CHECK(run("amplitude --input " + data("not_psd.json")).code == 1);
}

TEST_CASE("amplitude JSON records") {
  const Run r = run("amplitude --json --input " + data("example.json"));
  CHECK(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec.contains("case_tag"));
    CHECK(rec.contains("tolerance"));
    ++count;
  }
  CHECK(count == 7);
}

TEST_CASE("oracle-check exit codes") {
  const Run ok = run("oracle-check --input " + data("vacuum.json") + " --pair vacuum:displaced --samples 20000");
  CHECK(ok.code == 0);
  CHECK(contains(ok.out, "status = ok"));
  CHECK(field(ok.out, "quadrature_rel_dev") <= 1e-6);

  // Too few nodes for a far shift: the quadrature misses the formula.
  CHECK(run("oracle-check --input " + data("far_shift.json")).code == 2);

  // Degenerate pair: the integral is undefined unless reduced.
  const std::string pair = " --pair sharp:sharp_squeezed --samples 20000";
  CHECK(run("oracle-check --input " + data("example.json") + pair).code == 2);
  CHECK(run("oracle-check --reduce --input " + data("example.json") + pair).code == 0);
}

TEST_CASE("truncation-study writes a CSV") {
  const std::string csv_path = "cli_truncation_test.csv";
  const Run r = run("truncation-study --input " + data("example.json") + " --output " + csv_path);
  CHECK(r.code == 0);
  CHECK(contains(r.out, "classification = converged_positive"));
  std::ifstream in(csv_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,log_det_partial,exponent_partial,amplitude,hs_partial,classification");
  int rows = 0;
  std::string line, last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
  }
  CHECK(rows == 200);
  CHECK(last.substr(last.rfind(',') + 1) == "converged_positive");
  std::remove(csv_path.c_str());

  const Run unbounded = run("truncation-study --input " + data("unbounded_shift.json"));
  CHECK(contains(unbounded.out, "exponent_unbounded = true"));
  const Run nested = run("truncation-study --input " + data("nested.json"));
  CHECK(nested.code == 0);
  CHECK(field(nested.out, "exponent_route_gap") < 1e-9);
  CHECK(run("truncation-study --input " + data("vacuum.json")).code == 3);
}

TEST_CASE("batch is deterministic and independent of --jobs") {
  const std::string args = "batch --input " + data("example.json") + " --samples 20000";
  const Run first = run(args);
  const Run second = run(args);
  const Run parallel = run(args + " --jobs 4");
  CHECK(first.code == 0);
  CHECK(first.out == second.out);
  CHECK(first.out == parallel.out);
  CHECK(contains(first.out, "seed = 20240611"));
  CHECK(contains(first.out, "## truncation-study"));
  CHECK(run(args + " --seed 5").out != first.out);
}

TEST_CASE("tolerance override from the environment") {
  const Run r = run("validate --input " + data("vacuum.json"), "CCR_AMPLITUDE_TOL=1e-6");
  CHECK(contains(r.out, "tolerance = 9.9999999999999995e-07"));
}
