#include "ccramp/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ccramp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(where, std::string("missing field \"") + key + "\"");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

long long integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<long long>();
}

Matrix read_matrix(const json& v, Eigen::Index n, const std::string& where) {
  Matrix m(n, n);
  if (!v.is_array()) fail(where, "expected an array");
  if (v.size() == static_cast<std::size_t>(n * n) && (n == 0 || !v.front().is_array())) {
    for (Eigen::Index i = 0; i < n * n; ++i) {
      m(i / n, i % n) = number(v[i], where + "[" + std::to_string(i) + "]");
    }
    return m;
  }
  if (v.size() != static_cast<std::size_t>(n)) {
    fail(where, "expected " + std::to_string(n * n) + " numbers or " + std::to_string(n) + " rows");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = v[i];
    const std::string rw = where + "[" + std::to_string(i) + "]";
    if (!row.is_array() || row.size() != static_cast<std::size_t>(n)) {
      fail(rw, "expected a row of " + std::to_string(n) + " numbers");
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = number(row[j], rw + "[" + std::to_string(j) + "]");
  }
  return m;
}

Vector read_vector(const json& v, Eigen::Index n, const std::string& where) {
  if (!v.is_array() || v.size() != static_cast<std::size_t>(n)) {
    fail(where, "expected " + std::to_string(n) + " numbers");
  }
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = number(v[i], where + "[" + std::to_string(i) + "]");
  return out;
}

PresymplecticSpace read_space(const json& obj, const std::string& where) {
  const auto n = integer(require(obj, "dim", where), where + ".dim");
  if (n < 1) fail(where + ".dim", "must be positive");
  Matrix sigma = obj.contains("sigma") ? read_matrix(obj.at("sigma"), n, where + ".sigma")
                                       : Matrix::Zero(n, n);
  if (sigma != -sigma.transpose()) fail(where + ".sigma", "sigma must be antisymmetric");
  return PresymplecticSpace(std::move(sigma));
}

ComplexMatrix read_covariance(const json& obj, const char* re_key, const char* im_key,
                              const PresymplecticSpace& space, double tol,
                              const std::string& where) {
  const Eigen::Index n = space.dim();
  ComplexMatrix m(n, n);
  m.real() = read_matrix(require(obj, re_key, where), n, where + "." + re_key);
  if (obj.contains(im_key)) {
    const Matrix im = read_matrix(obj.at(im_key), n, where + "." + im_key);
    const double dev = (im - 0.5 * space.sigma()).cwiseAbs().maxCoeff();
    if (dev > tol * std::max(1.0, m.cwiseAbs().maxCoeff())) {
      fail(where + "." + im_key, "must equal sigma/2 entrywise");
    }
    m.imag() = im;
  } else {
    m.imag() = 0.5 * space.sigma();
  }
  return m;
}

double power_term(double coef, double power, int k) {
  return coef == 0 ? 0.0 : coef * std::pow(static_cast<double>(k), power);
}

double get_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

TruncationSettings read_truncation(const json& obj, const ProblemFile& file,
                                   const std::string& where) {
  TruncationSettings ts;
  ts.options.unbounded_threshold =
      get_or(obj, "threshold", ts.options.unbounded_threshold, where);
  ts.options.cauchy_tol = get_or(obj, "cauchy_tol", ts.options.cauchy_tol, where);
  const std::string kind = require(obj, "kind", where).get<std::string>();

  if (kind == "nested") {
    ts.kind = TruncationSettings::Kind::nested;
    ts.ambient_s = require(obj, "S", where).get<std::string>();
    ts.ambient_t = require(obj, "T", where).get<std::string>();
    file.raw_state(ts.ambient_s);
    file.raw_state(ts.ambient_t);
    ts.upto = static_cast<int>(file.space.dim());
    ts.description = "nested ambient " + ts.ambient_s + "/" + ts.ambient_t;
    return ts;
  }
  if (kind != "sequence") fail(where + ".kind", "expected \"sequence\" or \"nested\"");

  if (obj.contains("family")) {
    const json& fam = obj.at("family");
    const std::string fw = where + ".family";
    const std::string type = require(fam, "type", fw).get<std::string>();
    const auto count = static_cast<int>(integer(require(fam, "count", fw), fw + ".count"));
    if (count < 1) fail(fw + ".count", "must be positive");
    const double shift_coef = get_or(fam, "shift_coef", 0.0, fw);
    const double shift_power = get_or(fam, "shift_power", 0.0, fw);
    auto shift = [=](int k) { return power_term(shift_coef, shift_power, k); };
    if (type == "classical") {
      const double s = get_or(fam, "s", 1.0, fw);
      const double t_base = get_or(fam, "t_base", 1.0, fw);
      const double t_coef = get_or(fam, "t_coef", 0.0, fw);
      const double t_power = get_or(fam, "t_power", 0.0, fw);
      try {
        ts.sequence = classical_sequence(
            count, [=](int) { return s; },
            [=](int k) { return t_base + power_term(t_coef, -t_power, k); }, shift);
      } catch (const Error& e) {
        fail(fw, e.what());
      }
      ts.description = "classical family";
    } else if (type == "minimal") {
      ts.sequence = minimal_sequence(count, shift);
      ts.description = "minimal-form family";
    } else {
      fail(fw + ".type", "expected \"classical\" or \"minimal\"");
    }
  } else {
    const json& blocks = require(obj, "blocks", where);
    if (!blocks.is_array() || blocks.empty()) fail(where + ".blocks", "expected a non-empty array");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const std::string bw = where + ".blocks[" + std::to_string(i) + "]";
      const PresymplecticSpace space = read_space(blocks[i], bw);
      try {
        auto s = validate_covariance(
            space, read_covariance(blocks[i], "S_re", "S_im", space, file.tolerance, bw),
            file.tolerance);
        auto t = validate_covariance(
            space, read_covariance(blocks[i], "T_re", "T_im", space, file.tolerance, bw),
            file.tolerance);
        Vector shift = blocks[i].contains("shift")
                           ? read_vector(blocks[i].at("shift"), space.dim(), bw + ".shift")
                           : Vector::Zero(space.dim());
        ts.sequence.blocks.push_back({std::move(s), std::move(t), std::move(shift), std::nullopt});
      } catch (const Error& e) {
        fail(bw, e.what());
      }
    }
    ts.description = "explicit blocks";
  }
  ts.upto = ts.sequence.size();
  if (obj.contains("upto")) {
    ts.upto = static_cast<int>(integer(obj.at("upto"), where + ".upto"));
    if (ts.upto < 1 || ts.upto > ts.sequence.size()) fail(where + ".upto", "out of range");
  }
  return ts;
}

}  // namespace

const RawState& ProblemFile::raw_state(const std::string& name) const {
  for (const auto& s : states) {
    if (s.name == name) return s;
  }
  throw ParseError("unknown state \"" + name + "\"");
}

CoherentStateSpec ProblemFile::state(const std::string& name) const {
  const RawState& raw = raw_state(name);
  return CoherentStateSpec(validate_covariance(space, raw.matrix, tolerance), raw.shift);
}

ProblemFile parse_problem(const std::string& text, double tolerance_override) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  try {
    ProblemFile file;
    file.version = static_cast<int>(integer(require(root, "version", "root"), "version"));
    if (file.version != kProblemFormatVersion) {
      fail("version", "unsupported format version " + std::to_string(file.version));
    }
    file.tolerance = get_or(root, "tolerance", kDefaultRelTol, "root");
    if (tolerance_override > 0) file.tolerance = tolerance_override;
    if (!(file.tolerance >= 0)) fail("tolerance", "must be nonnegative");
    file.space = read_space(require(root, "space", "root"), "space");

    const json& states = require(root, "states", "root");
    if (!states.is_array()) fail("states", "expected an array");
    for (std::size_t i = 0; i < states.size(); ++i) {
      const std::string where = "states[" + std::to_string(i) + "]";
      RawState raw;
      raw.name = require(states[i], "name", where).get<std::string>();
      for (const auto& other : file.states) {
        if (other.name == raw.name) fail(where + ".name", "duplicate state name \"" + raw.name + "\"");
      }
      raw.matrix = read_covariance(states[i], "S_re", "S_im", file.space, file.tolerance, where);
      raw.shift = states[i].contains("shift")
                      ? read_vector(states[i].at("shift"), file.space.dim(), where + ".shift")
                      : Vector::Zero(file.space.dim());
      file.states.push_back(std::move(raw));
    }

    if (root.contains("pairs")) {
      const json& pairs = root.at("pairs");
      if (!pairs.is_array()) fail("pairs", "expected an array");
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string where = "pairs[" + std::to_string(i) + "]";
        if (!pairs[i].is_array() || pairs[i].size() != 2) fail(where, "expected [name, name]");
        auto a = pairs[i][0].get<std::string>();
        auto b = pairs[i][1].get<std::string>();
        try {
          file.raw_state(a);
          file.raw_state(b);
        } catch (const ParseError& e) {
          fail(where, e.what());
        }
        file.pairs.emplace_back(std::move(a), std::move(b));
      }
    }

    if (root.contains("oracle")) {
      const json& o = root.at("oracle");
      if (o.contains("nodes")) file.oracle.nodes = static_cast<int>(integer(o.at("nodes"), "oracle.nodes"));
      if (o.contains("samples")) file.oracle.samples = integer(o.at("samples"), "oracle.samples");
      if (o.contains("seed")) {
        file.oracle.seed = static_cast<std::uint64_t>(integer(o.at("seed"), "oracle.seed"));
      }
    }
    if (root.contains("truncation")) {
      file.truncation = read_truncation(root.at("truncation"), file, "truncation");
    }
    return file;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed field: ") + e.what());
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
}

ProblemFile load_problem(const std::string& path, double tolerance_override) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str(), tolerance_override);
}

}  // namespace ccramp
