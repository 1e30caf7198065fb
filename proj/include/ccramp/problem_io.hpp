#pragma once

// JSON problem files for the command-line front end.
//
//   {
//     "version": 1,
//     "tolerance": 1e-10,                        (optional)
//     "space": {"dim": 2, "sigma": [0, 1, -1, 0]},
//     "states": [{"name": "vac", "S_re": [...], "S_im": [...], "shift": [...]}],
//     "pairs": [["vac", "shifted"]],
//     "oracle": {"nodes": 60, "samples": 100000, "seed": 1},
//     "truncation": {...}                        (optional)
//   }
//
// Matrices are row-major, either flat (n*n numbers) or nested rows. "S_im"
// may be omitted and then defaults to sigma/2.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ccramp/oracle.hpp"
#include "ccramp/truncation.hpp"

namespace ccramp {

inline constexpr int kProblemFormatVersion = 1;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RawState {
  std::string name;
  ComplexMatrix matrix;
  Vector shift;
};

struct OracleSettings {
  int nodes = kDefaultQuadratureNodes;
  long long samples = 100000;
  std::uint64_t seed = 1;
};

struct TruncationSettings {
  enum class Kind { sequence, nested };
  Kind kind = Kind::sequence;
  int upto = 0;
  TruncationOptions options;
  std::string description;
  /// Filled for Kind::sequence.
  ModeSequence sequence;
  /// Names of the ambient states for Kind::nested; lambda = shift_S - shift_T.
  std::string ambient_s;
  std::string ambient_t;
};

struct ProblemFile {
  int version = kProblemFormatVersion;
  double tolerance = kDefaultRelTol;
  PresymplecticSpace space = PresymplecticSpace::classical(0);
  std::vector<RawState> states;
  std::vector<std::pair<std::string, std::string>> pairs;
  OracleSettings oracle;
  std::optional<TruncationSettings> truncation;

  const RawState& raw_state(const std::string& name) const;
  /// Validated state; throws ccramp::Error on a violated condition.
  CoherentStateSpec state(const std::string& name) const;
};

/// Throws ParseError with field context. Structural problems (shape,
/// non-antisymmetric sigma, S_im != sigma/2) are rejected here; PSD-ness is
/// left to validation.
ProblemFile parse_problem(const std::string& text, double tolerance_override = 0);
ProblemFile load_problem(const std::string& path, double tolerance_override = 0);

}  // namespace ccramp
