#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace xcav::cli {

inline constexpr const char* kModelVersion = "1.0.0";
inline constexpr const char* kOracleVersion = "1.0.0";

enum class Command { angles, scan, rocking, collective, fano, modes, oracle, compare, calibrate };

enum ExitCode : int { ok = 0, config_error = 2, numerical_error = 3 };

struct Grid {
  double min = 0.0, max = 0.0;
  std::size_t count = 1;
  std::vector<double> values() const;
};

/// Upper bound on delta x phi points for one run.
inline constexpr std::size_t kMaxGridPoints = 10'000'000;

struct RunConfig {
  Command command = Command::scan;
  std::string spec_path;
  Grid delta{-40.0, 40.0, 161};
  Grid phi_mrad{2.0, 4.0, 201};
  std::string output;          // empty: stdout
  std::string slicing = "layer";  // "layer", "auto" or a maximum slice in nm
  std::optional<double> default_scale;
  double calibration = 1.0;
  unsigned threads = 1;

  std::size_t mode = 3;           // fano: 1-based guided-mode index
  double window_mrad = 0.25;      // fano: half-width around the mode angle
  std::optional<double> phi_center_mrad;
  std::optional<std::size_t> layer;
  double phi_single_mrad = 0.0;   // modes
  double dark_threshold = 0.02;
  std::optional<double> kappa;    // oracle
  std::optional<double> calibrate_at_mrad;
  double oracle_slice = 0.3;
  std::string reference;          // calibrate
  std::string model_out, oracle_out;  // compare
};

/// Parses arguments and runs. Diagnostics go to `err` as a single line:
///   error=<config|numerical> exit=<code> reason=<text>
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Executes an already parsed configuration; throws on failure.
void execute(const RunConfig& config, std::ostream& out);

}  // namespace xcav::cli
