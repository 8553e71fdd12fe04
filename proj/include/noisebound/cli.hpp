#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "noisebound/config.hpp"

namespace noisebound {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitEscape = 4;

int exit_code(ErrorKind kind);

struct CliOptions {
  std::string command;  // attractor | boundary | sweep | fit-scaling
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> input;  // fit-scaling: CSV of a_i
};

// Loads and validates the configuration, applies the overrides, runs the
// command and returns the process exit code. Output files are only created
// after validation succeeded. Progress goes to log, diagnostics to err.
int run_command(const CliOptions& opts, std::ostream& log, std::ostream& err);

// Reads "a" values, one per row, or "i,a" rows; a header line is skipped.
std::vector<std::pair<int, double>> read_disappearances_csv(std::istream& in);

}  // namespace noisebound
