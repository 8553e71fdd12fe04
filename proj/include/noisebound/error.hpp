#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace noisebound {

enum class ErrorKind {
  degenerate_parameter,
  singular_matrix,
  divergence,
  escape,
  no_convergence,
  collapsed_orbit,
  not_a_fixed_point,
  not_a_saddle,
  empty_input,
  ill_conditioned,
  invalid_argument,
  no_transition,
  no_fold,
  indicator_not_monotone,
  non_monotone_input,
  divergent_series,
  insufficient_data,
  lost_branch,
  config,
  io,
};

std::string_view to_string(ErrorKind kind);

// All numerical failures surface as Error; the kind drives CLI exit codes and
// lets callers (continuation, sweeps) tell recoverable failures apart.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace noisebound
