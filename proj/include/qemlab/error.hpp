#pragma once

#include <stdexcept>
#include <string>

namespace qemlab {

/// Process exit codes used by the command line runner.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  non_convergence = 3,
  extinction = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code = ExitCode::config)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid input or configuration. `diagnostic` is a stable short code
/// (e.g. "E_RESOLUTION") that scripts can match on.
class ConfigError : public Error {
 public:
  ConfigError(std::string diagnostic, const std::string& what)
      : Error(diagnostic + ": " + what, ExitCode::config), diagnostic_(std::move(diagnostic)) {}
  const std::string& diagnostic() const noexcept { return diagnostic_; }

 private:
  std::string diagnostic_;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double last_residual)
      : Error(what + " (last residual " + std::to_string(last_residual) + ")",
              ExitCode::non_convergence),
        residual_(last_residual) {}
  double last_residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Numerical degeneracy that is not a convergence failure (zero matrix,
/// eigenvectors with disjoint supports).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what, ExitCode::non_convergence) {}
};

class EnsembleExtinct : public Error {
 public:
  explicit EnsembleExtinct(long time)
      : Error("ensemble extinct at time " + std::to_string(time), ExitCode::extinction),
        time_(time) {}
  long extinction_time() const noexcept { return time_; }

 private:
  long time_;
};

}  // namespace qemlab
