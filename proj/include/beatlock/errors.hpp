#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace beatlock {

// Base of everything the library throws on a violated contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Both arms enabled with identical AOM shifts: sidebands collapse onto teeth.
class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

class SampleBudgetExceeded : public Error {
 public:
  SampleBudgetExceeded(std::size_t requested, std::size_t budget)
      : Error("sample budget exceeded: " + std::to_string(requested) +
              " samples requested, budget is " + std::to_string(budget)),
        requested_(requested),
        budget_(budget) {}
  std::size_t requested() const noexcept { return requested_; }
  std::size_t budget() const noexcept { return budget_; }

 private:
  std::size_t requested_;
  std::size_t budget_;
};

class InsufficientSamples : public Error {
 public:
  explicit InsufficientSamples(double required_duration_s)
      : Error("insufficient samples for requested resolution bandwidth: need at least " +
              std::to_string(required_duration_s) + " s of data"),
        required_duration_(required_duration_s) {}
  double required_duration() const noexcept { return required_duration_; }

 private:
  double required_duration_;
};

class AliasingError : public Error {
 public:
  using Error::Error;
};

// The beat note left the loop's capture range at `sample`.
class LockLossError : public Error {
 public:
  LockLossError(std::size_t sample, double time_s, const std::string& what)
      : Error("lock lost at sample " + std::to_string(sample) + " (t = " +
              std::to_string(time_s) + " s): " + what),
        sample_(sample),
        time_(time_s) {}
  std::size_t sample() const noexcept { return sample_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t sample_;
  double time_;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Integrator step does not resolve the fastest dynamics.
class ResolutionError : public Error {
 public:
  ResolutionError(double dt, double max_dt)
      : Error("time step " + std::to_string(dt) + " s exceeds resolution limit " +
              std::to_string(max_dt) + " s"),
        dt_(dt),
        max_dt_(max_dt) {}
  double dt() const noexcept { return dt_; }
  double max_dt() const noexcept { return max_dt_; }

 private:
  double dt_;
  double max_dt_;
};

class BracketError : public Error {
 public:
  BracketError(double tau_low, double tau_high, double target)
      : Error("search bounds do not bracket target coherence time " + std::to_string(target) +
              " s: tau at lower bound = " + std::to_string(tau_low) +
              " s, tau at upper bound = " + std::to_string(tau_high) + " s"),
        tau_low_(tau_low),
        tau_high_(tau_high) {}
  double tau_at_low() const noexcept { return tau_low_; }
  double tau_at_high() const noexcept { return tau_high_; }

 private:
  double tau_low_;
  double tau_high_;
};

class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, std::size_t column, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Every invariant violation found in a config, reported together.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "validation failed (" + std::to_string(issues.size()) + " issue" +
                      (issues.size() == 1 ? "" : "s") + ")";
    for (const auto& i : issues) out += "\n  - " + i;
    return out;
  }
  std::vector<std::string> issues_;
};

}  // namespace beatlock
