#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tse {

/// Thrown when a numeric evaluation produces a non-finite intermediate.
/// `where` names the operation or network location that overflowed.
class NumericError : public std::runtime_error {
public:
  NumericError(const std::string& where, const std::string& what)
      : std::runtime_error(what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

private:
  std::string where_;
};

/// Thrown when a recursive estimator (EKF) produces non-finite state;
/// carries the time-step index at which it happened.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(int step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  int step() const noexcept { return step_; }

private:
  int step_;
};

/// Thrown on malformed input files; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
  ParseError(long line, const std::string& what)
      : std::runtime_error(what), line_(line) {}
  long line() const noexcept { return line_; }

private:
  long line_;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace tse
