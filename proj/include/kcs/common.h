#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kcs {

// All simulated and recorded times are integer microseconds.
using Micros = std::int64_t;

constexpr Micros kMicrosPerMilli = 1000;
constexpr Micros kMicrosPerSecond = 1000000;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. line() is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? what + ", line " + std::to_string(line) : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Well-formed records that violate a cross-record rule.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// num / den rounded half up; num >= 0, den > 0.
constexpr std::int64_t DivRoundHalfUp(std::int64_t num, std::int64_t den) {
  return (2 * num + den) / (2 * den);
}

// Nearest integer microsecond, halves away from zero.
Micros RoundMicros(double us);

// printf-style fixed formatting, independent of the global locale.
std::string FormatFixed(double value, int decimals);

}  // namespace kcs
