#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kslab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Amplitudes at or below this are treated as R = 0; the average phase is
// reported as undefined there.
inline constexpr double kTolR = 1e-12;

enum class ErrorCode {
  invalid_argument = 1,
  precondition = 2,
  cfl_violation = 3,
  numerical = 4,
  io = 5,
  config = 6,
  no_solution = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Maps an angle to [0, 2pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Maps an angle difference to (-pi, pi].
inline double wrap_signed(double a) {
  double r = wrap_angle(a);
  return r > kPi ? r - kTwoPi : r;
}

}  // namespace kslab
