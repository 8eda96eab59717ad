#pragma once

#include <cmath>
#include <numbers>

namespace handshape {

struct SinCos {
  double sin = 0.0;
  double cos = 1.0;
};

/// sin/cos of an angle in degrees; exact at multiples of 90.
inline SinCos sincos_degrees(double degrees) {
  const double wrapped = std::fmod(degrees, 360.0);
  const double d = wrapped < 0.0 ? wrapped + 360.0 : wrapped;
  if (d == 0.0) return {0.0, 1.0};
  if (d == 90.0) return {1.0, 0.0};
  if (d == 180.0) return {0.0, -1.0};
  if (d == 270.0) return {-1.0, 0.0};
  const double rad = d * std::numbers::pi / 180.0;
  return {std::sin(rad), std::cos(rad)};
}

inline double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }
inline double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

}  // namespace handshape
