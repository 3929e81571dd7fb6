// Copyright 2026 The perchlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PERCHLAB_VEC2_HPP_
#define PERCHLAB_VEC2_HPP_

#include <cmath>

namespace perchlab {

// Planar vector in the robot's X-Z plane: x horizontal, z vertical (up).
struct Vec2 {
  double x{0.0};
  double z{0.0};
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
inline Vec2 operator-(Vec2 a) { return {-a.x, -a.z}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.z}; }
inline Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.z}; }
inline Vec2& operator+=(Vec2& a, Vec2 b) { a.x += b.x; a.z += b.z; return a; }
inline Vec2& operator-=(Vec2& a, Vec2 b) { a.x -= b.x; a.z -= b.z; return a; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.z * b.z; }

// Scalar 2D cross product a.x*b.z - a.z*b.x (the out-of-plane component).
inline double cross(Vec2 a, Vec2 b) { return a.x * b.z - a.z * b.x; }

inline double norm(Vec2 a) { return std::hypot(a.x, a.z); }
inline double norm_sq(Vec2 a) { return a.x * a.x + a.z * a.z; }

inline Vec2 normalized(Vec2 a) {
  const double n = norm(a);
  return n > 0.0 ? Vec2{a.x / n, a.z / n} : Vec2{0.0, 0.0};
}

// Counterclockwise rotation by angle (positive = nose-up pitch in X-Z).
inline Vec2 rotate(Vec2 a, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * a.x - s * a.z, s * a.x + c * a.z};
}

// 90-degree counterclockwise rotation, J*a.
inline Vec2 perp(Vec2 a) { return {-a.z, a.x}; }

inline bool finite(Vec2 a) { return std::isfinite(a.x) && std::isfinite(a.z); }

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  const double two_pi = 6.283185307179586476925286766559;
  a = std::fmod(a, two_pi);
  if (a <= -3.1415926535897932384626433832795) a += two_pi;
  if (a > 3.1415926535897932384626433832795) a -= two_pi;
  return a;
}

inline constexpr double kPi = 3.1415926535897932384626433832795;
inline constexpr double kGravity = 9.81;  // m/s^2

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace perchlab

#endif  // PERCHLAB_VEC2_HPP_
