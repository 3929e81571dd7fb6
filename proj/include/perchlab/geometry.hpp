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

#ifndef PERCHLAB_GEOMETRY_HPP_
#define PERCHLAB_GEOMETRY_HPP_

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "perchlab/vec2.hpp"

namespace perchlab {

// Planar robot description. The four legs of the physical quadrotor collapse
// to a mirrored front/rear pad pair in the X-Z plane, and the four rotors to
// front/rear prop points. The body origin is the center of mass; the body -Z
// axis is "legs down" at hover.
struct RobotGeometry {
  double mass{0.0};             // kg
  double inertia_yy{0.0};       // kg*m^2, pitch axis
  double forward_reach{0.0};    // m, vertical axis to furthest body point
  Vec2 leg_mount_offset;        // m, body frame, front hip (+x side)
  double leg_length{0.0};       // m, hip to pad tip
  double leg_mount_angle{0.0};  // rad from body vertical (-Z), toward +x
  std::vector<Vec2> prop_offsets;  // m, body frame
  double hip_stiffness{0.0};       // N*m/rad; +inf selects a rigid hip
  double hip_damping_ratio{0.0};   // relative to critical damping
  double alpha_max{0.0};           // rad/s^2, angular acceleration limit
  double motor_time_constant{0.0};  // s, first-order thrust lag

  // Front pad tip in the body frame. The rear pad mirrors it in x.
  Vec2 pad_tip_body() const {
    const Vec2 leg_dir{std::sin(leg_mount_angle), -std::cos(leg_mount_angle)};
    return leg_mount_offset + leg_length * leg_dir;
  }
  Vec2 pad_tip_body_rear() const {
    const Vec2 tip = pad_tip_body();
    return {-tip.x, tip.z};
  }
  Vec2 leg_mount_offset_rear() const {
    return {-leg_mount_offset.x, leg_mount_offset.z};
  }

  bool rigid_hip() const { return !std::isfinite(hip_stiffness); }
};

// Scale-free description of the leg/body relationship.
struct DimensionlessGeometry {
  double length_ratio{0.0};    // L_eff / F_Reach
  double leg_angle_gamma{0.0};  // rad, body vertical to projected leg vector
  double l_eff{0.0};            // m, kept for dimensional reconstruction
};

inline void validate(const RobotGeometry& g) {
  auto req = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("robot geometry: ") + what);
  };
  req(g.mass > 0.0, "mass must be > 0");
  req(g.inertia_yy > 0.0, "inertia_yy must be > 0");
  req(g.forward_reach > 0.0, "forward_reach must be > 0");
  req(g.leg_length > 0.0, "leg_length must be > 0");
  req(g.alpha_max > 0.0, "alpha_max must be > 0");
  req(g.motor_time_constant > 0.0, "motor_time_constant must be > 0");
  req(g.hip_stiffness >= 0.0, "hip_stiffness must be >= 0");
  req(g.hip_damping_ratio >= 0.0, "hip_damping_ratio must be >= 0");
  req(!g.prop_offsets.empty(), "at least one prop offset required");
  req(norm(g.pad_tip_body()) > 0.0, "zero effective leg length");
}

// Projects the front leg onto the X-Z plane and reduces it to the
// (length ratio, leg angle) pair. Invariant under uniform spatial scaling.
inline DimensionlessGeometry derive_dimensionless(const RobotGeometry& geom) {
  const Vec2 tip = geom.pad_tip_body();
  const double l_eff = norm(tip);
  if (l_eff <= 0.0) throw std::invalid_argument("zero effective leg length");
  // Angle between body -Z and the leg vector.
  const double gamma = std::atan2(std::abs(tip.x), -tip.z);
  DimensionlessGeometry d;
  d.l_eff = l_eff;
  d.length_ratio = l_eff / geom.forward_reach;
  d.leg_angle_gamma = gamma;
  return d;
}

// Geometric similarity with uniform density: lengths scale with s, mass with
// s^3, inertia with s^5. Actuation limits and hinge properties are carried
// over unchanged; callers override them when modelling a different build.
inline RobotGeometry scale_geometry(const RobotGeometry& geom, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("scale factor must be > 0");
  RobotGeometry out = geom;
  out.mass = geom.mass * s * s * s;
  out.inertia_yy = geom.inertia_yy * s * s * s * s * s;
  out.forward_reach = geom.forward_reach * s;
  out.leg_mount_offset = s * geom.leg_mount_offset;
  out.leg_length = geom.leg_length * s;
  for (auto& p : out.prop_offsets) p = s * p;
  return out;
}

struct Pose {
  Vec2 position;
  double pitch{0.0};
};

struct WorldPoints {
  Vec2 pad_front;
  Vec2 pad_rear;
  std::vector<Vec2> props;
  Vec2 center;
};

// Rigid-body transform of the body-frame contact points into world frame.
inline WorldPoints world_points(const RobotGeometry& geom, const Pose& pose) {
  if (!finite(pose.position) || !std::isfinite(pose.pitch))
    throw std::invalid_argument("world_points: non-finite pose");
  WorldPoints w;
  w.pad_front = pose.position + rotate(geom.pad_tip_body(), pose.pitch);
  w.pad_rear = pose.position + rotate(geom.pad_tip_body_rear(), pose.pitch);
  w.props.reserve(geom.prop_offsets.size());
  for (const Vec2& p : geom.prop_offsets)
    w.props.push_back(pose.position + rotate(p, pose.pitch));
  w.center = pose.position;
  return w;
}

}  // namespace perchlab

#endif  // PERCHLAB_GEOMETRY_HPP_
