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

#ifndef PERCHLAB_SIMCORE_HPP_
#define PERCHLAB_SIMCORE_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "perchlab/geometry.hpp"
#include "perchlab/vec2.hpp"

namespace perchlab {

// Landing plane. theta_plane follows the polar-map convention:
// 0 = inverted ceiling, pi/2 = wall (on the +x side), pi = ground.
struct SurfaceSpec {
  double theta_plane{0.0};      // rad in [0, pi]
  Vec2 anchor_point;            // m, any point on the plane
  double contact_epsilon{0.002};  // m, hard-contact band
  double attach_range{0.010};     // m, magnet capture range

  // Unit normal pointing into free space (toward the approaching robot).
  Vec2 normal() const {
    return {-std::sin(theta_plane), -std::cos(theta_plane)};
  }
  // Unit tangent; +x along a ceiling, downward along a +x wall.
  Vec2 tangent() const {
    return {std::cos(theta_plane), -std::sin(theta_plane)};
  }
  // Signed perpendicular distance; positive on the free-space side.
  double distance(Vec2 p) const { return dot(p - anchor_point, normal()); }
  // Foot point of p on the plane.
  Vec2 project(Vec2 p) const { return p - distance(p) * normal(); }
};

inline void validate(const SurfaceSpec& s) {
  if (!(s.theta_plane >= 0.0 && s.theta_plane <= kPi))
    throw std::invalid_argument("surface: theta_plane must lie in [0, pi]");
  if (!(s.contact_epsilon > 0.0))
    throw std::invalid_argument("surface: contact_epsilon must be > 0");
  if (!(s.attach_range >= s.contact_epsilon))
    throw std::invalid_argument("surface: attach_range must be >= contact_epsilon");
}

enum class Phase { kApproach, kRotation, kSwing, kSettled, kFailed };

enum class PinnedPad { kNone, kFront, kRear };

struct SimState {
  Vec2 position;              // m
  Vec2 velocity;              // m/s
  double pitch{0.0};          // rad, + = nose up (CCW in X-Z)
  double pitch_rate{0.0};     // rad/s
  double motor_thrust_state{0.0};  // N, first-order lag state
  double hip_angle{0.0};      // rad, pinned-leg deflection relative to body
  double hip_rate{0.0};       // rad/s
  Phase phase{Phase::kApproach};
  double time{0.0};           // s
  double rotation_accum{0.0};  // rad rotated since trigger
  PinnedPad pinned{PinnedPad::kNone};
  Vec2 pivot;                 // m, world pin point when pinned
};

inline bool finite(const SimState& s) {
  return finite(s.position) && finite(s.velocity) && std::isfinite(s.pitch) &&
         std::isfinite(s.pitch_rate) && std::isfinite(s.hip_angle) &&
         std::isfinite(s.hip_rate);
}

enum class ContactKind { kPadFront, kPadRear, kBody, kPropeller };

struct ContactEvent {
  ContactKind kind{ContactKind::kBody};
  double time{0.0};
  Vec2 point;           // foot point on the plane
  double impact_pitch{0.0};
};

struct DistanceSample {
  double time{0.0};
  double d_pad{0.0};
  double d_prop{0.0};
};

struct DistanceTrace {
  std::vector<DistanceSample> samples;
};

// Perpendicular distance of the closer pad / closer prop point to the plane.
// Clamped below at -contact_epsilon: contact handling bounds penetration.
inline DistanceSample point_distances(const SimState& s,
                                      const RobotGeometry& geom,
                                      const SurfaceSpec& surface) {
  const WorldPoints w = world_points(geom, {s.position, s.pitch});
  double d_pad = std::min(surface.distance(w.pad_front),
                          surface.distance(w.pad_rear));
  double d_prop = surface.distance(w.props.front());
  for (const Vec2& p : w.props) d_prop = std::min(d_prop, surface.distance(p));
  d_pad = std::max(d_pad, -surface.contact_epsilon);
  d_prop = std::max(d_prop, -surface.contact_epsilon);
  return {s.time, d_pad, d_prop};
}

// Idealized tracking along the collision trajectory: constant velocity from a
// start point placed start_distance perpendicular to the plane, aimed at the
// anchor point, pitch held at hover.
inline SimState approach_state(double speed, double flight_angle,
                               const SurfaceSpec& surface, double t,
                               double start_distance = 2.0,
                               double hover_thrust = 0.0) {
  if (!(speed > 0.0)) throw std::invalid_argument("approach: speed must be > 0");
  if (!(start_distance > 0.0))
    throw std::invalid_argument("approach: start_distance must be > 0");
  const Vec2 v{speed * std::cos(flight_angle), speed * std::sin(flight_angle)};
  const Vec2 vhat = normalized(v);
  const double closing = -dot(vhat, surface.normal());
  if (!(closing > 0.0)) throw std::invalid_argument("no collision course");
  const Vec2 start = surface.anchor_point - (start_distance / closing) * vhat;
  SimState s;
  s.position = start + t * v;
  s.velocity = v;
  s.motor_thrust_state = hover_thrust;
  s.phase = Phase::kApproach;
  s.time = t;
  return s;
}

// First-order motor lag toward a thrust command; approach realism only, the
// idealized trajectory does not feed it back into translation.
inline double step_motor(double thrust_state, double thrust_cmd,
                         double time_constant, double dt) {
  return thrust_state + (thrust_cmd - thrust_state) * (dt / time_constant);
}

// One fixed step of the post-trigger maneuver: ballistic translation plus
// commanded constant angular acceleration. Both updates are the exact
// constant-acceleration solutions over dt. The angular command is cut to
// zero once the accumulated rotation since trigger passes 90 degrees; the
// angular rate persists.
inline SimState step_maneuver(const SimState& state, double alpha_cmd,
                              const RobotGeometry& geom, double dt) {
  if (state.phase != Phase::kRotation)
    throw std::invalid_argument("step_maneuver: phase must be Rotation");
  if (!(dt > 0.0)) throw std::invalid_argument("step_maneuver: dt must be > 0");
  if (std::abs(alpha_cmd) > geom.alpha_max * (1.0 + 1e-12))
    throw std::invalid_argument("step_maneuver: |alpha_cmd| exceeds alpha_max");

  const double alpha = state.rotation_accum >= kPi / 2.0 ? 0.0 : alpha_cmd;
  SimState s = state;
  s.position.x += state.velocity.x * dt;
  s.position.z += state.velocity.z * dt - 0.5 * kGravity * dt * dt;
  s.velocity.z -= kGravity * dt;
  s.pitch += state.pitch_rate * dt + 0.5 * alpha * dt * dt;
  s.pitch_rate += alpha * dt;
  s.rotation_accum += std::abs(s.pitch - state.pitch);
  s.time += dt;
  if (!finite(s)) throw std::runtime_error("numerical divergence");
  return s;
}

// Contact events for every pad/prop/body point within contact_epsilon of the
// plane (including penetration). Magnet capture at attach_range is resolved
// by the episode loop, not here.
inline std::vector<ContactEvent> detect_contacts(const SimState& state,
                                                 const RobotGeometry& geom,
                                                 const SurfaceSpec& surface) {
  const WorldPoints w = world_points(geom, {state.position, state.pitch});
  std::vector<ContactEvent> events;
  auto check = [&](Vec2 p, ContactKind kind) {
    if (surface.distance(p) <= surface.contact_epsilon)
      events.push_back({kind, state.time, surface.project(p), state.pitch});
  };
  check(w.pad_front, ContactKind::kPadFront);
  check(w.pad_rear, ContactKind::kPadRear);
  for (const Vec2& p : w.props) check(p, ContactKind::kPropeller);
  check(w.center, ContactKind::kBody);
  return events;
}

namespace detail {

// Pinned-leg constants for the swing model. The pad pin is a ball joint, the
// leg link is massless, and the hip joint carries the torsional
// spring-damper between leg link and body.
struct SwingParams {
  Vec2 hip_body;      // hip mount in body frame
  double link_len{0.0};   // pad tip to hip
  double beta0{0.0};  // world link angle at zero pitch and zero deflection
  double rho{0.0};    // |hip_body|
  double eta{0.0};    // polar angle of hip_body
  double damping_c{0.0};  // N*m*s/rad
};

inline SwingParams swing_params(const RobotGeometry& geom, PinnedPad pinned) {
  if (pinned == PinnedPad::kNone)
    throw std::invalid_argument("swing without contact");
  SwingParams p;
  const bool front = pinned == PinnedPad::kFront;
  p.hip_body = front ? geom.leg_mount_offset : geom.leg_mount_offset_rear();
  const Vec2 tip = front ? geom.pad_tip_body() : geom.pad_tip_body_rear();
  const Vec2 link = p.hip_body - tip;  // pad -> hip, length = leg_length
  p.link_len = norm(link);
  p.beta0 = std::atan2(link.z, link.x);
  p.rho = norm(p.hip_body);
  p.eta = p.rho > 0.0 ? std::atan2(p.hip_body.z, p.hip_body.x) : 0.0;
  const double i_hinge = geom.inertia_yy + geom.mass * p.rho * p.rho;
  p.damping_c = std::isfinite(geom.hip_stiffness)
                    ? 2.0 * geom.hip_damping_ratio *
                          std::sqrt(geom.hip_stiffness * i_hinge)
                    : 0.0;
  return p;
}

// Generalized swing coordinates: beta = world angle of the pad->hip link,
// phi = body pitch.
struct SwingCoords {
  double beta{0.0};
  double beta_dot{0.0};
  double phi{0.0};
  double phi_dot{0.0};
};

inline SwingCoords to_swing_coords(const SimState& s, const SwingParams& p) {
  SwingCoords c;
  const Vec2 hip_world = s.position + rotate(p.hip_body, s.pitch);
  const Vec2 r = hip_world - s.pivot;
  c.beta = std::atan2(r.z, r.x);
  const Vec2 hip_vel =
      s.velocity + s.pitch_rate * perp(rotate(p.hip_body, s.pitch));
  const Vec2 u_perp{-std::sin(c.beta), std::cos(c.beta)};
  c.beta_dot = dot(u_perp, hip_vel) / p.link_len;
  c.phi = s.pitch;
  c.phi_dot = s.pitch_rate;
  return c;
}

inline void from_swing_coords(const SwingCoords& c, const SwingParams& p,
                              SimState* s) {
  const Vec2 u{std::cos(c.beta), std::sin(c.beta)};
  const Vec2 u_perp{-std::sin(c.beta), std::cos(c.beta)};
  const Vec2 hip_rot = rotate(p.hip_body, c.phi);
  s->position = s->pivot + p.link_len * u - hip_rot;
  s->velocity = p.link_len * c.beta_dot * u_perp - c.phi_dot * perp(hip_rot);
  s->pitch = c.phi;
  s->pitch_rate = c.phi_dot;
  s->hip_angle = wrap_angle(c.phi + p.beta0 - c.beta);
  s->hip_rate = c.phi_dot - c.beta_dot;
}

}  // namespace detail

// Inelastic pad capture. The pin impulse acts along the massless leg link
// (the ball joint transmits no torque, the hip spring torque is finite), so
// it removes exactly the radial velocity of the hip about the new pivot.
// With a rigid hip the whole assembly pins at once and angular momentum
// about the pivot is conserved through the impulse.
inline SimState init_swing(const SimState& state, PinnedPad pad,
                           const RobotGeometry& geom,
                           const SurfaceSpec& surface) {
  const detail::SwingParams p = detail::swing_params(geom, pad);
  const bool front = pad == PinnedPad::kFront;
  const Vec2 tip_body = front ? geom.pad_tip_body() : geom.pad_tip_body_rear();
  const Vec2 tip_world = state.position + rotate(tip_body, state.pitch);

  SimState s = state;
  s.pinned = pad;
  s.pivot = surface.project(tip_world);
  s.phase = Phase::kSwing;

  const double m = geom.mass;
  const double inertia = geom.inertia_yy;

  if (geom.rigid_hip()) {
    const Vec2 r_cp = state.position - s.pivot;
    const double i_pivot = inertia + m * norm_sq(r_cp);
    const double ang_mom =
        inertia * state.pitch_rate + m * cross(r_cp, state.velocity);
    const double omega = ang_mom / i_pivot;
    s.pitch_rate = omega;
    s.velocity = omega * perp(r_cp);
    s.hip_rate = 0.0;
    return s;
  }

  const Vec2 hip_world = state.position + rotate(p.hip_body, state.pitch);
  const Vec2 r_link = hip_world - s.pivot;
  const Vec2 u_hat = normalized(r_link);
  const Vec2 r_hip = rotate(p.hip_body, state.pitch);  // hip relative to COM
  const double lever = cross(r_hip, u_hat);
  const double radial_rate =
      dot(state.velocity, u_hat) + lever * state.pitch_rate;
  const double impulse = -radial_rate / (1.0 / m + lever * lever / inertia);
  s.velocity = state.velocity + (impulse / m) * u_hat;
  s.pitch_rate = state.pitch_rate + impulse * lever / inertia;

  // Project onto the pinned manifold (snap <= attach_range).
  detail::SwingCoords c = detail::to_swing_coords(s, p);
  detail::from_swing_coords(c, p, &s);
  return s;
}

// One fixed step of the body-swing about the pinned pad.
//
// Generalized coordinates q = (beta, phi) with a massless link of length L
// from pivot to hip and the body (mass m, inertia I) hung at the hip:
//   M11 = m L^2
//   M12 = -m L rho cos(sigma),  sigma = phi + eta - beta
//   M22 = m rho^2 + I
//   M11 b'' + M12 p'' = -m L rho sin(sigma) p'^2 - m g L cos(beta)
//                       + K delta + c (p' - b')
//   M12 b'' + M22 p'' = +m L rho sin(sigma) b'^2 + m g rho cos(phi + eta)
//                       - K delta - c (p' - b')
// with delta = phi + beta0 - beta the hip deflection. Semi-implicit Euler.
// A non-finite hip_stiffness selects the rigid single-pivot pendulum.
inline SimState step_swing(const SimState& state, const RobotGeometry& geom,
                           const SurfaceSpec& surface, double dt) {
  if (state.phase != Phase::kSwing)
    throw std::invalid_argument("step_swing: phase must be Swing");
  if (state.pinned == PinnedPad::kNone)
    throw std::invalid_argument("swing without contact");
  if (!(dt > 0.0)) throw std::invalid_argument("step_swing: dt must be > 0");

  const detail::SwingParams p = detail::swing_params(geom, state.pinned);
  detail::SwingCoords c = detail::to_swing_coords(state, p);
  const double m = geom.mass;
  const double inertia = geom.inertia_yy;
  SimState s = state;

  if (geom.rigid_hip()) {
    const Vec2 r_cp = state.position - state.pivot;
    const double i_pivot = inertia + m * norm_sq(r_cp);
    const double torque = cross(r_cp, Vec2{0.0, -m * kGravity});
    const double acc = torque / i_pivot;
    const double offset = c.phi - c.beta;  // frozen hip configuration
    c.beta_dot += acc * dt;
    c.phi_dot = c.beta_dot;
    c.beta += c.beta_dot * dt;
    c.phi = c.beta + offset;
    detail::from_swing_coords(c, p, &s);
    s.hip_angle = state.hip_angle;
    s.hip_rate = 0.0;
  } else {
    const double k = geom.hip_stiffness;
    const double sigma = c.phi + p.eta - c.beta;
    const double delta = wrap_angle(c.phi + p.beta0 - c.beta);
    const double m11 = m * p.link_len * p.link_len;
    const double m12 = -m * p.link_len * p.rho * std::cos(sigma);
    const double m22 = m * p.rho * p.rho + inertia;
    const double coupling = m * p.link_len * p.rho * std::sin(sigma);
    const double rel_rate = c.phi_dot - c.beta_dot;
    const double rhs_b = -coupling * c.phi_dot * c.phi_dot -
                         m * kGravity * p.link_len * std::cos(c.beta) +
                         k * delta + p.damping_c * rel_rate;
    const double rhs_p = coupling * c.beta_dot * c.beta_dot +
                         m * kGravity * p.rho * std::cos(c.phi + p.eta) -
                         k * delta - p.damping_c * rel_rate;
    const double det = m11 * m22 - m12 * m12;
    const double beta_acc = (m22 * rhs_b - m12 * rhs_p) / det;
    const double phi_acc = (m11 * rhs_p - m12 * rhs_b) / det;
    c.beta_dot += beta_acc * dt;
    c.phi_dot += phi_acc * dt;
    c.beta += c.beta_dot * dt;
    c.phi += c.phi_dot * dt;
    detail::from_swing_coords(c, p, &s);
  }

  s.time += dt;
  if (!finite(s)) throw std::runtime_error("numerical divergence");

  // The remaining pad settles the landing once it reaches capture range.
  const bool front = state.pinned == PinnedPad::kFront;
  const Vec2 other_tip =
      front ? geom.pad_tip_body_rear() : geom.pad_tip_body();
  const Vec2 other_world = s.position + rotate(other_tip, s.pitch);
  if (surface.distance(other_world) <= surface.attach_range)
    s.phase = Phase::kSettled;
  return s;
}

// Max-effort pad-first feasibility of one trigger point: from a perpendicular
// approach at closing speed v_perp, triggered at origin distance d_trg, the
// robot rotates at alpha_max under ballistic translation; feasible when a pad
// reaches the plane before any prop point has touched it.
inline bool pad_first_feasible(const RobotGeometry& geom,
                               const SurfaceSpec& surface, double alpha_max,
                               double v_perp, double d_trg, double dt = 1e-3,
                               double horizon = 2.5) {
  SimState s;
  s.position = surface.anchor_point + d_trg * surface.normal();
  s.velocity = -v_perp * surface.normal();
  s.phase = Phase::kRotation;
  RobotGeometry g = geom;
  g.alpha_max = std::max(geom.alpha_max, alpha_max);
  double min_prop = std::numeric_limits<double>::infinity();
  while (s.time < horizon) {
    const DistanceSample d = point_distances(s, g, surface);
    min_prop = std::min(min_prop, d.d_prop);
    if (d.d_pad <= 0.0) return min_prop > 0.0;
    if (min_prop <= 0.0) return false;
    s = step_maneuver(s, alpha_max, g, dt);
  }
  return false;
}

// Mechanical energy of the pinned swing, gravity referenced to pivot height.
inline double swing_energy(const SimState& state, const RobotGeometry& geom) {
  const double kinetic = 0.5 * geom.mass * norm_sq(state.velocity) +
                         0.5 * geom.inertia_yy * state.pitch_rate * state.pitch_rate;
  const double grav =
      geom.mass * kGravity * (state.position.z - state.pivot.z);
  const double spring = geom.rigid_hip()
                            ? 0.0
                            : 0.5 * geom.hip_stiffness * state.hip_angle *
                                  state.hip_angle;
  return kinetic + grav + spring;
}

// Pad/prop perpendicular distance trace along a recorded trajectory.
inline DistanceTrace record_distances(const std::vector<SimState>& trajectory,
                                      const RobotGeometry& geom,
                                      const SurfaceSpec& surface) {
  if (trajectory.empty())
    throw std::invalid_argument("record_distances: empty trajectory");
  DistanceTrace trace;
  trace.samples.reserve(trajectory.size());
  for (const SimState& s : trajectory)
    trace.samples.push_back(point_distances(s, geom, surface));
  return trace;
}

}  // namespace perchlab

#endif  // PERCHLAB_SIMCORE_HPP_
