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

#ifndef PERCHLAB_ENV_HPP_
#define PERCHLAB_ENV_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "perchlab/geometry.hpp"
#include "perchlab/policy.hpp"
#include "perchlab/rng.hpp"
#include "perchlab/simcore.hpp"
#include "perchlab/vec2.hpp"

namespace perchlab {

// Sensory cues fed to the policy. tau and theta_x emulate the onboard
// time-to-contact and transverse optical-flow observables; d_perp and the
// plane angle complete the input vector.
struct Observation {
  double tau{0.0};          // s
  double theta_x{0.0};      // 1/s
  double d_perp{0.0};       // m
  double theta_plane{0.0};  // rad
};

struct ApproachCondition {
  double speed{0.0};         // m/s
  double flight_angle{0.0};  // rad relative to horizon
};

struct EnvParams {
  double physics_dt{0.001};         // s
  int policy_every{10};             // policy tick per N physics steps (100 Hz)
  double start_distance{2.0};       // m, perpendicular offset at episode start
  double tau_max{5.0};              // s, clamp for receding/far states
  double theta_x_guard{0.001};      // m, distance floor for theta_x
  double reward_k1{5.0};            // 1/s, trigger-timing scale
  double reward_k2{10.0};           // 1/m, pad-distance scale
  double post_trigger_timeout{3.0};  // s
  double min_perp_speed{0.3};       // m/s, training-sampler floor
};

// Reach-circle distance: perpendicular distance from the body origin to the
// plane minus the effective leg length (unfloored).
inline double reach_distance(const SimState& state, const RobotGeometry& geom,
                             const SurfaceSpec& surface) {
  return surface.distance(state.position) - norm(geom.pad_tip_body());
}

inline Observation observe(const SimState& state, const RobotGeometry& geom,
                           const SurfaceSpec& surface,
                           const EnvParams& params = {}) {
  const double d_raw = reach_distance(state, geom, surface);
  const double d_perp = std::max(d_raw, 0.0);
  const double v_perp = -dot(state.velocity, surface.normal());
  const double v_par = dot(state.velocity, surface.tangent());
  Observation o;
  o.d_perp = d_perp;
  o.tau = v_perp > 0.0 ? std::min(d_perp / v_perp, params.tau_max)
                       : params.tau_max;
  o.theta_x = v_par / std::max(d_raw, params.theta_x_guard);
  o.theta_plane = surface.theta_plane;
  return o;
}

// Impact orientation relative to the surface: the angle between the body
// leg-side axis and the plane normal, in [0, pi]. 0 means props toward the
// plane, pi means flush pad-side contact, for every plane angle.
inline double impact_orientation(double pitch, const SurfaceSpec& surface) {
  return std::abs(wrap_angle(pitch + surface.theta_plane));
}

// Smallest impact orientation at which a pad reaches the plane before any
// prop point or the body center, found by sweeping the relative orientation.
inline double compute_phi_min(const RobotGeometry& geom,
                              double step = deg2rad(0.1)) {
  SurfaceSpec ceiling;  // the sweep is surface-independent in relative angle
  ceiling.theta_plane = 0.0;
  ceiling.anchor_point = {0.0, 1.0};
  for (double phi = step; phi <= kPi + 0.5 * step; phi += step) {
    const WorldPoints w = world_points(geom, {Vec2{0.0, 0.0}, phi});
    const double pad = std::min(ceiling.distance(w.pad_front),
                                ceiling.distance(w.pad_rear));
    double other = ceiling.distance(w.center);
    for (const Vec2& p : w.props) other = std::min(other, ceiling.distance(p));
    if (pad < other) return std::min(phi, kPi);
  }
  return kPi;
}

// ---------------------------------------------------------------------------
// Reward

struct RewardVector {
  double r_tau_trg{0.0};
  double r_d_pad{0.0};
  double r_gravity{0.0};
  double r_momentum{0.0};
  double r_phi{0.0};
  double r_legs{0.0};
};

inline constexpr double kRewardWeights[6] = {0.1, 0.4, 1.0, 1.0, 2.0, 2.0};

inline double reward_scalar(const RewardVector& r) {
  return kRewardWeights[0] * r.r_tau_trg + kRewardWeights[1] * r.r_d_pad +
         kRewardWeights[2] * r.r_gravity + kRewardWeights[3] * r.r_momentum +
         kRewardWeights[4] * r.r_phi + kRewardWeights[5] * r.r_legs;
}

// Everything the terminal reward depends on.
struct RewardInputs {
  bool triggered{false};
  double tau_trg{0.0};     // s, unclamped trigger-time tau; may be negative
  double min_d_pad{0.0};   // m, minimum pad distance over the whole flight
  bool pad_contact{false};
  double phi_impact{0.0};  // rad, relative impact orientation at capture
  Vec2 leg_vector;         // pivot -> COM at touchdown
  Vec2 touchdown_velocity;  // m/s, pre-impulse
  int n_legs{0};           // 0, 2 or 4 (projected pads)
  bool body_or_prop_contact{false};
};

inline RewardVector compute_reward(const RewardInputs& in, double phi_min,
                                   const EnvParams& params = {}) {
  RewardVector r;
  if (in.triggered)
    r.r_tau_trg = in.tau_trg < 0.0 ? 1.0
                                   : std::exp(-params.reward_k1 * in.tau_trg);
  r.r_d_pad = in.min_d_pad < 0.0 ? 1.0
                                 : std::exp(-params.reward_k2 * in.min_d_pad);
  if (in.pad_contact) {
    const Vec2 e_r = normalized(in.leg_vector);
    const Vec2 g_hat{0.0, -1.0};
    r.r_gravity = std::abs(cross(g_hat, e_r));
    if (norm(in.touchdown_velocity) > 0.0)
      r.r_momentum = std::abs(cross(normalized(in.touchdown_velocity), e_r));
    const double phi_deg = rad2deg(std::abs(in.phi_impact));
    const double phi_min_deg = rad2deg(phi_min);
    if (phi_deg > phi_min_deg)
      r.r_phi = phi_deg / (0.5 * (phi_min_deg + 180.0));
    else if (phi_deg > 0.0)
      r.r_phi = 0.5 * phi_deg / phi_min_deg;
  }
  if (in.n_legs >= 3)
    r.r_legs = 1.0;
  else if (in.n_legs >= 1)
    r.r_legs = 0.5;
  if (in.body_or_prop_contact) r.r_legs -= 0.25;
  return r;
}

// Both projected pads attached -> 4 legs, one -> 2, none -> 0; the contact
// flag records any body or propeller event seen during the episode.
struct LandingClass {
  int n_legs{0};
  bool body_or_prop_contact{false};
};

inline LandingClass classify_landing(bool front_attached, bool rear_attached,
                                     const std::vector<ContactEvent>& events) {
  LandingClass c;
  if (front_attached && rear_attached)
    c.n_legs = 4;
  else if (front_attached || rear_attached)
    c.n_legs = 2;
  for (const ContactEvent& e : events)
    if (e.kind == ContactKind::kBody || e.kind == ContactKind::kPropeller)
      c.body_or_prop_contact = true;
  return c;
}

// ---------------------------------------------------------------------------
// Training distribution

struct TrainingDistribution {
  std::vector<double> plane_angles{0.0, deg2rad(45.0), deg2rad(90.0),
                                   deg2rad(135.0), deg2rad(180.0)};
  double speed_min{1.0};
  double speed_max{5.0};
  double contact_epsilon{0.002};
  double attach_range{0.010};
};

// Uniform plane angle from the configured set, speed U[min,max], and a flight
// angle uniform over the angles that hit the plane with positive x-velocity
// and at least the configured perpendicular closing speed.
inline std::pair<ApproachCondition, SurfaceSpec> sample_training_episode(
    Rng& rng, const TrainingDistribution& dist = {},
    const EnvParams& params = {}) {
  SurfaceSpec surface;
  surface.theta_plane =
      dist.plane_angles[rng.uniform_index(dist.plane_angles.size())];
  surface.anchor_point = {0.0, 0.0};
  surface.contact_epsilon = dist.contact_epsilon;
  surface.attach_range = dist.attach_range;

  ApproachCondition cond;
  cond.speed = rng.uniform(dist.speed_min, dist.speed_max);
  const double q = std::min(params.min_perp_speed / cond.speed, 0.9);
  const double lo =
      std::max(std::asin(q) - surface.theta_plane, -kPi / 2.0 + 1e-3);
  const double hi =
      std::min(kPi - std::asin(q) - surface.theta_plane, kPi / 2.0 - 1e-3);
  cond.flight_angle = rng.uniform(lo, hi);
  return {cond, surface};
}

// ---------------------------------------------------------------------------
// Episode

// One replay item. Non-trigger policy ticks are stored non-terminal with
// zero reward, bootstrapping to the next tick; the trigger (or final
// pre-contact) tick is terminal and carries the episode reward.
struct Transition {
  ObsVector obs{};          // normalized observation
  ActionVector action{};    // squashed action in [-1,1]^2
  double reward{0.0};
  ObsVector next_obs{};
  bool terminal{true};
};

// Action provider for rollouts. Three modes:
//  - actor: sample the policy network.
//  - uniform_random: trigger with per-tick probability trigger_prob
//    (geometric spread over the approach), uniform rotation command.
//  - tau_star > 0: trigger once tau falls to tau_star, uniform rotation
//    command. Exploration episodes draw tau_star uniformly, which covers the
//    decision-relevant late-trigger band far more densely than per-tick
//    coin flips.
struct ActionSource {
  const MlpParams* actor{nullptr};
  ObsNorm norm;
  bool uniform_random{false};
  double trigger_prob{0.025};
  double tau_star{0.0};
  // Rotation-command band for the random modes, as a fraction of alpha_max.
  double rot_lo{-1.0};
  double rot_hi{1.0};
};

inline ActionSample draw_action(const ActionSource& src, const Observation& o,
                                double alpha_max, Rng& rng) {
  if (src.uniform_random || src.tau_star > 0.0) {
    ActionSample a;
    const bool trigger = src.tau_star > 0.0
                             ? o.tau <= src.tau_star
                             : rng.uniform() < src.trigger_prob;
    a.squashed = {trigger ? rng.uniform(1e-6, 1.0) : rng.uniform(-1.0, 0.0),
                  rng.uniform(src.rot_lo, src.rot_hi)};
    a.a_trg = a.squashed[0];
    a.a_rot = a.squashed[1] * alpha_max;
    a.log_prob = -std::log(4.0);
    return a;
  }
  const ObsVector v =
      src.norm.normalize(o.tau, o.theta_x, o.d_perp, o.theta_plane);
  return sample_action(*src.actor, v, alpha_max, rng);
}

struct EpisodeResult {
  bool triggered{false};
  double tau_trg{0.0};
  double a_rot_used{0.0};
  double trigger_time{0.0};
  double min_d_pad{0.0};
  double min_d_prop{0.0};
  double phi_impact{0.0};
  int n_legs{0};
  bool body_or_prop_contact{false};
  Phase final_phase{Phase::kFailed};
  RewardVector reward;
  double reward_scalar{0.0};
  Observation replay_obs;      // observation at trigger (or last pre-contact)
  ActionVector replay_action;  // squashed action at that tick
  std::vector<Transition> transitions;  // one per policy tick
  double episode_time{0.0};
  DistanceTrace trace;                // filled when record_trace
  std::vector<SimState> trajectory;   // filled when record_trace
};

// Simulates one landing attempt: idealized approach with the policy ticked at
// 100 Hz, trigger on a_trg > 0, ballistic rotation at the sampled constant
// angular acceleration, magnet capture of the first pad within attach range,
// body-swing about the pin, and terminal reward.
inline EpisodeResult run_episode(const ActionSource& source,
                                 const ApproachCondition& cond,
                                 const SurfaceSpec& surface,
                                 const RobotGeometry& geom, std::uint64_t seed,
                                 const EnvParams& params = {},
                                 bool record_trace = false) {
  validate(geom);
  validate(surface);
  Rng rng(seed);
  const double dt = params.physics_dt;
  const double hover = geom.mass * kGravity;
  const double phi_min = compute_phi_min(geom);

  SimState s = approach_state(cond.speed, cond.flight_angle, surface, 0.0,
                              params.start_distance, hover);

  EpisodeResult res;
  res.min_d_pad = std::numeric_limits<double>::infinity();
  res.min_d_prop = std::numeric_limits<double>::infinity();
  bool front_attached = false;
  bool rear_attached = false;
  bool saw_body_or_prop = false;
  Vec2 leg_vector{0.0, 0.0};
  Vec2 touchdown_velocity{0.0, 0.0};

  auto track = [&](const SimState& st) {
    const DistanceSample d = point_distances(st, geom, surface);
    res.min_d_pad = std::min(res.min_d_pad, d.d_pad);
    res.min_d_prop = std::min(res.min_d_prop, d.d_prop);
    if (record_trace) {
      res.trace.samples.push_back(d);
      res.trajectory.push_back(st);
    }
  };
  track(s);

  // --- Approach: constant-velocity collision course, policy at 100 Hz.
  // Every tick becomes a replay transition: waiting ticks bootstrap to the
  // next observation, the trigger (or final pre-contact) tick is terminal.
  Observation last_obs = observe(s, geom, surface, params);
  ActionSample last_act;
  ObsVector prev_obs_n{};
  ActionVector prev_action{};
  bool have_prev = false;
  double alpha_cmd = 0.0;
  {
    long tick = 0;
    while (true) {
      if (tick % params.policy_every == 0) {
        last_obs = observe(s, geom, surface, params);
        const ObsVector obs_n = source.norm.normalize(
            last_obs.tau, last_obs.theta_x, last_obs.d_perp,
            last_obs.theta_plane);
        if (have_prev)
          res.transitions.push_back({prev_obs_n, prev_action, 0.0, obs_n, false});
        last_act = draw_action(source, last_obs, geom.alpha_max, rng);
        prev_obs_n = obs_n;
        prev_action = last_act.squashed;
        have_prev = true;
        if (last_act.a_trg > 0.0) {
          res.triggered = true;
          const double v_perp = -dot(s.velocity, surface.normal());
          const double d_raw = reach_distance(s, geom, surface);
          res.tau_trg = v_perp > 0.0 ? d_raw / v_perp : params.tau_max;
          res.trigger_time = s.time;
          alpha_cmd = std::clamp(last_act.a_rot, -geom.alpha_max, geom.alpha_max);
          res.a_rot_used = alpha_cmd;
          s.phase = Phase::kRotation;
          s.rotation_accum = 0.0;
          break;
        }
      }
      s.position += dt * s.velocity;
      s.motor_thrust_state =
          step_motor(s.motor_thrust_state, hover, geom.motor_time_constant, dt);
      s.time += dt;
      ++tick;
      track(s);
      const std::vector<ContactEvent> events =
          detect_contacts(s, geom, surface);
      if (!events.empty()) {
        // Collision without a maneuver: no capture, no legs.
        for (const ContactEvent& e : events)
          if (e.kind == ContactKind::kBody ||
              e.kind == ContactKind::kPropeller)
            saw_body_or_prop = true;
        s.phase = Phase::kFailed;
        break;
      }
      if (s.time > 120.0)
        throw std::runtime_error("run_episode: approach never terminated");
    }
  }

  // --- Rotation: ballistic translation + constant angular acceleration.
  if (s.phase == Phase::kRotation) {
    while (s.time - res.trigger_time < params.post_trigger_timeout) {
      s = step_maneuver(s, alpha_cmd, geom, dt);
      track(s);

      const WorldPoints w = world_points(geom, {s.position, s.pitch});
      const bool front_in =
          surface.distance(w.pad_front) <= surface.attach_range;
      const bool rear_in = surface.distance(w.pad_rear) <= surface.attach_range;
      if (front_in || rear_in) {
        res.phi_impact = impact_orientation(s.pitch, surface);
        touchdown_velocity = s.velocity;
        res.min_d_pad = std::min(res.min_d_pad, 0.0);
        front_attached = front_in;
        rear_attached = rear_in;
        if (front_in && rear_in) {
          // Flat impact: both pads capture at once.
          s.pinned = PinnedPad::kFront;
          s.pivot = surface.project(w.pad_front);
          s.phase = Phase::kSettled;
          leg_vector = s.position - s.pivot;
        } else {
          const PinnedPad pad =
              front_in ? PinnedPad::kFront : PinnedPad::kRear;
          s = init_swing(s, pad, geom, surface);
          leg_vector = s.position - s.pivot;
        }
        break;
      }

      bool crashed = false;
      for (const ContactEvent& e : detect_contacts(s, geom, surface)) {
        if (e.kind == ContactKind::kBody ||
            e.kind == ContactKind::kPropeller) {
          saw_body_or_prop = true;
          crashed = true;
        }
      }
      if (crashed) {
        s.phase = Phase::kFailed;
        break;
      }
    }
    if (s.phase == Phase::kRotation) s.phase = Phase::kFailed;  // fell away
  }

  // --- Swing: pendulum about the pinned pad until the second pad captures.
  if (s.phase == Phase::kSwing) {
    while (s.time - res.trigger_time < params.post_trigger_timeout) {
      s = step_swing(s, geom, surface, dt);
      track(s);
      for (const ContactEvent& e : detect_contacts(s, geom, surface))
        if (e.kind == ContactKind::kBody || e.kind == ContactKind::kPropeller)
          saw_body_or_prop = true;
      if (s.phase == Phase::kSettled) {
        front_attached = true;
        rear_attached = true;
        break;
      }
    }
    if (s.phase == Phase::kSwing) s.phase = Phase::kFailed;  // two-leg hang
  }

  const LandingClass cls = classify_landing(front_attached, rear_attached, {});
  res.n_legs = cls.n_legs;
  res.body_or_prop_contact = saw_body_or_prop;
  res.final_phase = s.phase;
  res.episode_time = s.time;

  RewardInputs ri;
  ri.triggered = res.triggered;
  ri.tau_trg = res.tau_trg;
  ri.min_d_pad = res.min_d_pad;
  ri.pad_contact = front_attached || rear_attached;
  ri.phi_impact = res.phi_impact;
  ri.leg_vector = leg_vector;
  ri.touchdown_velocity = touchdown_velocity;
  ri.n_legs = res.n_legs;
  ri.body_or_prop_contact = saw_body_or_prop;
  res.reward = compute_reward(ri, phi_min, params);
  res.reward_scalar = reward_scalar(res.reward);
  res.replay_obs = last_obs;  // trigger-tick obs, or last pre-contact one
  res.replay_action = last_act.squashed;
  if (have_prev)
    res.transitions.push_back(
        {prev_obs_n, prev_action, res.reward_scalar, prev_obs_n, true});
  return res;
}

inline EpisodeResult run_episode(const PolicyHandle& policy,
                                 const ApproachCondition& cond,
                                 const SurfaceSpec& surface,
                                 const RobotGeometry& geom, std::uint64_t seed,
                                 const EnvParams& params = {},
                                 bool record_trace = false) {
  ActionSource src;
  src.actor = &policy.actor;
  src.norm = policy.norm;
  return run_episode(src, cond, surface, geom, seed, params, record_trace);
}

}  // namespace perchlab

#endif  // PERCHLAB_ENV_HPP_
