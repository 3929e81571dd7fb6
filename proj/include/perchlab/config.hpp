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

#ifndef PERCHLAB_CONFIG_HPP_
#define PERCHLAB_CONFIG_HPP_

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "perchlab/analysis.hpp"
#include "perchlab/env.hpp"
#include "perchlab/geometry.hpp"
#include "perchlab/sac.hpp"
#include "perchlab/simcore.hpp"

namespace perchlab {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::string& where,
                                const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + where + "." + it.key() + "'");
}

inline double get_number(const json& obj, const std::string& where,
                         const std::string& key) {
  if (!obj.contains(key))
    throw ConfigError("config: missing '" + where + "." + key + "'");
  if (!obj[key].is_number())
    throw ConfigError("config: '" + where + "." + key + "' must be a number");
  return obj[key].get<double>();
}

inline double get_number_or(const json& obj, const std::string& where,
                            const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ConfigError("config: '" + where + "." + key + "' must be a number");
  return obj[key].get<double>();
}

inline std::vector<double> get_number_list(const json& obj,
                                           const std::string& where,
                                           const std::string& key) {
  if (!obj.contains(key) || !obj[key].is_array())
    throw ConfigError("config: '" + where + "." + key +
                      "' must be a number array");
  std::vector<double> out;
  for (const auto& v : obj[key]) {
    if (!v.is_number())
      throw ConfigError("config: '" + where + "." + key +
                        "' must contain numbers only");
    out.push_back(v.get<double>());
  }
  return out;
}

// A grid is either an explicit number array or {"min":..,"max":..,"step":..}.
inline std::vector<double> get_grid(const json& obj, const std::string& where,
                                    const std::string& key) {
  if (!obj.contains(key))
    throw ConfigError("config: missing '" + where + "." + key + "'");
  const json& g = obj[key];
  if (g.is_array()) return get_number_list(obj, where, key);
  if (!g.is_object())
    throw ConfigError("config: '" + where + "." + key +
                      "' must be an array or {min,max,step}");
  reject_unknown_keys(g, where + "." + key, {"min", "max", "step"});
  const double lo = get_number(g, where + "." + key, "min");
  const double hi = get_number(g, where + "." + key, "max");
  const double step = get_number(g, where + "." + key, "step");
  if (!(step > 0.0) || !(hi >= lo))
    throw ConfigError("config: bad grid range in '" + where + "." + key + "'");
  std::vector<double> out;
  for (double v = lo; v <= hi + 0.5 * step; v += step) out.push_back(v);
  return out;
}

}  // namespace detail

// FNV-1a 64-bit over the canonical (sorted-key) JSON dump; used to stamp
// artifacts with the configuration they came from.
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

struct EvalConfig {
  std::vector<double> speeds;      // m/s
  std::vector<double> angles_deg;  // deg
  int trials{5};
  double smoothing_sigma_cells{1.0};
  SuccessCriterion criterion{SuccessCriterion::kFourLeg};
};

struct SweepConfig {
  std::vector<double> stiffness{0.4, 1.4, 8.5};       // N*m/rad
  std::vector<double> damping_ratios{0.3, 1.0, 2.0};  // dimensionless
  std::vector<double> alpha_max{30.0, 60.0, 90.0};    // rad/s^2
};

struct ExperimentConfig {
  RobotGeometry robot;
  std::vector<double> plane_angles_deg{0.0};  // evaluated surfaces
  double contact_epsilon{0.002};
  double attach_range{0.010};
  EnvParams env;
  SacConfig sac;
  TrainingDistribution training_dist;
  EvalConfig eval;
  SweepConfig sweeps;
  std::uint64_t seed{1};
  std::string output_dir{"runs"};
  std::string canonical_json;  // sorted-key dump of the loaded document
  std::string digest;          // fnv1a64 hex of canonical_json

  SurfaceSpec surface_for(double theta_deg) const {
    SurfaceSpec s;
    s.theta_plane = deg2rad(theta_deg);
    s.anchor_point = {0.0, 0.0};
    s.contact_epsilon = contact_epsilon;
    s.attach_range = attach_range;
    return s;
  }
};

inline ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: document must be an object");
  detail::reject_unknown_keys(doc, "",
                              {"seed", "output_dir", "robot", "surface", "env",
                               "training", "evaluation", "sweeps"});
  ExperimentConfig cfg;

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
      throw ConfigError("config: 'seed' must be an integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string())
      throw ConfigError("config: 'output_dir' must be a string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }

  if (!doc.contains("robot")) throw ConfigError("config: missing 'robot'");
  {
    const json& r = doc["robot"];
    detail::reject_unknown_keys(
        r, "robot",
        {"mass_kg", "inertia_yy_kgm2", "forward_reach_m", "leg_mount_offset_m",
         "leg_length_m", "leg_mount_angle_rad", "prop_offsets_m",
         "hip_stiffness_Nm_per_rad", "hip_damping_ratio", "alpha_max_rad_s2",
         "motor_time_constant_s"});
    cfg.robot.mass = detail::get_number(r, "robot", "mass_kg");
    cfg.robot.inertia_yy = detail::get_number(r, "robot", "inertia_yy_kgm2");
    cfg.robot.forward_reach = detail::get_number(r, "robot", "forward_reach_m");
    const auto mount = detail::get_number_list(r, "robot", "leg_mount_offset_m");
    if (mount.size() != 2)
      throw ConfigError("config: 'robot.leg_mount_offset_m' must be [x, z]");
    cfg.robot.leg_mount_offset = {mount[0], mount[1]};
    cfg.robot.leg_length = detail::get_number(r, "robot", "leg_length_m");
    cfg.robot.leg_mount_angle =
        detail::get_number(r, "robot", "leg_mount_angle_rad");
    if (!r.contains("prop_offsets_m") || !r["prop_offsets_m"].is_array())
      throw ConfigError("config: 'robot.prop_offsets_m' must be an array");
    for (const auto& p : r["prop_offsets_m"]) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() ||
          !p[1].is_number())
        throw ConfigError(
            "config: 'robot.prop_offsets_m' entries must be [x, z]");
      cfg.robot.prop_offsets.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    const double k = detail::get_number(r, "robot", "hip_stiffness_Nm_per_rad");
    if (k < 0.0) throw ConfigError("config: hip stiffness must be >= 0");
    cfg.robot.hip_stiffness = k;
    cfg.robot.hip_damping_ratio =
        detail::get_number(r, "robot", "hip_damping_ratio");
    cfg.robot.alpha_max = detail::get_number(r, "robot", "alpha_max_rad_s2");
    cfg.robot.motor_time_constant =
        detail::get_number(r, "robot", "motor_time_constant_s");
    try {
      validate(cfg.robot);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: robot: ") + e.what());
    }
  }

  if (doc.contains("surface")) {
    const json& s = doc["surface"];
    detail::reject_unknown_keys(
        s, "surface", {"plane_angles_deg", "contact_epsilon_m", "attach_range_m"});
    if (s.contains("plane_angles_deg"))
      cfg.plane_angles_deg =
          detail::get_number_list(s, "surface", "plane_angles_deg");
    cfg.contact_epsilon =
        detail::get_number_or(s, "surface", "contact_epsilon_m", 0.002);
    cfg.attach_range =
        detail::get_number_or(s, "surface", "attach_range_m", 0.010);
    for (double a : cfg.plane_angles_deg)
      if (a < 0.0 || a > 180.0)
        throw ConfigError("config: plane angles must lie in [0, 180] deg");
    try {
      validate(cfg.surface_for(cfg.plane_angles_deg.front()));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: surface: ") + e.what());
    }
  }

  if (doc.contains("env")) {
    const json& e = doc["env"];
    detail::reject_unknown_keys(
        e, "env",
        {"start_distance_m", "tau_max_s", "reward_k1_per_s", "reward_k2_per_m",
         "post_trigger_timeout_s", "min_perp_speed_m_s"});
    cfg.env.start_distance =
        detail::get_number_or(e, "env", "start_distance_m", 2.0);
    cfg.env.tau_max = detail::get_number_or(e, "env", "tau_max_s", 5.0);
    cfg.env.reward_k1 = detail::get_number_or(e, "env", "reward_k1_per_s", 5.0);
    cfg.env.reward_k2 = detail::get_number_or(e, "env", "reward_k2_per_m", 10.0);
    cfg.env.post_trigger_timeout =
        detail::get_number_or(e, "env", "post_trigger_timeout_s", 3.0);
    cfg.env.min_perp_speed =
        detail::get_number_or(e, "env", "min_perp_speed_m_s", 0.3);
    if (!(cfg.env.start_distance > 0.0) || !(cfg.env.tau_max > 0.0) ||
        !(cfg.env.post_trigger_timeout > 0.0))
      throw ConfigError("config: env scales must be > 0");
  }

  if (doc.contains("training")) {
    const json& t = doc["training"];
    detail::reject_unknown_keys(
        t, "training",
        {"episodes", "warmup_episodes", "updates_per_episode", "batch_size",
         "discount", "soft_update_tau", "lr_actor", "lr_critic",
         "lr_temperature", "target_entropy", "buffer_capacity",
         "speed_range_m_s", "plane_angles_deg"});
    const SacConfig defaults;
    cfg.sac.total_episodes = static_cast<int>(detail::get_number_or(
        t, "training", "episodes", defaults.total_episodes));
    cfg.sac.warmup_episodes = static_cast<int>(detail::get_number_or(
        t, "training", "warmup_episodes", defaults.warmup_episodes));
    cfg.sac.updates_per_episode = static_cast<int>(detail::get_number_or(
        t, "training", "updates_per_episode", defaults.updates_per_episode));
    cfg.sac.batch_size = static_cast<int>(
        detail::get_number_or(t, "training", "batch_size", defaults.batch_size));
    cfg.sac.discount =
        detail::get_number_or(t, "training", "discount", defaults.discount);
    cfg.sac.soft_update_tau = detail::get_number_or(
        t, "training", "soft_update_tau", defaults.soft_update_tau);
    cfg.sac.lr_actor =
        detail::get_number_or(t, "training", "lr_actor", defaults.lr_actor);
    cfg.sac.lr_critic =
        detail::get_number_or(t, "training", "lr_critic", defaults.lr_critic);
    cfg.sac.lr_temperature = detail::get_number_or(
        t, "training", "lr_temperature", defaults.lr_temperature);
    cfg.sac.target_entropy = detail::get_number_or(
        t, "training", "target_entropy", defaults.target_entropy);
    cfg.sac.buffer_capacity = static_cast<std::size_t>(detail::get_number_or(
        t, "training", "buffer_capacity",
        static_cast<double>(defaults.buffer_capacity)));
    if (t.contains("speed_range_m_s")) {
      const auto range =
          detail::get_number_list(t, "training", "speed_range_m_s");
      if (range.size() != 2 || !(range[0] > 0.0) || !(range[1] >= range[0]))
        throw ConfigError("config: 'training.speed_range_m_s' must be [lo, hi]");
      cfg.training_dist.speed_min = range[0];
      cfg.training_dist.speed_max = range[1];
    }
    if (t.contains("plane_angles_deg")) {
      cfg.training_dist.plane_angles.clear();
      for (double a :
           detail::get_number_list(t, "training", "plane_angles_deg")) {
        if (a < 0.0 || a > 180.0)
          throw ConfigError("config: training plane angles must lie in [0, 180]");
        cfg.training_dist.plane_angles.push_back(deg2rad(a));
      }
      if (cfg.training_dist.plane_angles.empty())
        throw ConfigError("config: 'training.plane_angles_deg' is empty");
    }
    try {
      validate(cfg.sac);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: training: ") + e.what());
    }
  }
  cfg.training_dist.contact_epsilon = cfg.contact_epsilon;
  cfg.training_dist.attach_range = cfg.attach_range;

  if (doc.contains("evaluation")) {
    const json& e = doc["evaluation"];
    detail::reject_unknown_keys(e, "evaluation",
                                {"speed_grid_m_s", "flight_angle_grid_deg",
                                 "trials", "smoothing_sigma_cells",
                                 "success_criterion"});
    cfg.eval.speeds = detail::get_grid(e, "evaluation", "speed_grid_m_s");
    cfg.eval.angles_deg =
        detail::get_grid(e, "evaluation", "flight_angle_grid_deg");
    cfg.eval.trials =
        static_cast<int>(detail::get_number_or(e, "evaluation", "trials", 5));
    cfg.eval.smoothing_sigma_cells =
        detail::get_number_or(e, "evaluation", "smoothing_sigma_cells", 1.0);
    if (e.contains("success_criterion")) {
      const std::string c = e["success_criterion"].get<std::string>();
      if (c == "four_leg")
        cfg.eval.criterion = SuccessCriterion::kFourLeg;
      else if (c == "any_contact")
        cfg.eval.criterion = SuccessCriterion::kAnyContact;
      else
        throw ConfigError(
            "config: 'evaluation.success_criterion' must be "
            "'four_leg' or 'any_contact'");
    }
    if (cfg.eval.trials < 1)
      throw ConfigError("config: 'evaluation.trials' must be >= 1");
    if (cfg.eval.smoothing_sigma_cells < 0.0)
      throw ConfigError("config: 'evaluation.smoothing_sigma_cells' must be >= 0");
  } else {
    for (double v = 0.5; v <= 5.0 + 1e-9; v += 0.25) cfg.eval.speeds.push_back(v);
    for (double a = 20.0; a <= 90.0 + 1e-9; a += 5.0)
      cfg.eval.angles_deg.push_back(a);
  }

  if (doc.contains("sweeps")) {
    const json& s = doc["sweeps"];
    detail::reject_unknown_keys(
        s, "sweeps", {"stiffness_Nm_per_rad", "damping_ratios", "alpha_max_rad_s2"});
    if (s.contains("stiffness_Nm_per_rad"))
      cfg.sweeps.stiffness =
          detail::get_number_list(s, "sweeps", "stiffness_Nm_per_rad");
    if (s.contains("damping_ratios"))
      cfg.sweeps.damping_ratios =
          detail::get_number_list(s, "sweeps", "damping_ratios");
    if (s.contains("alpha_max_rad_s2"))
      cfg.sweeps.alpha_max =
          detail::get_number_list(s, "sweeps", "alpha_max_rad_s2");
  }

  cfg.canonical_json = doc.dump();
  cfg.digest = digest_hex(fnv1a64(cfg.canonical_json));
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_config(doc);
}

inline std::string geometry_digest(const RobotGeometry& g) {
  std::ostringstream oss;
  oss.precision(17);
  oss << g.mass << '|' << g.inertia_yy << '|' << g.forward_reach << '|'
      << g.leg_mount_offset.x << '|' << g.leg_mount_offset.z << '|'
      << g.leg_length << '|' << g.leg_mount_angle << '|';
  for (const auto& p : g.prop_offsets) oss << p.x << ',' << p.z << ';';
  oss << '|' << g.hip_stiffness << '|' << g.hip_damping_ratio << '|'
      << g.alpha_max << '|' << g.motor_time_constant;
  return digest_hex(fnv1a64(oss.str()));
}

}  // namespace perchlab

#endif  // PERCHLAB_CONFIG_HPP_
