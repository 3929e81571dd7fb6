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

#ifndef PERCHLAB_IO_HPP_
#define PERCHLAB_IO_HPP_

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "perchlab/analysis.hpp"
#include "perchlab/config.hpp"
#include "perchlab/env.hpp"
#include "perchlab/sac.hpp"

namespace perchlab {

// Fixed formatting so identical runs produce byte-identical artifacts.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

struct ArtifactStamp {
  std::string config_digest;
  std::uint64_t seed{0};
};

inline void write_stamp(std::ofstream& os, const ArtifactStamp& stamp) {
  os << "# config_digest=" << stamp.config_digest << "\n";
  os << "# seed=" << stamp.seed << "\n";
}

inline const char* criterion_name(SuccessCriterion c) {
  return c == SuccessCriterion::kFourLeg ? "four_leg" : "any_contact";
}

inline void write_success_map_csv(const std::string& path,
                                  const SuccessMap& map,
                                  const ArtifactStamp& stamp) {
  std::ofstream os = open_out(path);
  write_stamp(os, stamp);
  os << "speed_m_s,flight_angle_deg,rate_raw,rate_smoothed,trials,criterion\n";
  for (std::size_t i = 0; i < map.speeds.size(); ++i)
    for (std::size_t j = 0; j < map.angles.size(); ++j)
      os << fmt(map.speeds[i]) << ',' << fmt(rad2deg(map.angles[j])) << ','
         << fmt(map.rate[map.index(i, j)]) << ','
         << fmt(map.rate_smoothed[map.index(i, j)]) << ','
         << map.trials[map.index(i, j)] << ',' << criterion_name(map.criterion)
         << "\n";
}

inline void write_map_sidecar(const std::string& path, const SuccessMap& map,
                              const ExperimentConfig& cfg, double theta_deg,
                              const RobotGeometry& geom) {
  json side;
  side["config_digest"] = cfg.digest;
  side["geometry_digest"] = geometry_digest(geom);
  side["seed"] = cfg.seed;
  side["surface_theta_deg"] = theta_deg;
  side["criterion"] = criterion_name(map.criterion);
  side["trials"] = map.trials.empty() ? 0 : map.trials.front();
  side["speed_grid_m_s"] = map.speeds;
  json angles = json::array();
  for (double a : map.angles) angles.push_back(rad2deg(a));
  side["flight_angle_grid_deg"] = angles;
  open_out(path) << side.dump(2) << "\n";
}

inline void write_threshold_csv(const std::string& path,
                                const ThresholdCurve& curve,
                                const ArtifactStamp& stamp,
                                const std::string& geom_digest) {
  std::ofstream os = open_out(path);
  write_stamp(os, stamp);
  os << "# geometry_digest=" << geom_digest << "\n";
  os << "alpha_max_rad_s2,v_perp_min_m_s\n";
  for (std::size_t i = 0; i < curve.alpha_max.size(); ++i) {
    os << fmt(curve.alpha_max[i]) << ',';
    if (curve.v_perp_min[i])
      os << fmt(*curve.v_perp_min[i]);
    else
      os << "above_range";
    os << "\n";
  }
}

inline void write_learning_curve_csv(const std::string& path,
                                     const std::vector<LearningCurveRow>& rows,
                                     const ArtifactStamp& stamp) {
  std::ofstream os = open_out(path);
  write_stamp(os, stamp);
  os << "episode,reward,n_legs,triggered,plane_angle_deg,speed_m_s,"
        "flight_angle_deg\n";
  for (const auto& r : rows)
    os << r.episode << ',' << fmt(r.reward) << ',' << r.n_legs << ','
       << (r.triggered ? 1 : 0) << ',' << fmt(rad2deg(r.plane_angle)) << ','
       << fmt(r.speed) << ',' << fmt(rad2deg(r.flight_angle)) << "\n";
}

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kApproach: return "approach";
    case Phase::kRotation: return "rotation";
    case Phase::kSwing: return "swing";
    case Phase::kSettled: return "settled";
    case Phase::kFailed: return "failed";
  }
  return "unknown";
}

inline void write_trajectory_csv(const std::string& path,
                                 const EpisodeResult& result,
                                 const ArtifactStamp& stamp) {
  std::ofstream os = open_out(path);
  write_stamp(os, stamp);
  os << "time_s,x_m,z_m,pitch_rad,pitch_rate_rad_s,phase,d_pad_m,d_prop_m\n";
  for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
    const SimState& s = result.trajectory[i];
    const DistanceSample& d = result.trace.samples[i];
    os << fmt(s.time) << ',' << fmt(s.position.x) << ',' << fmt(s.position.z)
       << ',' << fmt(s.pitch) << ',' << fmt(s.pitch_rate) << ','
       << phase_name(s.phase) << ',' << fmt(d.d_pad) << ',' << fmt(d.d_prop)
       << "\n";
  }
}

inline void write_diff_csv(const std::string& path, const SuccessMap& a,
                           const MapDiff& diff, const ArtifactStamp& stamp) {
  std::ofstream os = open_out(path);
  write_stamp(os, stamp);
  os << "# mean_abs_diff=" << fmt(diff.mean_abs) << "\n";
  os << "# max_abs_diff=" << fmt(diff.max_abs) << "\n";
  os << "speed_m_s,flight_angle_deg,abs_diff\n";
  for (std::size_t i = 0; i < a.speeds.size(); ++i)
    for (std::size_t j = 0; j < a.angles.size(); ++j)
      os << fmt(a.speeds[i]) << ',' << fmt(rad2deg(a.angles[j])) << ','
         << fmt(diff.abs_diff[a.index(i, j)]) << "\n";
}

inline json episode_to_json(const ApproachCondition& cond,
                            const SurfaceSpec& surface, std::uint64_t seed,
                            const EpisodeResult& r) {
  json j;
  j["speed_m_s"] = cond.speed;
  j["flight_angle_deg"] = rad2deg(cond.flight_angle);
  j["plane_angle_deg"] = rad2deg(surface.theta_plane);
  j["seed"] = seed;
  j["triggered"] = r.triggered;
  j["tau_trg_s"] = r.tau_trg;
  j["a_rot_rad_s2"] = r.a_rot_used;
  j["min_d_pad_m"] = r.min_d_pad;
  j["min_d_prop_m"] = r.min_d_prop;
  j["phi_impact_deg"] = rad2deg(r.phi_impact);
  j["n_legs"] = r.n_legs;
  j["body_or_prop_contact"] = r.body_or_prop_contact;
  j["final_phase"] = phase_name(r.final_phase);
  j["reward"] = r.reward_scalar;
  j["reward_terms"] = {r.reward.r_tau_trg, r.reward.r_d_pad,
                       r.reward.r_gravity, r.reward.r_momentum,
                       r.reward.r_phi, r.reward.r_legs};
  return j;
}

inline void write_episode_log_jsonl(const std::string& path,
                                    const SurfaceSpec& surface,
                                    const std::vector<EvalRecord>& records) {
  std::ofstream os = open_out(path);
  for (const EvalRecord& r : records)
    os << episode_to_json(r.condition, surface, r.seed, r.result).dump()
       << "\n";
}

// Loads a success map back from its CSV export (for compare workflows).
inline SuccessMap read_success_map_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  SuccessMap map;
  std::vector<double> speeds;
  std::vector<double> angles;
  std::vector<std::tuple<double, double, double, double, int, std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("speed_m_s", 0) == 0) continue;  // header
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 6)
      throw std::runtime_error("map csv: malformed row in " + path);
    rows.emplace_back(std::stod(fields[0]), std::stod(fields[1]),
                      std::stod(fields[2]), std::stod(fields[3]),
                      std::stoi(fields[4]), fields[5]);
  }
  if (rows.empty()) throw std::runtime_error("map csv: no rows in " + path);
  for (const auto& r : rows) {
    if (speeds.empty() || std::get<0>(r) != speeds.back()) {
      if (speeds.empty() || std::get<0>(r) > speeds.back())
        speeds.push_back(std::get<0>(r));
    }
    if (speeds.size() == 1) angles.push_back(deg2rad(std::get<1>(r)));
  }
  map.speeds = speeds;
  map.angles = angles;
  map.criterion = std::get<5>(rows.front()) == "four_leg"
                      ? SuccessCriterion::kFourLeg
                      : SuccessCriterion::kAnyContact;
  map.rate.resize(rows.size());
  map.rate_smoothed.resize(rows.size());
  map.trials.resize(rows.size());
  if (rows.size() != speeds.size() * angles.size())
    throw std::runtime_error("map csv: ragged grid in " + path);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    map.rate[k] = std::get<2>(rows[k]);
    map.rate_smoothed[k] = std::get<3>(rows[k]);
    map.trials[k] = std::get<4>(rows[k]);
  }
  return map;
}

}  // namespace perchlab

#endif  // PERCHLAB_IO_HPP_
