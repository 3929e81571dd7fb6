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

#ifndef PERCHLAB_ANALYSIS_HPP_
#define PERCHLAB_ANALYSIS_HPP_

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "perchlab/env.hpp"
#include "perchlab/geometry.hpp"
#include "perchlab/policy.hpp"
#include "perchlab/simcore.hpp"

namespace perchlab {

namespace detail {

inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min<int>(workers, static_cast<int>(n));
  pool.reserve(count);
  for (int i = 0; i < count; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

enum class SuccessCriterion { kFourLeg, kAnyContact };

inline bool episode_success(const EpisodeResult& r, SuccessCriterion c) {
  return c == SuccessCriterion::kFourLeg ? r.n_legs == 4 : r.n_legs >= 2;
}

// Landing-success rates over the (speed, flight angle) approach grid for one
// surface orientation. Cells whose condition cannot hit the plane carry zero
// trials.
struct SuccessMap {
  std::vector<double> speeds;   // m/s, strictly increasing
  std::vector<double> angles;   // rad, strictly increasing
  std::vector<double> rate;     // row-major [speed][angle], raw
  std::vector<double> rate_smoothed;
  std::vector<int> trials;
  SuccessCriterion criterion{SuccessCriterion::kFourLeg};

  std::size_t index(std::size_t i, std::size_t j) const {
    return i * angles.size() + j;
  }
  double& at(std::size_t i, std::size_t j) { return rate[index(i, j)]; }
  double at(std::size_t i, std::size_t j) const { return rate[index(i, j)]; }
};

// One evaluated episode, kept for log export and recount oracles.
struct EvalRecord {
  std::size_t speed_index{0};
  std::size_t angle_index{0};
  int trial{0};
  std::uint64_t seed{0};
  ApproachCondition condition;
  EpisodeResult result;
};

inline bool condition_reaches_plane(const ApproachCondition& cond,
                                    const SurfaceSpec& surface) {
  const Vec2 v{std::cos(cond.flight_angle), std::sin(cond.flight_angle)};
  return dot(v, surface.normal()) < 0.0;
}

// Runs `trials` stochastic rollouts per grid cell with per-trial seeds and
// reduces them to a success rate under the chosen criterion.
inline SuccessMap sweep_success_map(
    const PolicyHandle& policy, const RobotGeometry& geom,
    const SurfaceSpec& surface, const std::vector<double>& speeds,
    const std::vector<double>& angles, int trials, std::uint64_t seed,
    const EnvParams& env_params = {},
    SuccessCriterion criterion = SuccessCriterion::kFourLeg, int workers = 1,
    std::vector<EvalRecord>* records = nullptr) {
  if (trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");
  for (std::size_t i = 1; i < speeds.size(); ++i)
    if (!(speeds[i] > speeds[i - 1]))
      throw std::invalid_argument("sweep: speed grid must be increasing");
  for (std::size_t j = 1; j < angles.size(); ++j)
    if (!(angles[j] > angles[j - 1]))
      throw std::invalid_argument("sweep: angle grid must be increasing");

  SuccessMap map;
  map.speeds = speeds;
  map.angles = angles;
  map.criterion = criterion;
  const std::size_t cells = speeds.size() * angles.size();
  map.rate.assign(cells, 0.0);
  map.trials.assign(cells, 0);
  std::vector<std::vector<EvalRecord>> cell_records(records ? cells : 0);

  detail::parallel_for(cells, workers, [&](std::size_t cell) {
    const std::size_t i = cell / angles.size();
    const std::size_t j = cell % angles.size();
    const ApproachCondition cond{speeds[i], angles[j]};
    if (!condition_reaches_plane(cond, surface)) return;
    int wins = 0;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t ep_seed = mix_seed(seed, i, j, static_cast<std::uint64_t>(t));
      const EpisodeResult r =
          run_episode(policy, cond, surface, geom, ep_seed, env_params);
      if (episode_success(r, criterion)) ++wins;
      if (records) cell_records[cell].push_back({i, j, t, ep_seed, cond, r});
    }
    map.rate[cell] = static_cast<double>(wins) / trials;
    map.trials[cell] = trials;
  });

  if (records)
    for (auto& v : cell_records)
      for (auto& r : v) records->push_back(std::move(r));
  map.rate_smoothed = map.rate;
  return map;
}

// Gaussian smoothing on the grid for visualization; sigma in cells, kernel
// renormalized at boundaries. The raw rates stay untouched.
inline SuccessMap smooth_map(const SuccessMap& map, double sigma_cells) {
  if (!(sigma_cells >= 0.0))
    throw std::invalid_argument("smooth: sigma must be >= 0");
  SuccessMap out = map;
  if (sigma_cells == 0.0) {
    out.rate_smoothed = map.rate;
    return out;
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_cells));
  const int ns = static_cast<int>(map.speeds.size());
  const int na = static_cast<int>(map.angles.size());
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < na; ++j) {
      double acc = 0.0;
      double wsum = 0.0;
      for (int di = -radius; di <= radius; ++di) {
        for (int dj = -radius; dj <= radius; ++dj) {
          const int ii = i + di;
          const int jj = j + dj;
          if (ii < 0 || ii >= ns || jj < 0 || jj >= na) continue;
          const double w =
              std::exp(-0.5 * (di * di + dj * dj) / (sigma_cells * sigma_cells));
          acc += w * map.rate[map.index(ii, jj)];
          wsum += w;
        }
      }
      out.rate_smoothed[map.index(i, j)] = acc / wsum;
    }
  }
  return out;
}

struct MapDiff {
  std::vector<double> abs_diff;  // per cell
  double mean_abs{0.0};
  double max_abs{0.0};
};

inline MapDiff compare_maps(const SuccessMap& a, const SuccessMap& b) {
  if (a.speeds != b.speeds || a.angles != b.angles ||
      a.criterion != b.criterion)
    throw std::invalid_argument("compare_maps: grid or criterion mismatch");
  MapDiff d;
  d.abs_diff.resize(a.rate.size());
  for (std::size_t i = 0; i < a.rate.size(); ++i) {
    d.abs_diff[i] = std::abs(a.rate[i] - b.rate[i]);
    d.mean_abs += d.abs_diff[i];
    d.max_abs = std::max(d.max_abs, d.abs_diff[i]);
  }
  if (!d.abs_diff.empty()) d.mean_abs /= static_cast<double>(d.abs_diff.size());
  return d;
}

// ---------------------------------------------------------------------------
// Kinematic velocity threshold

struct ThresholdOptions {
  double v_step{0.05};        // m/s
  double v_max{6.0};          // m/s
  double trigger_step{0.005};  // m, origin-to-plane distance grid
  double trigger_max{1.2};    // m
  double sim_horizon{2.5};    // s per candidate
  double dt{0.001};           // s
};

// Minimum perpendicular approach speed for which some trigger distance puts
// a pad on the plane before any prop point, under ballistic translation and
// a constant rotation at the angular-acceleration limit. Empty when nothing
// in the search range works.
inline std::optional<double> predict_velocity_threshold(
    const RobotGeometry& geom, double alpha_max, const SurfaceSpec& surface,
    const ThresholdOptions& opt = {}) {
  if (!(alpha_max > 0.0))
    throw std::invalid_argument("threshold: alpha_max must be > 0");
  for (double v = opt.v_step; v <= opt.v_max + 0.5 * opt.v_step;
       v += opt.v_step) {
    for (double d = 0.0; d <= opt.trigger_max + 0.5 * opt.trigger_step;
         d += opt.trigger_step) {
      if (pad_first_feasible(geom, surface, alpha_max, v, d, opt.dt,
                             opt.sim_horizon))
        return v;
    }
  }
  return std::nullopt;
}

struct ThresholdCurve {
  std::vector<double> alpha_max;  // rad/s^2
  std::vector<std::optional<double>> v_perp_min;  // m/s
};

inline ThresholdCurve threshold_curve(const RobotGeometry& geom,
                                      const std::vector<double>& alphas,
                                      const SurfaceSpec& surface,
                                      const ThresholdOptions& opt = {},
                                      int workers = 1) {
  ThresholdCurve curve;
  curve.alpha_max = alphas;
  curve.v_perp_min.resize(alphas.size());
  detail::parallel_for(alphas.size(), workers, [&](std::size_t i) {
    curve.v_perp_min[i] =
        predict_velocity_threshold(geom, alphas[i], surface, opt);
  });
  return curve;
}

// ---------------------------------------------------------------------------
// Hinge sweeps

struct HingeMap {
  double stiffness{0.0};
  double damping_ratio{0.0};
  SuccessMap map;
};

// Evaluates one trained policy across the cross product of hip stiffness and
// damping-ratio values.
inline std::vector<HingeMap> hinge_sweep(
    const PolicyHandle& policy, const RobotGeometry& geom,
    const SurfaceSpec& surface, const std::vector<double>& stiffness,
    const std::vector<double>& damping, const std::vector<double>& speeds,
    const std::vector<double>& angles, int trials, std::uint64_t seed,
    const EnvParams& env_params = {},
    SuccessCriterion criterion = SuccessCriterion::kFourLeg, int workers = 1) {
  if (stiffness.empty() || damping.empty())
    throw std::invalid_argument("hinge_sweep: empty sweep list");
  std::vector<HingeMap> out;
  for (double k : stiffness) {
    for (double z : damping) {
      RobotGeometry g = geom;
      g.hip_stiffness = k;
      g.hip_damping_ratio = z;
      HingeMap hm;
      hm.stiffness = k;
      hm.damping_ratio = z;
      hm.map = sweep_success_map(policy, g, surface, speeds, angles, trials,
                                 mix_seed(seed, std::llround(k * 1e6),
                                          std::llround(z * 1e6)),
                                 env_params, criterion, workers);
      out.push_back(std::move(hm));
    }
  }
  return out;
}

}  // namespace perchlab

#endif  // PERCHLAB_ANALYSIS_HPP_
