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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <optional>

#include "perchlab/analysis.hpp"
#include "test_util.hpp"

using namespace perchlab;

namespace {

SuccessMap blank_map(int ns, int na) {
  SuccessMap m;
  for (int i = 0; i < ns; ++i) m.speeds.push_back(1.0 + i);
  for (int j = 0; j < na; ++j) m.angles.push_back(deg2rad(30.0 + 5.0 * j));
  m.rate.assign(static_cast<std::size_t>(ns) * na, 0.0);
  m.rate_smoothed = m.rate;
  m.trials.assign(m.rate.size(), 5);
  return m;
}

// Independent dense route for the velocity threshold: closed-form ballistic
// position and piecewise-quadratic pitch sampled on a fine time grid, no
// shared stepping code.
std::optional<double> oracle_threshold(const RobotGeometry& geom,
                                       double alpha, const SurfaceSpec& surface,
                                       double v_step, double v_max) {
  const double dt = 5e-4;
  const double t90 = std::sqrt(kPi / alpha);
  const double omega90 = alpha * t90;
  auto pitch_at = [&](double t) {
    return t <= t90 ? 0.5 * alpha * t * t
                    : kPi / 2.0 + omega90 * (t - t90);
  };
  auto feasible = [&](double v, double d_trg) {
    double min_prop = std::numeric_limits<double>::infinity();
    for (double t = 0.0; t <= 2.5; t += dt) {
      Vec2 pos = surface.anchor_point + d_trg * surface.normal() -
                 (v * t) * surface.normal();
      pos.z -= 0.5 * kGravity * t * t;
      const WorldPoints w = world_points(geom, {pos, pitch_at(t)});
      const double d_pad = std::min(surface.distance(w.pad_front),
                                    surface.distance(w.pad_rear));
      double d_prop = surface.distance(w.props[0]);
      for (const Vec2& p : w.props)
        d_prop = std::min(d_prop, surface.distance(p));
      min_prop = std::min(min_prop, d_prop);
      if (d_pad <= 0.0) return min_prop > 0.0;
      if (min_prop <= 0.0) return false;
      if (surface.distance(pos) > d_trg + 0.5) return false;  // fell away
    }
    return false;
  };
  for (double v = v_step; v <= v_max + 0.5 * v_step; v += v_step)
    for (double d = 0.0; d <= 1.2 + 1e-9; d += 0.0025)
      if (feasible(v, d)) return v;
  return std::nullopt;
}

}  // namespace

TEST_CASE("zero-sigma smoothing is the identity") {
  SuccessMap m = blank_map(5, 4);
  m.at(2, 2) = 0.7;
  const SuccessMap s = smooth_map(m, 0.0);
  CHECK(s.rate_smoothed == m.rate);
}

TEST_CASE("constant maps are unchanged by smoothing") {
  SuccessMap m = blank_map(6, 6);
  for (double& v : m.rate) v = 0.42;
  const SuccessMap s = smooth_map(m, 1.0);
  for (double v : s.rate_smoothed) CHECK(v == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("an interior impulse spreads with unit total mass") {
  SuccessMap m = blank_map(15, 15);
  m.at(7, 7) = 1.0;
  const SuccessMap s = smooth_map(m, 1.0);
  double total = 0.0;
  for (double v : s.rate_smoothed) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  // Range is preserved.
  for (double v : s.rate_smoothed) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // Raw rates stay alongside.
  CHECK(s.rate == m.rate);
}

TEST_CASE("self-comparison is exactly zero") {
  SuccessMap m = blank_map(4, 3);
  m.at(1, 2) = 0.8;
  const MapDiff d = compare_maps(m, m);
  CHECK(d.mean_abs == 0.0);
  CHECK(d.max_abs == 0.0);
}

TEST_CASE("disjoint success regions diff by their union fraction") {
  SuccessMap a = blank_map(2, 2);
  SuccessMap b = blank_map(2, 2);
  a.at(0, 0) = 1.0;
  b.at(1, 1) = 1.0;
  const MapDiff d = compare_maps(a, b);
  CHECK(d.mean_abs == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.max_abs == 1.0);
}

TEST_CASE("grid mismatches are rejected") {
  const SuccessMap a = blank_map(3, 3);
  const SuccessMap b = blank_map(3, 4);
  CHECK_THROWS_AS(compare_maps(a, b), std::invalid_argument);
}

TEST_CASE("untriggering policy yields an all-zero map") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const SurfaceSpec c = testutil::ceiling(0.0);
  const PolicyHandle policy = testutil::never_trigger_policy();
  const SuccessMap m = sweep_success_map(policy, g, c, {1.0, 3.0},
                                         {deg2rad(50.0), deg2rad(80.0)}, 2, 9);
  for (double v : m.rate) CHECK(v == 0.0);
  for (int t : m.trials) CHECK(t == 2);
}

TEST_CASE("map rates equal a recount of the episode records") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const SurfaceSpec c = testutil::ceiling(0.0);
  const PolicyHandle policy = testutil::threshold_policy(0.3, 0.6);
  std::vector<EvalRecord> records;
  const SuccessMap m =
      sweep_success_map(policy, g, c, {2.0, 3.5},
                        {deg2rad(55.0), deg2rad(75.0)}, 5, 31, {},
                        SuccessCriterion::kFourLeg, 1, &records);
  CHECK(records.size() == 2 * 2 * 5);
  std::map<std::pair<std::size_t, std::size_t>, int> wins;
  for (const EvalRecord& r : records)
    if (r.result.n_legs == 4) wins[{r.speed_index, r.angle_index}]++;
  for (std::size_t i = 0; i < m.speeds.size(); ++i)
    for (std::size_t j = 0; j < m.angles.size(); ++j)
      CHECK(m.at(i, j) ==
            doctest::Approx(wins[{i, j}] / 5.0).epsilon(1e-12));
}

TEST_CASE("maps are deterministic and worker-count independent") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const SurfaceSpec c = testutil::ceiling(0.0);
  const PolicyHandle policy = testutil::threshold_policy(0.3, 0.6);
  const std::vector<double> speeds{2.0, 3.0, 4.0};
  const std::vector<double> angles{deg2rad(50.0), deg2rad(70.0),
                                   deg2rad(89.0)};
  const SuccessMap a = sweep_success_map(policy, g, c, speeds, angles, 3, 77,
                                         {}, SuccessCriterion::kFourLeg, 1);
  const SuccessMap b = sweep_success_map(policy, g, c, speeds, angles, 3, 77,
                                         {}, SuccessCriterion::kFourLeg, 4);
  CHECK(a.rate == b.rate);
}

TEST_CASE("cells that cannot reach the plane carry zero trials") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const SurfaceSpec c = testutil::ceiling(0.0);
  const PolicyHandle policy = testutil::threshold_policy(0.3, 0.6);
  // Downward flight never meets a ceiling.
  const SuccessMap m = sweep_success_map(policy, g, c, {2.0},
                                         {deg2rad(-45.0), deg2rad(60.0)}, 2, 5);
  CHECK(m.trials[m.index(0, 0)] == 0);
  CHECK(m.trials[m.index(0, 1)] == 2);
}

TEST_CASE("ground threshold collapses to the smallest grid value") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  ThresholdOptions opt;
  opt.v_step = 0.05;
  opt.v_max = 2.0;
  const auto v = predict_velocity_threshold(g, 1e4, testutil::ground(0.0), opt);
  REQUIRE(v.has_value());
  CHECK(*v == doctest::Approx(0.05));
}

TEST_CASE("ceiling threshold is non-increasing in the acceleration limit") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  ThresholdOptions opt;
  opt.v_step = 0.1;  // coarse grid keeps the unit test quick
  opt.trigger_step = 0.01;
  const SurfaceSpec c = testutil::ceiling(0.0);
  const auto v30 = predict_velocity_threshold(g, 30.0, c, opt);
  const auto v60 = predict_velocity_threshold(g, 60.0, c, opt);
  const auto v90 = predict_velocity_threshold(g, 90.0, c, opt);
  REQUIRE(v30.has_value());
  REQUIRE(v60.has_value());
  REQUIRE(v90.has_value());
  CHECK(*v30 >= *v60);
  CHECK(*v60 >= *v90);
  CHECK(*v90 > 0.0);
}

TEST_CASE("threshold predictor agrees with the dense closed-form oracle") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const SurfaceSpec c = testutil::ceiling(0.0);
  ThresholdOptions opt;
  opt.v_step = 0.05;
  const auto predicted = predict_velocity_threshold(g, 60.0, c, opt);
  const auto oracle = oracle_threshold(g, 60.0, c, 0.05, opt.v_max);
  REQUIRE(predicted.has_value());
  REQUIRE(oracle.has_value());
  CHECK(std::abs(*predicted - *oracle) <= 0.05 + 1e-12);
}

TEST_CASE("hinge sweep evaluates every stiffness/damping pair") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const SurfaceSpec c = testutil::ceiling(0.0);
  const PolicyHandle policy = testutil::never_trigger_policy();
  const auto maps =
      hinge_sweep(policy, g, c, {0.4, 8.5}, {0.3, 2.0}, {2.0},
                  {deg2rad(70.0)}, 1, 3);
  CHECK(maps.size() == 4);
  for (const auto& hm : maps) {
    CHECK((hm.stiffness == 0.4 || hm.stiffness == 8.5));
    CHECK((hm.damping_ratio == 0.3 || hm.damping_ratio == 2.0));
    for (double v : hm.map.rate) CHECK(v == 0.0);
  }
}

TEST_CASE("empty sweep lists are rejected") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const PolicyHandle policy = testutil::never_trigger_policy();
  CHECK_THROWS_AS(hinge_sweep(policy, g, testutil::ceiling(0.0), {}, {0.3},
                              {2.0}, {deg2rad(70.0)}, 1, 3),
                  std::invalid_argument);
}
