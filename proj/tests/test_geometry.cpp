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

#include "perchlab/geometry.hpp"
#include "perchlab/rng.hpp"
#include "test_util.hpp"

using namespace perchlab;

namespace {

RobotGeometry random_geometry(Rng& rng) {
  RobotGeometry g = testutil::source_one_semi_narrow();
  g.mass = rng.uniform(0.05, 3.0);
  g.inertia_yy = rng.uniform(1e-5, 0.02);
  g.forward_reach = rng.uniform(0.04, 0.4);
  g.leg_mount_offset = {rng.uniform(0.0, 0.08), rng.uniform(-0.05, 0.02)};
  g.leg_length = rng.uniform(0.02, 0.3);
  g.leg_mount_angle = rng.uniform(0.0, 1.2);
  g.prop_offsets = {{g.forward_reach, rng.uniform(-0.02, 0.02)},
                    {-g.forward_reach, rng.uniform(-0.02, 0.02)}};
  return g;
}

}  // namespace

TEST_CASE("semi-narrow-short inputs reproduce the published pair") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const DimensionlessGeometry d = derive_dimensionless(g);
  CHECK(d.length_ratio == doctest::Approx(1.08).epsilon(1e-9));
  CHECK(rad2deg(d.leg_angle_gamma) == doctest::Approx(27.3).epsilon(1e-6));
  // Reconstruction matches the table within 0.1 degree.
  CHECK(std::abs(rad2deg(d.leg_angle_gamma) - 27.3) < 0.1);
}

TEST_CASE("vertical leg has zero gamma") {
  RobotGeometry g = testutil::source_one_semi_narrow();
  g.leg_mount_offset = {0.0, -0.02};
  g.leg_mount_angle = 0.0;
  const DimensionlessGeometry d = derive_dimensionless(g);
  CHECK(d.leg_angle_gamma == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("degenerate leg is rejected") {
  RobotGeometry g = testutil::source_one_semi_narrow();
  g.leg_mount_offset = {0.0, 0.02};
  g.leg_length = 0.02;
  g.leg_mount_angle = 0.0;  // tip lands exactly on the origin
  CHECK_THROWS_AS(validate(g), std::invalid_argument);
}

TEST_CASE("scale by one is the identity") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const RobotGeometry s = scale_geometry(g, 1.0);
  CHECK(s.mass == g.mass);
  CHECK(s.inertia_yy == g.inertia_yy);
  CHECK(s.forward_reach == g.forward_reach);
  CHECK(s.leg_length == g.leg_length);
}

TEST_CASE("mass follows the cube law") {
  RobotGeometry g = testutil::source_one_semi_narrow();
  g.mass = 0.5;
  const RobotGeometry s = scale_geometry(g, 2.0);
  CHECK(s.mass == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s.inertia_yy == doctest::Approx(g.inertia_yy * 32.0).epsilon(1e-12));
}

TEST_CASE("nonpositive scale is rejected") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  CHECK_THROWS_AS(scale_geometry(g, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(scale_geometry(g, -1.0), std::invalid_argument);
}

TEST_CASE("7/12 scaling keeps the dimensionless pair") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const RobotGeometry micro = scale_geometry(g, 7.0 / 12.0);
  const DimensionlessGeometry a = derive_dimensionless(g);
  const DimensionlessGeometry b = derive_dimensionless(micro);
  CHECK(std::abs(a.length_ratio - b.length_ratio) < 1e-12);
  CHECK(std::abs(a.leg_angle_gamma - b.leg_angle_gamma) < 1e-12);
  CHECK(micro.forward_reach == doctest::Approx(0.0889).epsilon(1e-12));
}

TEST_CASE("scale invariance holds for random geometries and factors") {
  Rng rng(12345);
  for (int trial = 0; trial < 200; ++trial) {
    const RobotGeometry g = random_geometry(rng);
    const double s = std::exp(rng.uniform(-2.0, 2.0));
    const DimensionlessGeometry a = derive_dimensionless(g);
    const DimensionlessGeometry b = derive_dimensionless(scale_geometry(g, s));
    CHECK(std::abs(a.length_ratio - b.length_ratio) < 1e-12);
    CHECK(std::abs(a.leg_angle_gamma - b.leg_angle_gamma) < 1e-12);
  }
}

TEST_CASE("world_points at zero pose returns body offsets") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  const WorldPoints w = world_points(g, {Vec2{0.0, 0.0}, 0.0});
  const Vec2 tip = g.pad_tip_body();
  CHECK(w.pad_front.x == doctest::Approx(tip.x).epsilon(1e-15));
  CHECK(w.pad_front.z == doctest::Approx(tip.z).epsilon(1e-15));
  CHECK(w.props[0].x == doctest::Approx(0.1524).epsilon(1e-15));
}

TEST_CASE("half rotation flips the pad") {
  RobotGeometry g = testutil::source_one_semi_narrow();
  g.leg_mount_offset = {0.0, -0.05};
  g.leg_mount_angle = 0.0;
  g.leg_length = 0.1;
  const WorldPoints w = world_points(g, {Vec2{0.0, 0.0}, kPi});
  CHECK(w.pad_front.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(w.pad_front.z == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("quarter rotation moves the pad from -Z to +X") {
  RobotGeometry g = testutil::source_one_semi_narrow();
  g.leg_mount_offset = {0.0, -0.05};
  g.leg_mount_angle = 0.0;
  g.leg_length = 0.1;
  const WorldPoints w = world_points(g, {Vec2{0.0, 0.0}, kPi / 2.0});
  CHECK(w.pad_front.x == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(w.pad_front.z == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("world_points is an isometry") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const RobotGeometry g = random_geometry(rng);
    const Pose pose{{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)},
                    rng.uniform(-8.0, 8.0)};
    const WorldPoints w = world_points(g, pose);
    const double body = norm(g.pad_tip_body() - g.prop_offsets[0]);
    const double world = norm(w.pad_front - w.props[0]);
    CHECK(std::abs(body - world) < 1e-12);
    const double body2 = norm(g.pad_tip_body() - g.pad_tip_body_rear());
    const double world2 = norm(w.pad_front - w.pad_rear);
    CHECK(std::abs(body2 - world2) < 1e-12);
  }
}

TEST_CASE("non-finite pose is rejected") {
  const RobotGeometry g = testutil::source_one_semi_narrow();
  CHECK_THROWS_AS(
      world_points(g, {Vec2{std::nan(""), 0.0}, 0.0}), std::invalid_argument);
}
