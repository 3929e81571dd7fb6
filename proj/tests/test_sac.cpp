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
#include <vector>

#include "perchlab/sac.hpp"
#include "test_util.hpp"

using namespace perchlab;

namespace {

std::vector<Transition> random_batch(int n, Rng& rng) {
  std::vector<Transition> batch(n);
  for (auto& t : batch) {
    for (double& v : t.obs) v = rng.uniform(-1.0, 1.0);
    for (double& v : t.action) v = rng.uniform(-0.99, 0.99);
    t.reward = rng.uniform(-1.0, 6.0);
    t.next_obs = t.obs;
    t.terminal = true;
  }
  return batch;
}

bool params_equal(const MlpParams& a, const MlpParams& b) {
  for (std::size_t li = 0; li < a.layers.size(); ++li) {
    if (a.layers[li].w != b.layers[li].w) return false;
    if (a.layers[li].b != b.layers[li].b) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("replay ring respects capacity and overwrites oldest") {
  ReplayBuffer buf(4);
  for (int i = 0; i < 10; ++i) {
    Transition t;
    t.reward = i;
    buf.add(t);
  }
  CHECK(buf.size() == 4);
  CHECK(buf.insert_count() == 10);
  // Remaining rewards are the last four inserted.
  Rng rng(1);
  for (int i = 0; i < 50; ++i) CHECK(buf.sample(rng).reward >= 6.0);
}

TEST_CASE("replay sampling is uniform") {
  const int capacity = 100;
  ReplayBuffer buf(capacity);
  for (int i = 0; i < capacity; ++i) {
    Transition t;
    t.reward = i;
    buf.add(t);
  }
  Rng rng(77);
  const int draws = 100000;
  std::vector<int> counts(capacity, 0);
  for (int i = 0; i < draws; ++i)
    counts[static_cast<int>(buf.sample(rng).reward)]++;
  // Pearson chi-square against uniform; 99 dof, 160 is far in the tail.
  const double expected = static_cast<double>(draws) / capacity;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 160.0);
}

TEST_CASE("soft update applies the exact convex combination") {
  Rng rng(42);
  MlpParams target = make_mlp(kObsDim + kActionDim, 1, rng);
  const MlpParams online = make_mlp(kObsDim + kActionDim, 1, rng);
  const MlpParams before = target;
  const double tau = 0.005;
  SacTrainer::soft_update(&target, online, tau);
  for (std::size_t li = 0; li < target.layers.size(); ++li)
    for (std::size_t i = 0; i < target.layers[li].w.size(); ++i)
      CHECK(target.layers[li].w[i] ==
            (1.0 - tau) * before.layers[li].w[i] +
                tau * online.layers[li].w[i]);
}

TEST_CASE("terminal transitions bootstrap to the raw reward") {
  SacConfig cfg;
  SacTrainer trainer(cfg, ObsNorm{}, 1);
  Transition t;
  t.reward = 3.25;
  t.terminal = true;
  CHECK(trainer.bootstrap_target(t) == 3.25);
}

TEST_CASE("zero discount reduces the non-terminal target to the reward") {
  SacConfig cfg;
  cfg.discount = 1e-12;  // discount must be > 0; vanishing bootstrap
  SacTrainer trainer(cfg, ObsNorm{}, 1);
  Transition t;
  t.reward = 1.5;
  t.terminal = false;
  CHECK(trainer.bootstrap_target(t) == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("temperature gradient flips sign around the target entropy") {
  const double target = -2.0;
  // Entropy above target (mean log pi < -target): positive gradient, so
  // descent shrinks alpha; entropy below target grows it.
  CHECK(temperature_grad(0.0, 1.0, target) > 0.0);
  CHECK(temperature_grad(0.0, 3.0, target) < 0.0);
  CHECK(temperature_grad(0.0, 2.0, target) == 0.0);
}

TEST_CASE("one plain gradient step decreases the critic loss") {
  Rng rng(7);
  MlpParams critic = make_mlp(kObsDim + kActionDim, 1, rng);
  const std::vector<Transition> batch = random_batch(8, rng);
  std::vector<double> targets;
  for (const auto& t : batch) targets.push_back(t.reward);
  double loss0 = 0.0;
  const MlpGrads g = critic_loss_grads(critic, batch, targets, &loss0);
  const double lr = 1e-3;
  for (std::size_t li = 0; li < critic.layers.size(); ++li) {
    for (std::size_t i = 0; i < critic.layers[li].w.size(); ++i)
      critic.layers[li].w[i] -= lr * g.layers[li].w[i];
    for (std::size_t i = 0; i < critic.layers[li].b.size(); ++i)
      critic.layers[li].b[i] -= lr * g.layers[li].b[i];
  }
  CHECK(critic_loss(critic, batch, targets) < loss0);
}

TEST_CASE("critic gradients match finite differences") {
  Rng rng(1234);
  for (int trial = 0; trial < 5; ++trial) {
    const MlpParams critic = make_mlp(kObsDim + kActionDim, 1, rng);
    const std::vector<Transition> batch = random_batch(4, rng);
    std::vector<double> targets;
    for (const auto& t : batch) targets.push_back(t.reward);
    const MlpGrads g = critic_loss_grads(critic, batch, targets);
    auto loss = [&](const MlpParams& p) {
      return critic_loss(p, batch, targets);
    };
    MlpParams probe = critic;
    ForwardCache unused;
    (void)unused;
    double worst = 0.0;
    for (std::size_t li = 0; li < probe.layers.size(); ++li) {
      auto sweep = [&](std::vector<double>& vec, const std::vector<double>& gv) {
        for (std::size_t i = 0; i < vec.size(); ++i) {
          const double saved = vec[i];
          const double h = 1e-6;
          vec[i] = saved + h;
          const double up = loss(probe);
          vec[i] = saved - h;
          const double down = loss(probe);
          vec[i] = saved;
          const double fd = (up - down) / (2.0 * h);
          const double scale = std::max({std::abs(fd), std::abs(gv[i]), 1e-4});
          worst = std::max(worst, std::abs(fd - gv[i]) / scale);
        }
      };
      sweep(probe.layers[li].w, g.layers[li].w);
      sweep(probe.layers[li].b, g.layers[li].b);
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("actor gradients match finite differences") {
  Rng rng(4321);
  for (int trial = 0; trial < 5; ++trial) {
    const MlpParams actor = make_mlp(kObsDim, 2 * kActionDim, rng);
    const MlpParams c1 = make_mlp(kObsDim + kActionDim, 1, rng);
    const MlpParams c2 = make_mlp(kObsDim + kActionDim, 1, rng);
    const double alpha = 0.2;
    std::vector<ObsVector> obs(4);
    std::vector<ActionVector> noise(4);
    for (auto& o : obs)
      for (double& v : o) v = rng.uniform(-1.0, 1.0);
    for (auto& nz : noise)
      for (double& v : nz) v = rng.normal();

    const MlpGrads g = actor_loss_grads(actor, c1, c2, alpha, obs, noise);
    auto loss = [&](const MlpParams& p) {
      return actor_loss(p, c1, c2, alpha, obs, noise);
    };
    MlpParams probe = actor;
    double worst = 0.0;
    for (std::size_t li = 0; li < probe.layers.size(); ++li) {
      auto sweep = [&](std::vector<double>& vec, const std::vector<double>& gv) {
        for (std::size_t i = 0; i < vec.size(); ++i) {
          const double saved = vec[i];
          const double h = 1e-6;
          vec[i] = saved + h;
          const double up = loss(probe);
          vec[i] = saved - h;
          const double down = loss(probe);
          vec[i] = saved;
          const double fd = (up - down) / (2.0 * h);
          const double scale = std::max({std::abs(fd), std::abs(gv[i]), 1e-4});
          worst = std::max(worst, std::abs(fd - gv[i]) / scale);
        }
      };
      sweep(probe.layers[li].w, g.layers[li].w);
      sweep(probe.layers[li].b, g.layers[li].b);
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("zero learning rates make training a fixed point") {
  SacConfig cfg;
  cfg.lr_actor = 0.0;
  cfg.lr_critic = 0.0;
  cfg.lr_temperature = 0.0;
  cfg.batch_size = 8;
  SacTrainer trainer(cfg, ObsNorm{}, 99);
  Rng rng(5);
  for (const auto& t : random_batch(32, rng)) trainer.add_transition(t);
  const MlpParams actor_before = trainer.actor();
  const MlpParams critic_before = trainer.critic1();
  const double alpha_before = trainer.log_alpha();
  for (int i = 0; i < 5; ++i) trainer.update_step();
  CHECK(params_equal(trainer.actor(), actor_before));
  CHECK(params_equal(trainer.critic1(), critic_before));
  CHECK(trainer.log_alpha() == alpha_before);
}

TEST_CASE("updates reduce critic loss on a fixed buffer") {
  SacConfig cfg;
  cfg.batch_size = 16;
  SacTrainer trainer(cfg, ObsNorm{}, 7);
  Rng rng(8);
  const std::vector<Transition> data = random_batch(64, rng);
  for (const auto& t : data) trainer.add_transition(t);
  std::vector<double> targets;
  for (const auto& t : data) targets.push_back(t.reward);
  const double loss0 = critic_loss(trainer.critic1(), data, targets);
  for (int i = 0; i < 300; ++i) trainer.update_step();
  const double loss1 = critic_loss(trainer.critic1(), data, targets);
  CHECK(loss1 < loss0);
}

TEST_CASE("synthetic training is bit-deterministic") {
  SacConfig cfg;
  cfg.total_episodes = 80;
  cfg.warmup_episodes = 20;
  cfg.updates_per_episode = 4;
  const SyntheticResult a = train_synthetic(cfg, 31);
  const SyntheticResult b = train_synthetic(cfg, 31);
  REQUIRE(a.rewards.size() == b.rewards.size());
  for (std::size_t i = 0; i < a.rewards.size(); ++i)
    CHECK(a.rewards[i] == b.rewards[i]);
}

TEST_CASE("plateau detector fires on a flattened curve") {
  std::vector<double> rewards;
  for (int i = 0; i < 700; ++i) rewards.push_back(i < 150 ? i * 0.01 : 1.5);
  const int plateau = detect_plateau(rewards);
  // Earliest detection is plateau start + window + span.
  CHECK(plateau >= 350);
  CHECK(plateau <= 460);
  std::vector<double> rising;
  for (int i = 0; i < 700; ++i) rising.push_back(i * 0.05);
  CHECK(detect_plateau(rising) == -1);
}
