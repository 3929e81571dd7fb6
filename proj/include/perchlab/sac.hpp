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

#ifndef PERCHLAB_SAC_HPP_
#define PERCHLAB_SAC_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "perchlab/env.hpp"
#include "perchlab/policy.hpp"
#include "perchlab/rng.hpp"

namespace perchlab {

// Fixed-capacity ring buffer with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay: capacity must be > 0");
    items_.reserve(capacity);
  }

  void add(const Transition& t) {
    if (items_.size() < capacity_) {
      items_.push_back(t);
    } else {
      items_[insert_count_ % capacity_] = t;
    }
    ++insert_count_;
  }

  const Transition& sample(Rng& rng) const {
    if (items_.empty()) throw std::runtime_error("replay: empty buffer");
    return items_[rng.uniform_index(items_.size())];
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insert_count() const { return insert_count_; }

 private:
  std::size_t capacity_;
  std::uint64_t insert_count_{0};
  std::vector<Transition> items_;
};

struct SacConfig {
  double discount{0.99};
  double soft_update_tau{0.01};
  int batch_size{128};
  double lr_actor{1e-3};
  double lr_critic{3e-3};
  double lr_temperature{3e-4};
  double target_entropy{-2.0};  // -dim(action)
  std::size_t buffer_capacity{500000};  // ~5k episodes of per-tick ticks
  int updates_per_episode{64};
  int total_episodes{1500};
  int warmup_episodes{50};        // random-action episodes
  int updates_start_episode{10};  // gradient steps begin here
  // Fraction of post-warmup episodes rolled out with the tau-targeted
  // random source instead of the policy, annealed linearly over training.
  // Keeps late-trigger outcomes in the buffer after the temperature drops.
  double explore_prob_start{0.5};
  double explore_prob_end{0.2};
  double explore_tau_max{0.5};  // s, exploration trigger-tau upper bound
  // Exploration rotation band (fractions of alpha_max); biased toward the
  // rotation direction that carries the legs into the surface.
  double explore_rot_lo{0.2};
  double explore_rot_hi{1.0};
  // Success-replay curriculum: fraction of exploration episodes that reuse a
  // perturbed trigger from the nearest previously successful episode instead
  // of a fresh uniform draw. Successful triggers are rare events; replaying
  // them densifies the positive examples the critic needs.
  double explore_replay_prob{0.4};
  double explore_tau_jitter{0.03};   // s
  double explore_rot_jitter{0.08};   // fraction of alpha_max
  // Kinematics-guided exploration: fraction of the remaining exploration
  // episodes whose trigger tau is drawn from the pad-first feasible band
  // precomputed for the episode's closing speed.
  double explore_guided_prob{0.5};
  // Replay rewards are multiplied by this scale inside the trainer; Q-value
  // slopes then dominate the squashed-actor gradients instead of drowning in
  // the entropy term. Logged episode rewards stay unscaled.
  double reward_scale{5.0};
  // Checkpoint selection: every eval_every episodes the current policy runs
  // a fixed probe grid; the checkpoint with the best four-leg probe score is
  // kept as "best".
  int eval_every{100};
  int eval_trials{3};
};

inline void validate(const SacConfig& c) {
  if (!(c.discount > 0.0 && c.discount <= 1.0))
    throw std::invalid_argument("sac: discount must lie in (0,1]");
  if (!(c.lr_actor >= 0.0 && c.lr_critic >= 0.0 && c.lr_temperature >= 0.0))
    throw std::invalid_argument("sac: learning rates must be >= 0");
  if (c.batch_size < 1) throw std::invalid_argument("sac: batch_size must be >= 1");
  if (!(c.soft_update_tau > 0.0 && c.soft_update_tau <= 1.0))
    throw std::invalid_argument("sac: soft_update_tau must lie in (0,1]");
}

// ---------------------------------------------------------------------------
// Losses (free functions so gradients can be checked in isolation)

inline double critic_loss(const MlpParams& critic,
                          const std::vector<Transition>& batch,
                          const std::vector<double>& targets) {
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double q = critic_forward(critic, batch[i].obs, batch[i].action);
    const double e = q - targets[i];
    loss += e * e;
  }
  return loss / static_cast<double>(batch.size());
}

inline MlpGrads critic_loss_grads(const MlpParams& critic,
                                  const std::vector<Transition>& batch,
                                  const std::vector<double>& targets,
                                  double* loss_out = nullptr) {
  MlpGrads grads = zero_grads(critic);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ForwardCache cache;
    const double q =
        critic_forward(critic, batch[i].obs, batch[i].action, &cache);
    const double e = q - targets[i];
    loss += e * e;
    grads.accumulate(mlp_backward(critic, cache, {2.0 * e * inv_n}));
  }
  if (loss_out) *loss_out = loss * inv_n;
  return grads;
}

// Reparameterized actor objective: mean over the batch of
// alpha * log pi(a|s) - min(Q1, Q2)(s, a), with a = tanh(mu + sigma * eps)
// for the provided fixed noise draws.
inline double actor_loss(const MlpParams& actor, const MlpParams& critic1,
                         const MlpParams& critic2, double alpha,
                         const std::vector<ObsVector>& obs,
                         const std::vector<ActionVector>& noise,
                         double* mean_log_pi = nullptr) {
  double loss = 0.0;
  double log_pi_sum = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const ActorOutput out = actor_forward(actor, obs[i]);
    ActionVector pre{};
    ActionVector a{};
    for (int k = 0; k < kActionDim; ++k) {
      pre[k] = out.mean[k] + std::exp(out.log_std[k]) * noise[i][k];
      a[k] = std::tanh(pre[k]);
    }
    const double lp = squashed_log_prob(out, pre, a);
    const double q = std::min(critic_forward(critic1, obs[i], a),
                              critic_forward(critic2, obs[i], a));
    loss += alpha * lp - q;
    log_pi_sum += lp;
  }
  const double inv_n = 1.0 / static_cast<double>(obs.size());
  if (mean_log_pi) *mean_log_pi = log_pi_sum * inv_n;
  return loss * inv_n;
}

inline MlpGrads actor_loss_grads(const MlpParams& actor,
                                 const MlpParams& critic1,
                                 const MlpParams& critic2, double alpha,
                                 const std::vector<ObsVector>& obs,
                                 const std::vector<ActionVector>& noise,
                                 double* loss_out = nullptr,
                                 double* mean_log_pi = nullptr) {
  MlpGrads grads = zero_grads(actor);
  const double inv_n = 1.0 / static_cast<double>(obs.size());
  double loss = 0.0;
  double log_pi_sum = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    ForwardCache cache;
    std::vector<double> in(obs[i].begin(), obs[i].end());
    const std::vector<double> head = mlp_forward(actor, in, &cache);
    ActionVector mean{};
    ActionVector log_std{};
    ActionVector pre{};
    ActionVector a{};
    for (int k = 0; k < kActionDim; ++k) {
      mean[k] = head[k];
      log_std[k] = std::clamp(head[kActionDim + k], kLogStdMin, kLogStdMax);
      pre[k] = mean[k] + std::exp(log_std[k]) * noise[i][k];
      a[k] = std::tanh(pre[k]);
    }
    const ActorOutput out{mean, log_std};
    const double lp = squashed_log_prob(out, pre, a);
    log_pi_sum += lp;

    ForwardCache cache1;
    ForwardCache cache2;
    const double q1 = critic_forward(critic1, obs[i], a, &cache1);
    const double q2 = critic_forward(critic2, obs[i], a, &cache2);
    loss += alpha * lp - std::min(q1, q2);

    // dQmin/da through the selected critic's input gradient.
    const bool use_first = q1 <= q2;
    const MlpGrads qg = mlp_backward(use_first ? critic1 : critic2,
                                     use_first ? cache1 : cache2, {1.0});
    std::vector<double> head_grad(2 * kActionDim, 0.0);
    for (int k = 0; k < kActionDim; ++k) {
      const double dq_da = qg.input_grad[kObsDim + k];
      const double dl_da =
          alpha * 2.0 * a[k] / (1.0 - a[k] * a[k] + kSquashEps) - dq_da;
      const double tanh_d = 1.0 - a[k] * a[k];
      head_grad[k] = dl_da * tanh_d;
      double g_s = -alpha + dl_da * tanh_d * std::exp(log_std[k]) * noise[i][k];
      // Clamp subgradient: no flow outside the active range.
      if (head[kActionDim + k] <= kLogStdMin || head[kActionDim + k] >= kLogStdMax)
        g_s = 0.0;
      head_grad[kActionDim + k] = g_s;
    }
    for (double& v : head_grad) v *= inv_n;
    grads.accumulate(mlp_backward(actor, cache, head_grad));
  }
  if (loss_out) *loss_out = loss * inv_n;
  if (mean_log_pi) *mean_log_pi = log_pi_sum * inv_n;
  return grads;
}

// Temperature objective on log-alpha: J = -exp(log_alpha) * (mean log pi +
// target entropy). Its gradient flips sign as the policy entropy crosses the
// target.
inline double temperature_loss(double log_alpha, double mean_log_pi,
                               double target_entropy) {
  return -std::exp(log_alpha) * (mean_log_pi + target_entropy);
}

inline double temperature_grad(double log_alpha, double mean_log_pi,
                               double target_entropy) {
  return -std::exp(log_alpha) * (mean_log_pi + target_entropy);
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<LayerParams> m;
  std::vector<LayerParams> v;
  long step{0};

  explicit AdamState(const MlpParams& p) {
    m = p.layers;
    v = p.layers;
    for (auto* s : {&m, &v})
      for (auto& l : *s) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
      }
  }
};

inline void adam_step(MlpParams* params, const MlpGrads& grads,
                      AdamState* state, double lr, double beta1 = 0.9,
                      double beta2 = 0.999, double eps = 1e-8) {
  state->step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state->step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state->step));
  for (std::size_t li = 0; li < params->layers.size(); ++li) {
    auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                      std::vector<double>& m, std::vector<double>& v) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
      }
    };
    update(params->layers[li].w, grads.layers[li].w, state->m[li].w,
           state->v[li].w);
    update(params->layers[li].b, grads.layers[li].b, state->m[li].b,
           state->v[li].b);
  }
}

// ---------------------------------------------------------------------------
// Trainer

struct SacLosses {
  double critic1{0.0};
  double critic2{0.0};
  double actor{0.0};
  double temperature{0.0};
  double alpha{0.0};
};

class SacTrainer {
 public:
  SacTrainer(const SacConfig& config, const ObsNorm& norm, std::uint64_t seed)
      : config_(config),
        norm_(norm),
        buffer_(config.buffer_capacity),
        rng_(mix_seed(seed, 0xACCE55)),
        actor_([&] {
          Rng init(mix_seed(seed, 1));
          return make_mlp(kObsDim, 2 * kActionDim, init);
        }()),
        critic1_([&] {
          Rng init(mix_seed(seed, 2));
          return make_mlp(kObsDim + kActionDim, 1, init);
        }()),
        critic2_([&] {
          Rng init(mix_seed(seed, 3));
          return make_mlp(kObsDim + kActionDim, 1, init);
        }()),
        target1_(critic1_),
        target2_(critic2_),
        adam_actor_(actor_),
        adam_critic1_(critic1_),
        adam_critic2_(critic2_) {
    validate(config);
  }

  void add_transition(const Transition& t) { buffer_.add(t); }

  const MlpParams& actor() const { return actor_; }
  const MlpParams& critic1() const { return critic1_; }
  const MlpParams& critic2() const { return critic2_; }
  const MlpParams& target1() const { return target1_; }
  const MlpParams& target2() const { return target2_; }
  double alpha() const { return std::exp(log_alpha_); }
  double log_alpha() const { return log_alpha_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const ObsNorm& norm() const { return norm_; }

  // Entropy-regularized bootstrap target; zero bootstrap on terminal
  // transitions (the dominant case for single-decision episodes).
  double bootstrap_target(const Transition& t) {
    if (t.terminal) return t.reward;
    const ActorOutput out = actor_forward(actor_, t.next_obs);
    ActionVector pre{};
    ActionVector a{};
    for (int k = 0; k < kActionDim; ++k) {
      pre[k] = out.mean[k] + std::exp(out.log_std[k]) * rng_.normal();
      a[k] = std::tanh(pre[k]);
    }
    const double lp = squashed_log_prob(out, pre, a);
    const double q = std::min(critic_forward(target1_, t.next_obs, a),
                              critic_forward(target2_, t.next_obs, a));
    return t.reward + config_.discount * (q - alpha() * lp);
  }

  SacLosses update_step() {
    if (buffer_.size() == 0) throw std::runtime_error("sac: empty buffer");
    std::vector<Transition> batch;
    batch.reserve(config_.batch_size);
    for (int i = 0; i < config_.batch_size; ++i)
      batch.push_back(buffer_.sample(rng_));

    std::vector<double> targets(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
      targets[i] = bootstrap_target(batch[i]);

    SacLosses losses;
    const MlpGrads g1 = critic_loss_grads(critic1_, batch, targets, &losses.critic1);
    const MlpGrads g2 = critic_loss_grads(critic2_, batch, targets, &losses.critic2);
    adam_step(&critic1_, g1, &adam_critic1_, config_.lr_critic);
    adam_step(&critic2_, g2, &adam_critic2_, config_.lr_critic);

    std::vector<ObsVector> obs(batch.size());
    std::vector<ActionVector> noise(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      obs[i] = batch[i].obs;
      for (int k = 0; k < kActionDim; ++k) noise[i][k] = rng_.normal();
    }
    double mean_log_pi = 0.0;
    const MlpGrads ga = actor_loss_grads(actor_, critic1_, critic2_, alpha(),
                                         obs, noise, &losses.actor,
                                         &mean_log_pi);
    adam_step(&actor_, ga, &adam_actor_, config_.lr_actor);

    losses.temperature =
        temperature_loss(log_alpha_, mean_log_pi, config_.target_entropy);
    const double tg =
        temperature_grad(log_alpha_, mean_log_pi, config_.target_entropy);
    alpha_m_ = 0.9 * alpha_m_ + 0.1 * tg;
    alpha_v_ = 0.999 * alpha_v_ + 0.001 * tg * tg;
    alpha_t_ += 1;
    const double mc = alpha_m_ / (1.0 - std::pow(0.9, alpha_t_));
    const double vc = alpha_v_ / (1.0 - std::pow(0.999, alpha_t_));
    log_alpha_ -= config_.lr_temperature * mc / (std::sqrt(vc) + 1e-8);
    losses.alpha = alpha();

    soft_update(&target1_, critic1_, config_.soft_update_tau);
    soft_update(&target2_, critic2_, config_.soft_update_tau);

    if (!std::isfinite(losses.critic1) || !std::isfinite(losses.critic2) ||
        !std::isfinite(losses.actor) || !std::isfinite(log_alpha_)) {
      std::ostringstream oss;
      oss << "sac: NaN loss (critic1=" << losses.critic1
          << " critic2=" << losses.critic2 << " actor=" << losses.actor
          << " log_alpha=" << log_alpha_ << " buffer=" << buffer_.size() << ")";
      throw std::runtime_error(oss.str());
    }
    return losses;
  }

  static void soft_update(MlpParams* target, const MlpParams& online,
                          double tau) {
    for (std::size_t li = 0; li < target->layers.size(); ++li) {
      auto& tl = target->layers[li];
      const auto& ol = online.layers[li];
      for (std::size_t i = 0; i < tl.w.size(); ++i)
        tl.w[i] = (1.0 - tau) * tl.w[i] + tau * ol.w[i];
      for (std::size_t i = 0; i < tl.b.size(); ++i)
        tl.b[i] = (1.0 - tau) * tl.b[i] + tau * ol.b[i];
    }
  }

  Checkpoint make_checkpoint(const std::string& metadata_json) const {
    Checkpoint ck;
    ck.actor = actor_;
    ck.critic1 = critic1_;
    ck.critic2 = critic2_;
    ck.target1 = target1_;
    ck.target2 = target2_;
    ck.log_alpha = log_alpha_;
    ck.norm = norm_;
    ck.metadata_json = metadata_json;
    return ck;
  }

 private:
  SacConfig config_;
  ObsNorm norm_;
  ReplayBuffer buffer_;
  Rng rng_;
  MlpParams actor_;
  MlpParams critic1_;
  MlpParams critic2_;
  MlpParams target1_;
  MlpParams target2_;
  AdamState adam_actor_;
  AdamState adam_critic1_;
  AdamState adam_critic2_;
  double log_alpha_{-1.6094379124341003};  // alpha = 0.2
  double alpha_m_{0.0};
  double alpha_v_{0.0};
  long alpha_t_{0};
};

// ---------------------------------------------------------------------------
// Training loops

struct LearningCurveRow {
  int episode{0};
  double reward{0.0};
  int n_legs{0};
  bool triggered{false};
  double plane_angle{0.0};   // rad
  double speed{0.0};         // m/s
  double flight_angle{0.0};  // rad
};

// Plateau: the window-moving-average improved by less than rel_threshold
// (relative) over the trailing span. Returns -1 when no plateau found.
inline int detect_plateau(const std::vector<double>& rewards, int window = 100,
                          int span = 200, double rel_threshold = 0.01) {
  if (static_cast<int>(rewards.size()) < window + span) return -1;
  std::vector<double> ma(rewards.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    acc += rewards[i];
    if (i >= static_cast<std::size_t>(window)) acc -= rewards[i - window];
    ma[i] = acc / std::min<double>(static_cast<double>(i + 1), window);
  }
  for (std::size_t e = window + span; e < rewards.size(); ++e) {
    const double before = ma[e - span];
    const double now = ma[e];
    if (now - before < rel_threshold * std::abs(before))
      return static_cast<int>(e);
  }
  return -1;
}

struct TrainResult {
  Checkpoint final_checkpoint;
  Checkpoint best_checkpoint;
  std::vector<LearningCurveRow> curve;
  int plateau_episode{-1};
};

// Full perching training loop: sample an approach condition and surface,
// roll out one episode, store its single terminal transition, then run the
// configured number of gradient updates.
// Landing that worked, remembered for curriculum exploration.
struct SuccessMemory {
  double theta_plane{0.0};
  double v_perp{0.0};
  double v_par{0.0};
  double tau_star{0.0};
  double rot_frac{0.0};
};

// Pad-first feasible trigger-tau band for one plane angle and closing speed,
// derived from the max-effort kinematics.
struct GuidedBand {
  double theta_plane{0.0};
  double v_perp{0.0};
  double tau_lo{0.0};
  double tau_hi{0.0};
  bool feasible{false};
};

inline std::vector<GuidedBand> compute_guided_bands(
    const RobotGeometry& geom, const std::vector<double>& plane_angles,
    double v_max = 6.0, double v_step = 0.25) {
  const double l_eff = norm(geom.pad_tip_body());
  std::vector<GuidedBand> bands;
  for (double theta : plane_angles) {
    SurfaceSpec surface;
    surface.theta_plane = theta;
    surface.anchor_point = {0.0, 0.0};
    for (double v = v_step; v <= v_max + 0.5 * v_step; v += v_step) {
      GuidedBand band;
      band.theta_plane = theta;
      band.v_perp = v;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (double d = l_eff; d <= 1.2; d += 0.02) {
        if (pad_first_feasible(geom, surface, geom.alpha_max, v, d, 1e-3,
                               1.5)) {
          const double tau = (d - l_eff) / v;
          lo = std::min(lo, tau);
          hi = std::max(hi, tau);
        }
      }
      if (hi >= lo) {
        band.feasible = true;
        band.tau_lo = lo;
        band.tau_hi = hi;
      }
      bands.push_back(band);
    }
  }
  return bands;
}

inline TrainResult train(const RobotGeometry& geom,
                         const TrainingDistribution& dist,
                         const SacConfig& config, const EnvParams& env_params,
                         std::uint64_t seed,
                         const std::string& metadata_json = "{}") {
  validate(geom);
  validate(config);
  SacTrainer trainer(config, ObsNorm{}, seed);
  Rng sample_rng(mix_seed(seed, 0x5A11));
  std::vector<SuccessMemory> successes;
  const std::vector<GuidedBand> bands =
      compute_guided_bands(geom, dist.plane_angles);

  TrainResult result;
  result.curve.reserve(config.total_episodes);
  double best_probe = -std::numeric_limits<double>::infinity();
  double running_sum = 0.0;
  std::vector<double> policy_rewards;      // exploration episodes excluded
  std::vector<int> policy_episode_index;
  policy_rewards.reserve(config.total_episodes);

  // Fixed probe grid over the training surfaces; the best-scoring policy
  // snapshot becomes the "best" checkpoint.
  auto probe_score = [&]() {
    ActionSource psrc;
    psrc.norm = trainer.norm();
    psrc.actor = &trainer.actor();
    double score = 0.0;
    int cell = 0;
    int episodes = 0;
    for (double theta : dist.plane_angles) {
      SurfaceSpec surface;
      surface.theta_plane = theta;
      surface.anchor_point = {0.0, 0.0};
      surface.contact_epsilon = dist.contact_epsilon;
      surface.attach_range = dist.attach_range;
      for (double speed : {2.5, 3.25, 4.0, 4.75}) {
        const double q = std::min(env_params.min_perp_speed / speed, 0.9);
        const double lo = std::max(std::asin(q) - theta, -kPi / 2.0 + 1e-3);
        const double hi =
            std::min(kPi - std::asin(q) - theta, kPi / 2.0 - 1e-3);
        for (double f : {0.30, 0.55, 0.80, 0.97}) {
          const ApproachCondition cond{speed, lo + f * (hi - lo)};
          for (int t = 0; t < config.eval_trials; ++t) {
            const EpisodeResult r =
                run_episode(psrc, cond, surface, geom,
                            mix_seed(seed, 0xE7A1, cell, t), env_params);
            score += r.n_legs == 4 ? 1.0 : r.n_legs == 2 ? 0.25 : 0.0;
            ++episodes;
          }
          ++cell;
        }
      }
    }
    return episodes > 0 ? score / episodes : 0.0;
  };

  for (int ep = 0; ep < config.total_episodes; ++ep) {
    const auto [cond, surface] =
        sample_training_episode(sample_rng, dist, env_params);
    const double progress =
        config.total_episodes > 1
            ? static_cast<double>(ep) / (config.total_episodes - 1)
            : 1.0;
    const double explore_prob =
        config.explore_prob_start +
        (config.explore_prob_end - config.explore_prob_start) * progress;
    ActionSource src;
    src.norm = trainer.norm();
    const bool exploring = ep < config.warmup_episodes ||
                           sample_rng.uniform() < explore_prob;
    if (exploring) {
      const Vec2 vel{cond.speed * std::cos(cond.flight_angle),
                     cond.speed * std::sin(cond.flight_angle)};
      const double vp = -dot(vel, surface.normal());
      const double vt = dot(vel, surface.tangent());
      const SuccessMemory* nn = nullptr;
      const bool replay = !successes.empty() &&
                          sample_rng.uniform() < config.explore_replay_prob;
      if (replay) {
        double best = std::numeric_limits<double>::infinity();
        for (const SuccessMemory& m : successes) {
          const double da = m.theta_plane - surface.theta_plane;
          const double dp = m.v_perp - vp;
          const double dt2 = m.v_par - vt;
          const double dist2 = 4.0 * da * da + dp * dp + 0.25 * dt2 * dt2;
          if (dist2 < best) {
            best = dist2;
            nn = &m;
          }
        }
      }
      if (nn) {
        src.tau_star =
            std::clamp(nn->tau_star +
                           config.explore_tau_jitter * sample_rng.normal(),
                       1e-3, config.explore_tau_max);
        const double rot = std::clamp(
            nn->rot_frac + config.explore_rot_jitter * sample_rng.normal(),
            0.05, 0.999);
        src.rot_lo = rot;
        src.rot_hi = rot + 1e-6;
      } else {
        const GuidedBand* band = nullptr;
        if (sample_rng.uniform() < config.explore_guided_prob) {
          double best = std::numeric_limits<double>::infinity();
          for (const GuidedBand& b : bands) {
            if (!b.feasible) continue;
            const double da = b.theta_plane - surface.theta_plane;
            const double dv = b.v_perp - vp;
            const double dist2 = 16.0 * da * da + dv * dv;
            if (dist2 < best) {
              best = dist2;
              band = &b;
            }
          }
        }
        if (band) {
          src.tau_star = std::clamp(
              sample_rng.uniform(band->tau_lo - 0.02, band->tau_hi + 0.02),
              1e-3, config.explore_tau_max);
          // The band is a max-effort construct; weak rotations miss it.
          src.rot_lo = std::max(config.explore_rot_lo, 0.7);
          src.rot_hi = config.explore_rot_hi;
        } else {
          src.tau_star = sample_rng.uniform(1e-3, config.explore_tau_max);
          src.rot_lo = config.explore_rot_lo;
          src.rot_hi = config.explore_rot_hi;
        }
      }
    } else {
      src.actor = &trainer.actor();
    }
    const EpisodeResult er = run_episode(src, cond, surface, geom,
                                         mix_seed(seed, 0xE9, ep), env_params);
    for (Transition t : er.transitions) {
      t.reward *= config.reward_scale;
      trainer.add_transition(t);
    }
    // Any capture is curriculum-worthy: marginal two-leg hangs mark feasible
    // trigger timings near the velocity threshold.
    if (er.n_legs >= 2 && er.triggered && successes.size() < 4000) {
      const Vec2 vel{cond.speed * std::cos(cond.flight_angle),
                     cond.speed * std::sin(cond.flight_angle)};
      SuccessMemory m;
      m.theta_plane = surface.theta_plane;
      m.v_perp = -dot(vel, surface.normal());
      m.v_par = dot(vel, surface.tangent());
      m.tau_star = std::clamp(er.tau_trg, 1e-3, config.explore_tau_max);
      m.rot_frac = std::clamp(std::abs(er.a_rot_used) / geom.alpha_max, 0.05,
                              0.999);
      successes.push_back(m);
    }

    if (ep >= config.updates_start_episode &&
        trainer.buffer().size() >= static_cast<std::size_t>(config.batch_size))
      for (int u = 0; u < config.updates_per_episode; ++u)
        trainer.update_step();

    running_sum += er.reward_scalar;
    if (!std::isfinite(running_sum))
      throw std::runtime_error("train: running reward diverged");
    result.curve.push_back({ep, er.reward_scalar, er.n_legs, er.triggered,
                            surface.theta_plane, cond.speed,
                            cond.flight_angle});

    // Convergence tracking follows the policy's own episodes; exploration
    // rollouts would only add sampling noise.
    if (!exploring) {
      policy_rewards.push_back(er.reward_scalar);
      policy_episode_index.push_back(ep);
    }

    if (config.eval_every > 0 && (ep + 1) % config.eval_every == 0 &&
        ep >= config.warmup_episodes) {
      const double score = probe_score();
      if (score > best_probe) {
        best_probe = score;
        result.best_checkpoint = trainer.make_checkpoint(metadata_json);
      }
    }
  }
  result.final_checkpoint = trainer.make_checkpoint(metadata_json);
  if (result.best_checkpoint.actor.layers.empty())
    result.best_checkpoint = result.final_checkpoint;
  const int plateau_policy_idx = detect_plateau(policy_rewards);
  result.plateau_episode =
      plateau_policy_idx >= 0 ? policy_episode_index[plateau_policy_idx] : -1;
  return result;
}

// Synthetic single-cue task: tau counts down from a random start at the
// policy tick rate; triggering inside the (0, 0.3) s window scores 1, any
// other outcome scores 0. Discounting makes the earliest in-window trigger
// the known optimum.
struct SyntheticResult {
  std::vector<double> rewards;
  std::vector<char> correct;  // triggered with 0 <= tau_trg < 0.3
  double final_accuracy{0.0};  // trained policy over fresh episodes
};

inline SyntheticResult train_synthetic(const SacConfig& config,
                                       std::uint64_t seed,
                                       double correct_below = 0.3,
                                       int eval_episodes = 200) {
  validate(config);
  SacTrainer trainer(config, ObsNorm{}, seed);
  Rng rng(mix_seed(seed, 0x70F));
  SyntheticResult result;
  ActionSource warmup;
  warmup.uniform_random = true;

  // One countdown episode; training episodes feed the buffer, evaluation
  // episodes only score the current policy.
  auto play = [&](bool training, int ep) {
    const double tau0 = rng.uniform(0.5, 2.0);
    constexpr double kTick = 0.01;
    bool triggered = false;
    double tau_trg = 0.0;
    ObsVector prev_obs{};
    ActionVector prev_action{};
    bool have_prev = false;
    for (double tau = tau0; tau > 0.0; tau -= kTick) {
      const Observation obs{tau, 0.0, 2.0 * tau, 0.0};
      const ObsVector v = trainer.norm().normalize(obs.tau, obs.theta_x,
                                                   obs.d_perp, obs.theta_plane);
      if (training && have_prev)
        trainer.add_transition({prev_obs, prev_action, 0.0, v, false});
      ActionSample act;
      if (training && ep < config.warmup_episodes) {
        act = draw_action(warmup, obs, 1.0, rng);
      } else {
        act = sample_action(trainer.actor(), v, 1.0, rng);
      }
      prev_obs = v;
      prev_action = act.squashed;
      have_prev = true;
      if (act.a_trg > 0.0) {
        triggered = true;
        tau_trg = tau;
        break;
      }
    }
    const double reward =
        triggered && tau_trg >= 0.0 && tau_trg < correct_below ? 1.0 : 0.0;
    if (training && have_prev)
      trainer.add_transition({prev_obs, prev_action, reward, prev_obs, true});
    result.rewards.push_back(reward);
    result.correct.push_back(reward > 0.0);
  };

  for (int ep = 0; ep < config.total_episodes; ++ep) {
    play(true, ep);
    if (ep >= config.updates_start_episode &&
        trainer.buffer().size() >= static_cast<std::size_t>(config.batch_size))
      for (int u = 0; u < config.updates_per_episode; ++u)
        trainer.update_step();
  }

  int good = 0;
  for (int i = 0; i < eval_episodes; ++i) play(false, 0);
  for (int i = 0; i < eval_episodes; ++i)
    good += result.correct[result.correct.size() - 1 - i];
  result.final_accuracy =
      eval_episodes > 0 ? static_cast<double>(good) / eval_episodes : 0.0;
  return result;
}

}  // namespace perchlab

#endif  // PERCHLAB_SAC_HPP_
