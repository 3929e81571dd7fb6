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

#ifndef PERCHLAB_POLICY_HPP_
#define PERCHLAB_POLICY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "perchlab/rng.hpp"
#include "perchlab/vec2.hpp"

namespace perchlab {

// Network sizes: observation 4, action 2, three hidden layers of 10 nodes.
inline constexpr int kObsDim = 4;
inline constexpr int kActionDim = 2;
inline constexpr int kHiddenWidth = 10;
inline constexpr int kHiddenLayers = 3;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

using ObsVector = std::array<double, kObsDim>;
using ActionVector = std::array<double, kActionDim>;  // squashed, in [-1,1]

// Observation scaling constants; stored in checkpoints so a deployed policy
// always normalizes the way it was trained.
struct ObsNorm {
  double tau_scale{1.0};        // s
  double theta_x_scale{10.0};   // 1/s
  double d_perp_scale{2.0};     // m
  double theta_plane_scale{kPi};  // rad

  ObsVector normalize(double tau, double theta_x, double d_perp,
                      double theta_plane) const {
    return {tau / tau_scale, theta_x / theta_x_scale, d_perp / d_perp_scale,
            theta_plane / theta_plane_scale};
  }
};

struct LayerParams {
  int in{0};
  int out{0};
  std::vector<double> w;  // row-major [out][in]
  std::vector<double> b;  // [out]
};

// Fully connected tanh network, linear output head.
struct MlpParams {
  std::vector<LayerParams> layers;

  int input_dim() const { return layers.front().in; }
  int output_dim() const { return layers.back().out; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }
};

// Hidden layers use fan-in uniform init; the output head starts at zero so
// fresh critics value everything at 0 (no phantom optimism to unlearn) and a
// fresh actor is the unbiased unit Gaussian.
inline MlpParams make_mlp(int input, int output, Rng& rng) {
  MlpParams p;
  std::vector<int> dims{input};
  for (int i = 0; i < kHiddenLayers; ++i) dims.push_back(kHiddenWidth);
  dims.push_back(output);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    LayerParams l;
    l.in = dims[i];
    l.out = dims[i + 1];
    l.w.resize(static_cast<std::size_t>(l.in) * l.out);
    l.b.assign(l.out, 0.0);
    const bool head = i + 2 == dims.size();
    const double bound = head ? 0.0 : 1.0 / std::sqrt(static_cast<double>(l.in));
    for (double& v : l.w) v = bound == 0.0 ? 0.0 : rng.uniform(-bound, bound);
    p.layers.push_back(std::move(l));
  }
  return p;
}

// Cached activations from a forward pass; act[0] is the input.
struct ForwardCache {
  std::vector<std::vector<double>> act;
};

inline std::vector<double> mlp_forward(const MlpParams& p,
                                       const std::vector<double>& input,
                                       ForwardCache* cache = nullptr) {
  if (static_cast<int>(input.size()) != p.input_dim())
    throw std::invalid_argument("mlp_forward: input shape mismatch");
  std::vector<double> x = input;
  if (cache) {
    cache->act.clear();
    cache->act.push_back(x);
  }
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const LayerParams& l = p.layers[li];
    std::vector<double> y(l.out);
    for (int o = 0; o < l.out; ++o) {
      double acc = l.b[o];
      const double* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
      for (int i = 0; i < l.in; ++i) acc += wrow[i] * x[i];
      y[o] = acc;
    }
    if (li + 1 < p.layers.size())
      for (double& v : y) v = std::tanh(v);
    x = std::move(y);
    if (cache) cache->act.push_back(x);
  }
  return x;
}

struct MlpGrads {
  std::vector<LayerParams> layers;   // same shapes as the network
  std::vector<double> input_grad;    // dLoss/dInput

  void scale(double s) {
    for (auto& l : layers) {
      for (double& v : l.w) v *= s;
      for (double& v : l.b) v *= s;
    }
  }
  void accumulate(const MlpGrads& other) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (std::size_t j = 0; j < layers[i].w.size(); ++j)
        layers[i].w[j] += other.layers[i].w[j];
      for (std::size_t j = 0; j < layers[i].b.size(); ++j)
        layers[i].b[j] += other.layers[i].b[j];
    }
  }
};

inline MlpGrads zero_grads(const MlpParams& p) {
  MlpGrads g;
  g.layers = p.layers;
  for (auto& l : g.layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
  return g;
}

// Exact reverse-mode gradients for the cached forward pass. The returned
// input_grad carries dLoss/dInput, which the actor update needs to pull
// critic gradients back through the action.
inline MlpGrads mlp_backward(const MlpParams& p, const ForwardCache& cache,
                             const std::vector<double>& output_grad) {
  if (cache.act.size() != p.layers.size() + 1)
    throw std::invalid_argument("mlp_backward: missing forward cache");
  MlpGrads g = zero_grads(p);
  std::vector<double> delta = output_grad;
  for (int li = static_cast<int>(p.layers.size()) - 1; li >= 0; --li) {
    const LayerParams& l = p.layers[li];
    const std::vector<double>& x = cache.act[li];
    // Output head is linear; hidden activations are tanh of the stored value.
    if (li + 1 < static_cast<int>(p.layers.size())) {
      const std::vector<double>& a = cache.act[li + 1];
      for (int o = 0; o < l.out; ++o) delta[o] *= 1.0 - a[o] * a[o];
    }
    LayerParams& gl = g.layers[li];
    std::vector<double> prev(l.in, 0.0);
    for (int o = 0; o < l.out; ++o) {
      gl.b[o] += delta[o];
      double* gw = &gl.w[static_cast<std::size_t>(o) * l.in];
      const double* w = &l.w[static_cast<std::size_t>(o) * l.in];
      for (int i = 0; i < l.in; ++i) {
        gw[i] += delta[o] * x[i];
        prev[i] += delta[o] * w[i];
      }
    }
    delta = std::move(prev);
  }
  g.input_grad = delta;
  return g;
}

// Actor head split: first kActionDim outputs are means, the rest log-stds.
struct ActorOutput {
  ActionVector mean;
  ActionVector log_std;  // clamped to [kLogStdMin, kLogStdMax]
};

inline ActorOutput actor_forward(const MlpParams& actor, const ObsVector& obs,
                                 ForwardCache* cache = nullptr) {
  std::vector<double> in(obs.begin(), obs.end());
  const std::vector<double> out = mlp_forward(actor, in, cache);
  if (out.size() != 2 * kActionDim)
    throw std::invalid_argument("actor_forward: head shape mismatch");
  ActorOutput o;
  for (int i = 0; i < kActionDim; ++i) {
    o.mean[i] = out[i];
    o.log_std[i] = std::clamp(out[kActionDim + i], kLogStdMin, kLogStdMax);
  }
  return o;
}

inline double critic_forward(const MlpParams& critic, const ObsVector& obs,
                             const ActionVector& action,
                             ForwardCache* cache = nullptr) {
  std::vector<double> in(obs.begin(), obs.end());
  in.insert(in.end(), action.begin(), action.end());
  const std::vector<double> out = mlp_forward(critic, in, cache);
  return out[0];
}

struct ActionSample {
  double a_trg{0.0};    // dimensionless in [-1, 1]; > 0 triggers
  double a_rot{0.0};    // rad/s^2 in [-alpha_max, alpha_max]
  double log_prob{0.0};  // density of the squashed pair over [-1,1]^2
  ActionVector squashed;  // canonical action stored in replay
};

inline constexpr double kSquashEps = 1e-6;

// Log-density of a squashed Gaussian sample: per-component Normal log-pdf of
// the pre-squash value plus the tanh Jacobian correction.
inline double squashed_log_prob(const ActorOutput& out,
                                const ActionVector& pre_squash,
                                const ActionVector& squashed) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;
  double lp = 0.0;
  for (int i = 0; i < kActionDim; ++i) {
    const double std = std::exp(out.log_std[i]);
    const double z = (pre_squash[i] - out.mean[i]) / std;
    lp += -0.5 * z * z - out.log_std[i] - kHalfLog2Pi;
    lp -= std::log(1.0 - squashed[i] * squashed[i] + kSquashEps);
  }
  return lp;
}

// Reparameterized sample from the actor: Gaussian draw, tanh squash, affine
// scale of the rotation command to the actuation limit.
inline ActionSample sample_action(const MlpParams& actor, const ObsVector& obs,
                                  double alpha_max, Rng& rng) {
  const ActorOutput out = actor_forward(actor, obs);
  ActionVector pre{};
  ActionVector sq{};
  for (int i = 0; i < kActionDim; ++i) {
    pre[i] = out.mean[i] + std::exp(out.log_std[i]) * rng.normal();
    sq[i] = std::tanh(pre[i]);
  }
  ActionSample s;
  s.squashed = sq;
  s.a_trg = sq[0];
  s.a_rot = sq[1] * alpha_max;
  s.log_prob = squashed_log_prob(out, pre, sq);
  return s;
}

// ---------------------------------------------------------------------------
// Checkpoint container: actor, twin critics with targets, temperature, and
// normalization constants, with a free-form metadata string (JSON) carrying
// geometry and config digests.

struct Checkpoint {
  std::uint32_t version{1};
  MlpParams actor;
  MlpParams critic1;
  MlpParams critic2;
  MlpParams target1;
  MlpParams target2;
  double log_alpha{0.0};
  ObsNorm norm;
  std::string metadata_json;
};

namespace detail {

inline constexpr char kCheckpointMagic[4] = {'P', 'L', 'C', 'P'};

inline void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}
inline double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

inline void write_mlp(std::ostream& os, const MlpParams& p) {
  write_u32(os, static_cast<std::uint32_t>(p.layers.size()));
  for (const auto& l : p.layers) {
    write_u32(os, static_cast<std::uint32_t>(l.in));
    write_u32(os, static_cast<std::uint32_t>(l.out));
    for (double v : l.w) write_f64(os, v);
    for (double v : l.b) write_f64(os, v);
  }
}

inline MlpParams read_mlp(std::istream& is) {
  MlpParams p;
  const std::uint32_t n = read_u32(is);
  if (n == 0 || n > 64) throw std::runtime_error("checkpoint: bad layer count");
  for (std::uint32_t i = 0; i < n; ++i) {
    LayerParams l;
    l.in = static_cast<int>(read_u32(is));
    l.out = static_cast<int>(read_u32(is));
    if (l.in <= 0 || l.out <= 0 || l.in > 4096 || l.out > 4096)
      throw std::runtime_error("checkpoint: bad layer shape");
    l.w.resize(static_cast<std::size_t>(l.in) * l.out);
    l.b.resize(l.out);
    for (double& v : l.w) v = read_f64(is);
    for (double& v : l.b) v = read_f64(is);
    p.layers.push_back(std::move(l));
  }
  return p;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  os.write(detail::kCheckpointMagic, 4);
  detail::write_u32(os, ck.version);
  detail::write_u32(os, static_cast<std::uint32_t>(ck.metadata_json.size()));
  os.write(ck.metadata_json.data(),
           static_cast<std::streamsize>(ck.metadata_json.size()));
  detail::write_f64(os, ck.log_alpha);
  detail::write_f64(os, ck.norm.tau_scale);
  detail::write_f64(os, ck.norm.theta_x_scale);
  detail::write_f64(os, ck.norm.d_perp_scale);
  detail::write_f64(os, ck.norm.theta_plane_scale);
  detail::write_mlp(os, ck.actor);
  detail::write_mlp(os, ck.critic1);
  detail::write_mlp(os, ck.critic2);
  detail::write_mlp(os, ck.target1);
  detail::write_mlp(os, ck.target2);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, detail::kCheckpointMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  Checkpoint ck;
  ck.version = detail::read_u32(is);
  if (ck.version != 1) throw std::runtime_error("checkpoint: unknown version");
  const std::uint32_t meta_len = detail::read_u32(is);
  if (meta_len > (1u << 24)) throw std::runtime_error("checkpoint: bad metadata");
  ck.metadata_json.resize(meta_len);
  is.read(ck.metadata_json.data(), meta_len);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  ck.log_alpha = detail::read_f64(is);
  ck.norm.tau_scale = detail::read_f64(is);
  ck.norm.theta_x_scale = detail::read_f64(is);
  ck.norm.d_perp_scale = detail::read_f64(is);
  ck.norm.theta_plane_scale = detail::read_f64(is);
  ck.actor = detail::read_mlp(is);
  ck.critic1 = detail::read_mlp(is);
  ck.critic2 = detail::read_mlp(is);
  ck.target1 = detail::read_mlp(is);
  ck.target2 = detail::read_mlp(is);
  if (ck.actor.input_dim() != kObsDim ||
      ck.actor.output_dim() != 2 * kActionDim ||
      ck.critic1.input_dim() != kObsDim + kActionDim)
    throw std::runtime_error("checkpoint: architecture mismatch");
  return ck;
}

// Read-only actor snapshot used by rollout and evaluation workers.
struct PolicyHandle {
  MlpParams actor;
  ObsNorm norm;
};

}  // namespace perchlab

#endif  // PERCHLAB_POLICY_HPP_
