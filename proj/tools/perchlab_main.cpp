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

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "perchlab/analysis.hpp"
#include "perchlab/config.hpp"
#include "perchlab/env.hpp"
#include "perchlab/io.hpp"
#include "perchlab/policy.hpp"
#include "perchlab/sac.hpp"

namespace {

namespace fs = std::filesystem;
using namespace perchlab;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config_path;
  std::string checkpoint_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int workers{0};
};

ExperimentConfig load_and_override(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  return cfg;
}

int worker_count(const CommonArgs& args) {
  if (args.workers > 0) return args.workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string make_run_dir(const ExperimentConfig& cfg, const CommonArgs& args) {
  fs::path dir;
  if (!args.out_dir.empty()) {
    dir = args.out_dir;
  } else {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char ts[32];
    std::strftime(ts, sizeof ts, "%Y%m%d-%H%M%S", std::gmtime(&tt));
    dir = fs::path(cfg.output_dir) /
          (std::string(ts) + "_" + cfg.digest.substr(0, 8));
  }
  fs::create_directories(dir);
  return dir.string();
}

std::string checkpoint_metadata(const ExperimentConfig& cfg) {
  json meta;
  meta["config_digest"] = cfg.digest;
  meta["geometry_digest"] = geometry_digest(cfg.robot);
  meta["seed"] = cfg.seed;
  ObsNorm norm;
  meta["obs_norm"] = {norm.tau_scale, norm.theta_x_scale, norm.d_perp_scale,
                      norm.theta_plane_scale};
  return meta.dump();
}

PolicyHandle load_policy(const std::string& path, const ExperimentConfig& cfg) {
  const Checkpoint ck = load_checkpoint(path);
  if (!ck.metadata_json.empty()) {
    try {
      const json meta = json::parse(ck.metadata_json);
      if (meta.contains("config_digest") &&
          meta["config_digest"].get<std::string>() != cfg.digest)
        std::cerr << "warning: checkpoint config digest "
                  << meta["config_digest"].get<std::string>()
                  << " does not match current config " << cfg.digest << "\n";
    } catch (const json::parse_error&) {
      std::cerr << "warning: checkpoint metadata is not valid JSON\n";
    }
  }
  return PolicyHandle{ck.actor, ck.norm};
}

std::vector<double> angles_rad(const std::vector<double>& deg) {
  std::vector<double> out;
  out.reserve(deg.size());
  for (double a : deg) out.push_back(deg2rad(a));
  return out;
}

std::string theta_tag(double theta_deg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03d", static_cast<int>(theta_deg + 0.5));
  return buf;
}

int cmd_train(const CommonArgs& args) {
  const ExperimentConfig cfg = load_and_override(args);
  const std::string dir = make_run_dir(cfg, args);
  std::cout << "training: " << cfg.sac.total_episodes << " episodes, digest "
            << cfg.digest << ", output " << dir << "\n";
  const TrainResult tr = train(cfg.robot, cfg.training_dist, cfg.sac, cfg.env,
                               cfg.seed, checkpoint_metadata(cfg));
  save_checkpoint(tr.final_checkpoint, dir + "/final.ckpt");
  save_checkpoint(tr.best_checkpoint, dir + "/best.ckpt");
  write_learning_curve_csv(dir + "/learning_curve.csv", tr.curve,
                           {cfg.digest, cfg.seed});
  std::cout << "plateau episode: " << tr.plateau_episode << "\n";
  std::cout << "wrote " << dir << "/final.ckpt, best.ckpt, learning_curve.csv\n";
  return kExitOk;
}

int cmd_map(const CommonArgs& args) {
  const ExperimentConfig cfg = load_and_override(args);
  const std::string dir = make_run_dir(cfg, args);
  const PolicyHandle policy = load_policy(args.checkpoint_path, cfg);
  const std::vector<double> angles = angles_rad(cfg.eval.angles_deg);
  for (double theta_deg : cfg.plane_angles_deg) {
    const SurfaceSpec surface = cfg.surface_for(theta_deg);
    std::vector<EvalRecord> records;
    SuccessMap map = sweep_success_map(
        policy, cfg.robot, surface, cfg.eval.speeds, angles, cfg.eval.trials,
        mix_seed(cfg.seed, std::llround(theta_deg * 100)), cfg.env,
        cfg.eval.criterion, worker_count(args), &records);
    map = smooth_map(map, cfg.eval.smoothing_sigma_cells);
    const std::string tag = theta_tag(theta_deg);
    write_success_map_csv(dir + "/map_" + tag + ".csv", map,
                          {cfg.digest, cfg.seed});
    write_map_sidecar(dir + "/map_" + tag + ".json", map, cfg, theta_deg,
                      cfg.robot);
    write_episode_log_jsonl(dir + "/episodes_" + tag + ".jsonl", surface,
                            records);
    std::cout << "wrote map_" << tag << ".csv (" << map.speeds.size() << "x"
              << map.angles.size() << " cells)\n";
  }
  return kExitOk;
}

int cmd_threshold(const CommonArgs& args) {
  const ExperimentConfig cfg = load_and_override(args);
  const std::string dir = make_run_dir(cfg, args);
  for (double theta_deg : cfg.plane_angles_deg) {
    const SurfaceSpec surface = cfg.surface_for(theta_deg);
    const ThresholdCurve curve =
        threshold_curve(cfg.robot, cfg.sweeps.alpha_max, surface, {},
                        worker_count(args));
    const std::string tag = theta_tag(theta_deg);
    write_threshold_csv(dir + "/threshold_" + tag + ".csv", curve,
                        {cfg.digest, cfg.seed}, geometry_digest(cfg.robot));
    std::cout << "wrote threshold_" << tag << ".csv\n";
  }
  return kExitOk;
}

int cmd_compare(const CommonArgs& args, const std::string& map_a,
                const std::string& map_b) {
  const ExperimentConfig cfg = load_and_override(args);
  const std::string dir = make_run_dir(cfg, args);
  const SuccessMap a = read_success_map_csv(map_a);
  const SuccessMap b = read_success_map_csv(map_b);
  const MapDiff diff = compare_maps(a, b);
  write_diff_csv(dir + "/map_diff.csv", a, diff, {cfg.digest, cfg.seed});
  std::cout << "mean |diff| = " << fmt(diff.mean_abs)
            << ", max |diff| = " << fmt(diff.max_abs) << "\n";
  std::cout << "wrote " << dir << "/map_diff.csv\n";
  return kExitOk;
}

int cmd_hinge_sweep(const CommonArgs& args) {
  const ExperimentConfig cfg = load_and_override(args);
  const std::string dir = make_run_dir(cfg, args);
  const PolicyHandle policy = load_policy(args.checkpoint_path, cfg);
  const std::vector<double> angles = angles_rad(cfg.eval.angles_deg);
  const SurfaceSpec surface = cfg.surface_for(cfg.plane_angles_deg.front());
  const std::vector<HingeMap> maps = hinge_sweep(
      policy, cfg.robot, surface, cfg.sweeps.stiffness,
      cfg.sweeps.damping_ratios, cfg.eval.speeds, angles, cfg.eval.trials,
      cfg.seed, cfg.env, cfg.eval.criterion, worker_count(args));
  for (const HingeMap& hm : maps) {
    char name[64];
    std::snprintf(name, sizeof name, "hinge_K%.3g_z%.3g.csv", hm.stiffness,
                  hm.damping_ratio);
    write_success_map_csv(dir + "/" + name, hm.map, {cfg.digest, cfg.seed});
    std::cout << "wrote " << name << "\n";
  }
  return kExitOk;
}

int cmd_episode(const CommonArgs& args, double speed, double angle_deg,
                double plane_deg) {
  const ExperimentConfig cfg = load_and_override(args);
  const std::string dir = make_run_dir(cfg, args);
  const PolicyHandle policy = load_policy(args.checkpoint_path, cfg);
  const SurfaceSpec surface = cfg.surface_for(plane_deg);
  const ApproachCondition cond{speed, deg2rad(angle_deg)};
  const EpisodeResult result = run_episode(policy, cond, surface, cfg.robot,
                                           cfg.seed, cfg.env, true);
  write_trajectory_csv(dir + "/episode.csv", result, {cfg.digest, cfg.seed});
  std::cout << episode_to_json(cond, surface, cfg.seed, result).dump(2) << "\n";
  std::cout << "wrote " << dir << "/episode.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar quadrotor dynamic-perching laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  double ep_speed = 3.0;
  double ep_angle = 70.0;
  double ep_plane = 0.0;
  std::string map_a;
  std::string map_b;

  auto add_common = [&](CLI::App* sub, bool needs_checkpoint) {
    sub->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required();
    if (needs_checkpoint)
      sub->add_option("--checkpoint", args.checkpoint_path, "policy checkpoint")
          ->required();
    sub->add_option("--seed", args.seed, "override the config seed");
    sub->add_option("--workers", args.workers,
                    "parallel workers (default: cores)");
    sub->add_option("--out", args.out_dir, "output directory");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train a perching policy");
  add_common(train_cmd, false);
  CLI::App* map_cmd = app.add_subcommand("map", "evaluate success maps");
  add_common(map_cmd, true);
  CLI::App* thr_cmd =
      app.add_subcommand("threshold", "kinematic velocity-threshold curves");
  add_common(thr_cmd, false);
  CLI::App* cmp_cmd = app.add_subcommand("compare", "diff two map CSVs");
  add_common(cmp_cmd, false);
  cmp_cmd->add_option("map_a", map_a, "first map CSV")->required();
  cmp_cmd->add_option("map_b", map_b, "second map CSV")->required();
  CLI::App* hinge_cmd =
      app.add_subcommand("hinge-sweep", "stiffness/damping sweep maps");
  add_common(hinge_cmd, true);
  CLI::App* ep_cmd =
      app.add_subcommand("episode", "run one episode and dump its trajectory");
  add_common(ep_cmd, true);
  ep_cmd->add_option("--speed", ep_speed, "approach speed [m/s]");
  ep_cmd->add_option("--angle", ep_angle, "flight angle [deg]");
  ep_cmd->add_option("--plane", ep_plane, "plane angle [deg]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(args);
    if (map_cmd->parsed()) return cmd_map(args);
    if (thr_cmd->parsed()) return cmd_threshold(args);
    if (cmp_cmd->parsed()) return cmd_compare(args, map_a, map_b);
    if (hinge_cmd->parsed()) return cmd_hinge_sweep(args);
    if (ep_cmd->parsed()) return cmd_episode(args, ep_speed, ep_angle, ep_plane);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
