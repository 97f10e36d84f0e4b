// Copyright 2026 The reachmpc Authors
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

#include "reachmpc/trial.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "reachmpc/rng.hpp"

namespace reachmpc {

namespace {

double segment_point_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                              const Eigen::Vector2d& p) {
  const Eigen::Vector2d d = b - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * d)).norm();
}

constexpr int kMaxPlacementAttempts = 10000;

}  // namespace

TrialSpec generate_trial(std::uint64_t seed, int n_fixed, int n_movable,
                         const Config& config) {
  if (n_fixed < 0 || n_movable < 0) throw GenerationError("negative obstacle count");
  TrialSpec spec;
  spec.seed = seed;
  spec.n_fixed = n_fixed;
  spec.n_movable = n_movable;
  spec.workspace = config.harness.workspace;
  spec.obstacle_radius = config.harness.obstacle_radius;
  spec.initial_theta = config.harness.initial_theta;

  CounterRng rng(seed);
  const Workspace& ws = spec.workspace;
  const auto joints = forward_kinematics(config.arm, spec.initial_theta);
  const double r = spec.obstacle_radius;

  auto clear_of_arm = [&](const Eigen::Vector2d& c, double clearance) {
    for (int link = 0; link < config.arm.dof(); ++link) {
      if (segment_point_distance(joints[link], joints[link + 1], c) <
          config.arm.link_radius + clearance) {
        return false;
      }
    }
    return true;
  };

  const int total = n_fixed + n_movable;
  for (int i = 0; i < total; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      const Eigen::Vector2d c(rng.uniform(ws.x_min, ws.x_max),
                              rng.uniform(ws.y_min, ws.y_max));
      bool ok = clear_of_arm(c, r);
      for (const auto& [other, kind] : spec.placements) {
        if (!ok) break;
        ok = (c - other).norm() > 2.0 * r;
      }
      if (ok) {
        spec.placements.emplace_back(
            c, i < n_fixed ? ObstacleKind::kFixed : ObstacleKind::kMovable);
        placed = true;
        break;
      }
    }
    if (!placed) throw GenerationError("workspace too crowded to place obstacle");
  }

  // the goal needs clearance for the end-effector point itself
  bool goal_found = false;
  for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
    const Eigen::Vector2d g(rng.uniform(ws.x_min, ws.x_max),
                            rng.uniform(ws.y_min, ws.y_max));
    bool ok = true;
    for (const auto& [other, kind] : spec.placements) {
      if ((g - other).norm() <= r + config.arm.link_radius) {
        ok = false;
        break;
      }
    }
    if (ok) {
      spec.goal = g;
      goal_found = true;
      break;
    }
  }
  if (!goal_found) throw GenerationError("workspace too crowded to place the goal");
  return spec;
}

std::string trial_to_json(const TrialSpec& spec) {
  nlohmann::json j;
  j["seed"] = spec.seed;
  j["n_fixed"] = spec.n_fixed;
  j["n_movable"] = spec.n_movable;
  j["workspace"] = {spec.workspace.x_min, spec.workspace.y_min, spec.workspace.x_max,
                    spec.workspace.y_max};
  j["obstacle_radius"] = spec.obstacle_radius;
  nlohmann::json theta = nlohmann::json::array();
  for (Eigen::Index i = 0; i < spec.initial_theta.size(); ++i) theta.push_back(spec.initial_theta[i]);
  j["initial_theta"] = theta;
  j["goal"] = {spec.goal.x(), spec.goal.y()};
  nlohmann::json obstacles = nlohmann::json::array();
  for (const auto& [center, kind] : spec.placements) {
    obstacles.push_back({{"center", {center.x(), center.y()}},
                         {"kind", kind == ObstacleKind::kFixed ? "fixed" : "movable"}});
  }
  j["obstacles"] = obstacles;
  return j.dump();
}

TrialSpec trial_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  TrialSpec spec;
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.n_fixed = j.at("n_fixed").get<int>();
  spec.n_movable = j.at("n_movable").get<int>();
  spec.workspace = {j.at("workspace")[0].get<double>(), j.at("workspace")[1].get<double>(),
                    j.at("workspace")[2].get<double>(), j.at("workspace")[3].get<double>()};
  spec.obstacle_radius = j.at("obstacle_radius").get<double>();
  const auto& theta = j.at("initial_theta");
  spec.initial_theta.resize(static_cast<Eigen::Index>(theta.size()));
  for (size_t i = 0; i < theta.size(); ++i) spec.initial_theta[static_cast<Eigen::Index>(i)] = theta[i].get<double>();
  spec.goal = {j.at("goal")[0].get<double>(), j.at("goal")[1].get<double>()};
  for (const auto& o : j.at("obstacles")) {
    spec.placements.emplace_back(
        Eigen::Vector2d(o.at("center")[0].get<double>(), o.at("center")[1].get<double>()),
        o.at("kind").get<std::string>() == "fixed" ? ObstacleKind::kFixed
                                                   : ObstacleKind::kMovable);
  }
  return spec;
}

std::vector<Obstacle> materialize_obstacles(const TrialSpec& spec,
                                            const WorldParams& world) {
  std::vector<Obstacle> obstacles;
  obstacles.reserve(spec.placements.size());
  for (const auto& [center, kind] : spec.placements) {
    Obstacle o;
    o.center = center;
    o.kind = kind;
    o.radius = spec.obstacle_radius;
    o.surface_stiffness = world.surface_stiffness;
    o.friction_threshold = world.friction_threshold;
    o.mobility_gain = world.mobility_gain;
    obstacles.push_back(o);
  }
  return obstacles;
}

const char* to_string(ReachReason r) {
  switch (r) {
    case ReachReason::kReached: return "reached";
    case ReachReason::kStagnated: return "stagnated";
    case ReachReason::kSafetyHalt: return "safety_halt";
    case ReachReason::kTimeout: return "timeout";
    case ReachReason::kSimFault: return "sim_fault";
  }
  return "unknown";
}

ReachOutcome run_reach(WorldState& world, Controller& controller, const ArmModel& arm,
                       const SimParams& sim, const ReachLimits& limits,
                       std::optional<Eigen::Vector2d> via, int reach_index,
                       const char* phase, TrialLogWriter* log) {
  ReachOutcome outcome;
  const double t_start = world.time;
  const double outer_dt = sim.dt_inner * sim.inner_substeps;
  const int window_steps =
      std::max(1, static_cast<int>(std::lround(limits.stagnation_window / outer_dt)));
  const Eigen::Vector2d final_goal = controller.goal();
  bool heading_to_via = via.has_value();
  if (heading_to_via) controller.set_goal(*via);

  const int m = arm.dof();
  const JointVector zero = JointVector::Zero(m);
  std::vector<Eigen::Vector2d> skin_centroid_scratch;

  auto log_line = [&](const JointVector& dphi, const std::vector<TaxelReading>& skin,
                      const Eigen::Vector2d& ee, const QpStepStats& stats,
                      const std::string& event) {
    if (!log) return;
    LogRecord rec;
    rec.t = world.time;
    rec.reach = reach_index;
    rec.phase = phase;
    rec.theta = world.theta;
    rec.phi = world.phi;
    rec.dphi = dphi;
    rec.ee = ee;
    for (const TaxelReading& t : skin) {
      if (t.normal_force > 0.0) rec.forces.push_back({t.id, t.normal_force});
    }
    rec.qp_status = qp::to_string(stats.status);
    rec.active_constraints = stats.active_count;
    rec.event = event;
    log->write(rec);
  };

  std::vector<TaxelReading> skin = skin_reading(world, arm, sim.taxel_pitch);
  std::vector<Eigen::Vector2d> ee_hist;

  while (true) {
    const auto joints = forward_kinematics(arm, world.theta);
    const Eigen::Vector2d x_h = joints.back();
    outcome.ee_path.push_back(x_h);

    // record the same skin image the controller is about to see
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    int n_active = 0;
    for (const TaxelReading& t : skin) {
      if (t.normal_force > 0.0) {
        outcome.force_samples.push_back(t.normal_force);
        outcome.max_force = std::max(outcome.max_force, t.normal_force);
        centroid += t.center;
        ++n_active;
      }
    }
    if (n_active > 0) outcome.last_contact_centroid = centroid / n_active;

    const StepDecision decision = controller.step(world.theta, world.phi, skin);
    if (decision.halted) {
      outcome.reason = decision.reason == HaltReason::kSafety ? ReachReason::kSafetyHalt
                                                              : ReachReason::kSimFault;
      outcome.duration = world.time - t_start;
      log_line(zero, skin, x_h, decision.stats,
               std::string("halt_") + to_string(decision.reason));
      return outcome;
    }

    if (heading_to_via && (x_h - *via).norm() < limits.success_eps) {
      heading_to_via = false;
      controller.set_goal(final_goal);
    }
    if ((x_h - final_goal).norm() < limits.success_eps) {
      outcome.success = true;
      outcome.reason = ReachReason::kReached;
      outcome.duration = world.time - t_start;
      log_line(zero, skin, x_h, decision.stats, "reached");
      return outcome;
    }
    bool stagnated = static_cast<int>(ee_hist.size()) >= window_steps;
    for (size_t i = ee_hist.size() - std::min<size_t>(ee_hist.size(), window_steps);
         stagnated && i < ee_hist.size(); ++i) {
      stagnated = (x_h - ee_hist[i]).norm() < limits.stagnation_eps;
    }
    if (stagnated) {
      outcome.reason = ReachReason::kStagnated;
      outcome.duration = world.time - t_start;
      log_line(zero, skin, x_h, decision.stats, "stagnated");
      return outcome;
    }
    if (world.time - t_start >= limits.max_duration) {
      outcome.reason = ReachReason::kTimeout;
      outcome.duration = world.time - t_start;
      log_line(zero, skin, x_h, decision.stats, "timeout");
      return outcome;
    }

    log_line(decision.dphi, skin, x_h, decision.stats, "");
    ee_hist.push_back(x_h);

    const OuterStepResult step = simulate_outer_step(world, arm, decision.dphi, sim);
    if (!step.ok) {
      outcome.reason = ReachReason::kSimFault;
      outcome.duration = world.time - t_start;
      log_line(zero, skin, x_h, decision.stats, "sim_fault");
      return outcome;
    }
    skin = step.skin;
  }
}

std::unique_ptr<Controller> make_controller(const std::string& id, const ArmModel& arm,
                                            const ControllerParams& params) {
  if (id == "mpc") return std::make_unique<MpcController>(arm, params);
  if (id == "baseline") return std::make_unique<BaselineController>(arm, params);
  throw std::invalid_argument("unknown controller id: " + id);
}

TrialResult supervise(const TrialSpec& spec, const std::string& controller_id,
                      const Config& config, int max_reaches, int trial_id,
                      TrialLogWriter* log) {
  if (max_reaches < 1) throw std::invalid_argument("max_reaches must be >= 1");
  TrialResult result;
  result.trial_id = trial_id;
  result.controller_id = controller_id;

  WorldState world = WorldState::at_rest(config.arm, spec.initial_theta,
                                         materialize_obstacles(spec, config.world));
  const Eigen::Vector2d x_start = forward_kinematics(config.arm, spec.initial_theta).back();

  ReachLimits limits;
  limits.max_duration = config.harness.max_duration;
  limits.success_eps = config.harness.success_eps;
  limits.stagnation_eps = config.harness.stagnation_eps;
  limits.stagnation_window = config.harness.stagnation_window;

  ControllerParams params = config.controller;
  params.goal = spec.goal;

  std::optional<Eigen::Vector2d> last_centroid;
  for (int attempt = 0; attempt < max_reaches; ++attempt) {
    std::optional<Eigen::Vector2d> via;
    if (attempt > 0) {
      // retry through a waypoint offset laterally from the last contact
      // centroid, alternating sides
      const Eigen::Vector2d base =
          last_centroid ? *last_centroid
                        : Eigen::Vector2d(0.5 * (x_start + spec.goal));
      Eigen::Vector2d dir = spec.goal - base;
      if (dir.norm() < 1e-9) dir = spec.goal - x_start;
      if (dir.norm() < 1e-9) dir = Eigen::Vector2d(1.0, 0.0);
      dir.normalize();
      const Eigen::Vector2d lateral(-dir.y(), dir.x());
      const double side = attempt % 2 == 1 ? 1.0 : -1.0;
      via = base + side * config.harness.retry_offset * lateral;
    }

    auto controller = make_controller(controller_id, config.arm, params);
    ReachOutcome outcome = run_reach(world, *controller, config.arm, config.world.sim,
                                     limits, via, attempt, "reach", log);
    if (outcome.last_contact_centroid) last_centroid = outcome.last_contact_centroid;
    result.max_force = std::max(result.max_force, outcome.max_force);
    result.total_duration += outcome.duration;
    const bool success = outcome.success;
    const bool fault = outcome.reason == ReachReason::kSimFault;
    result.reaches.push_back(std::move(outcome));
    if (success) {
      result.success = true;
      break;
    }
    if (fault) break;

    if (attempt + 1 < max_reaches) {
      // pull the arm back toward where it started, then retry regardless of
      // whether the pull-out itself got there
      ControllerParams pull_params = params;
      pull_params.goal = x_start;
      auto pull_controller = make_controller(controller_id, config.arm, pull_params);
      ReachLimits pull_limits = limits;
      pull_limits.max_duration = config.harness.pullout_duration;
      run_reach(world, *pull_controller, config.arm, config.world.sim, pull_limits,
                std::nullopt, attempt, "pullout", log);
    }
  }
  return result;
}

void quartiles(std::vector<double> values, double& q1, double& median, double& q3) {
  if (values.empty()) {
    q1 = median = q3 = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = static_cast<size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return (1.0 - frac) * values[lo] + frac * values[hi];
  };
  q1 = at(0.25);
  median = at(0.5);
  q3 = at(0.75);
}

AggregateReport aggregate(const std::vector<TrialResult>& results, int reach_limit) {
  if (results.empty()) throw std::invalid_argument("aggregate: no results");
  AggregateReport report;
  report.n_trials = static_cast<int>(results.size());
  std::vector<double> pooled;
  double sum_max = 0.0;
  int successes = 0;
  for (const TrialResult& trial : results) {
    double trial_max = 0.0;
    bool trial_success = false;
    const int n = std::min<int>(reach_limit, static_cast<int>(trial.reaches.size()));
    for (int i = 0; i < n; ++i) {
      const ReachOutcome& reach = trial.reaches[static_cast<size_t>(i)];
      trial_success = trial_success || reach.success;
      trial_max = std::max(trial_max, reach.max_force);
      pooled.insert(pooled.end(), reach.force_samples.begin(), reach.force_samples.end());
    }
    successes += trial_success ? 1 : 0;
    sum_max += trial_max;
  }
  report.n_samples = static_cast<int>(pooled.size());
  report.success_rate = static_cast<double>(successes) / report.n_trials;
  report.avg_max_force = sum_max / report.n_trials;
  double sum = 0.0;
  for (double f : pooled) sum += f;
  report.avg_force = pooled.empty() ? 0.0 : sum / static_cast<double>(pooled.size());
  quartiles(std::move(pooled), report.q1, report.median, report.q3);
  return report;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n != y.size() || n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

std::string trial_log_path(const std::string& dir, const std::string& controller_id,
                           int trial_id) {
  char name[64];
  std::snprintf(name, sizeof(name), "trial_%04d_%s.jsonl", trial_id, controller_id.c_str());
  return (std::filesystem::path(dir) / name).string();
}

std::vector<TrialResult> run_trials(const std::vector<TrialSpec>& specs,
                                    const std::string& controller_id,
                                    const Config& config, int max_reaches, int jobs,
                                    const std::string& log_dir) {
  std::vector<TrialResult> results(specs.size());
  if (!log_dir.empty()) std::filesystem::create_directories(log_dir);
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= specs.size() || failed.load()) break;
      try {
        std::optional<TrialLogWriter> log;
        if (!log_dir.empty()) {
          log.emplace(trial_log_path(log_dir, controller_id, static_cast<int>(i)));
        }
        results[i] = supervise(specs[i], controller_id, config, max_reaches,
                               static_cast<int>(i), log ? &*log : nullptr);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        error = e.what();
        failed.store(true);
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error("trial execution failed: " + error);
  return results;
}

SweepResult sweep_thresholds(const std::vector<TrialSpec>& specs,
                             const std::vector<double>& thresholds,
                             const Config& config, int max_reaches, int jobs,
                             const std::string& log_dir) {
  if (thresholds.size() < 2) throw std::invalid_argument("sweep needs at least two thresholds");
  SweepResult sweep;
  std::vector<double> medians;
  for (const double threshold : thresholds) {
    Config tuned = config;
    tuned.controller.f_thresh_default = threshold;
    std::string dir;
    if (!log_dir.empty()) {
      char sub[48];
      std::snprintf(sub, sizeof(sub), "thresh_%g", threshold);
      dir = (std::filesystem::path(log_dir) / sub).string();
    }
    const auto results = run_trials(specs, "mpc", tuned, max_reaches, jobs, dir);
    sweep.entries.push_back({threshold, aggregate(results)});
    medians.push_back(sweep.entries.back().report.median);
  }
  sweep.correlation = pearson(thresholds, medians);
  return sweep;
}

AggregateReport report_from_logs(const std::string& dir,
                                 const std::string& controller_id,
                                 int reach_limit) {
  std::vector<TrialResult> results;
  std::vector<std::filesystem::path> files;
  const std::string suffix = "_" + controller_id + ".jsonl";
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const auto records = read_trial_log(file.string());
    TrialResult trial;
    trial.controller_id = controller_id;
    int max_reach = -1;
    for (const LogRecord& r : records) {
      if (r.phase != "reach") continue;
      max_reach = std::max(max_reach, r.reach);
    }
    trial.reaches.resize(static_cast<size_t>(max_reach + 1));
    for (const LogRecord& r : records) {
      if (r.phase != "reach") continue;
      ReachOutcome& reach = trial.reaches[static_cast<size_t>(r.reach)];
      for (const auto& [id, force] : r.forces) {
        reach.force_samples.push_back(force);
        reach.max_force = std::max(reach.max_force, force);
      }
      if (r.event == "reached") {
        reach.success = true;
        reach.reason = ReachReason::kReached;
      }
    }
    for (size_t i = 0; i < trial.reaches.size(); ++i) {
      if (static_cast<int>(i) < reach_limit && trial.reaches[i].success) trial.success = true;
      trial.max_force = std::max(trial.max_force, trial.reaches[i].max_force);
    }
    results.push_back(std::move(trial));
  }
  return aggregate(results, reach_limit);
}

void write_report_csv(const std::string& path, const std::vector<TrialResult>& results,
                      const AggregateReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open report for writing: " + path);
  out << "trial,controller,success,reason,reaches,duration_s,max_force_N,n_samples\n";
  for (const TrialResult& trial : results) {
    const char* reason = trial.reaches.empty()
                             ? "none"
                             : to_string(trial.success ? ReachReason::kReached
                                                       : trial.reaches.back().reason);
    size_t samples = 0;
    for (const ReachOutcome& r : trial.reaches) samples += r.force_samples.size();
    out << trial.trial_id << ',' << trial.controller_id << ','
        << (trial.success ? 1 : 0) << ',' << reason << ',' << trial.reaches.size()
        << ',' << trial.total_duration << ',' << trial.max_force << ',' << samples
        << '\n';
  }
  out << "summary,trials," << report.n_trials << '\n';
  out << "summary,success_rate," << report.success_rate << '\n';
  out << "summary,avg_max_contact_force_N," << report.avg_max_force << '\n';
  out << "summary,avg_contact_force_N," << report.avg_force << '\n';
  out << "summary,q1_force_N," << report.q1 << '\n';
  out << "summary,median_force_N," << report.median << '\n';
  out << "summary,q3_force_N," << report.q3 << '\n';
  out << "summary,force_samples," << report.n_samples << '\n';
}

}  // namespace reachmpc
