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

#ifndef REACHMPC_TRIAL_HPP_
#define REACHMPC_TRIAL_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reachmpc/baseline.hpp"
#include "reachmpc/config.hpp"
#include "reachmpc/controller.hpp"
#include "reachmpc/trial_log.hpp"
#include "reachmpc/world.hpp"

// Batch experiment harness: seeded trial generation, reach supervision with
// pull-out-and-retry, force statistics, and threshold sweeps.

namespace reachmpc {

struct TrialSpec {
  std::uint64_t seed = 0;
  int n_fixed = 0;
  int n_movable = 0;
  Workspace workspace;
  double obstacle_radius = 0.01;
  JointVector initial_theta;
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  std::vector<std::pair<Eigen::Vector2d, ObstacleKind>> placements;  // fixed first
};

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sample a trial: obstacle centers uniformly in the workspace, fixed first,
/// each accepted only when clear of prior obstacles and the arm's initial
/// pose; the goal follows the same rejection sampling with enough clearance
/// for the end-effector point. Deterministic in the seed; throws
/// GenerationError after 10^4 rejected draws for any single placement.
TrialSpec generate_trial(std::uint64_t seed, int n_fixed, int n_movable,
                         const Config& config);

std::string trial_to_json(const TrialSpec& spec);
TrialSpec trial_from_json(const std::string& text);

/// Obstacles of a spec with the config's material parameters applied.
std::vector<Obstacle> materialize_obstacles(const TrialSpec& spec,
                                            const WorldParams& world);

enum class ReachReason { kReached, kStagnated, kSafetyHalt, kTimeout, kSimFault };
const char* to_string(ReachReason r);

struct ReachOutcome {
  bool success = false;
  ReachReason reason = ReachReason::kTimeout;
  double duration = 0.0;  // [s]
  std::vector<double> force_samples;  // all nonzero taxel forces, 100 Hz
  double max_force = 0.0;
  std::vector<Eigen::Vector2d> ee_path;
  std::optional<Eigen::Vector2d> last_contact_centroid;
};

struct ReachLimits {
  double max_duration = 30.0;
  double success_eps = 0.025;
  double stagnation_eps = 0.01;
  double stagnation_window = 2.0;
};

/// Drive one controller at 100 Hz until the goal is reached, the controller
/// halts, the end effector stagnates, or time runs out. With `via` set the
/// reach first targets the via point, then switches to the controller goal.
ReachOutcome run_reach(WorldState& world, Controller& controller, const ArmModel& arm,
                       const SimParams& sim, const ReachLimits& limits,
                       std::optional<Eigen::Vector2d> via = std::nullopt,
                       int reach_index = 0, const char* phase = "reach",
                       TrialLogWriter* log = nullptr);

struct TrialResult {
  int trial_id = 0;
  std::string controller_id;
  bool success = false;
  std::vector<ReachOutcome> reaches;
  double max_force = 0.0;      // over all reach attempts
  double total_duration = 0.0;  // reach time only, pullouts excluded
};

std::unique_ptr<Controller> make_controller(const std::string& id, const ArmModel& arm,
                                            const ControllerParams& params);

/// Up to max_reaches attempts on one trial. Between attempts the arm is
/// pulled back toward its starting end-effector position (same controller
/// type, outcome ignored), and the retry goes through a waypoint offset
/// laterally from the last contact centroid, alternating sides.
TrialResult supervise(const TrialSpec& spec, const std::string& controller_id,
                      const Config& config, int max_reaches, int trial_id = 0,
                      TrialLogWriter* log = nullptr);

struct AggregateReport {
  int n_trials = 0;
  int n_samples = 0;
  double success_rate = 0.0;
  double avg_max_force = 0.0;  // mean over trials of the per-trial max
  double avg_force = 0.0;      // mean over pooled nonzero samples
  double q1 = 0.0, median = 0.0, q3 = 0.0;  // pooled quartiles
};

/// Pool the first `reach_limit` attempts of every trial. Throws on empty
/// input. Quartiles are NaN when no force sample was recorded.
AggregateReport aggregate(const std::vector<TrialResult>& results,
                          int reach_limit = 1 << 30);

/// Sorted-order quartiles with linear interpolation.
void quartiles(std::vector<double> values, double& q1, double& median, double& q3);

/// Pearson correlation; NaN when either side has zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Run every trial with a worker pool; one log file per trial when log_dir is
/// nonempty. Results keep the spec order regardless of scheduling.
std::vector<TrialResult> run_trials(const std::vector<TrialSpec>& specs,
                                    const std::string& controller_id,
                                    const Config& config, int max_reaches, int jobs,
                                    const std::string& log_dir = "");

struct SweepEntry {
  double threshold = 0.0;
  AggregateReport report;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  double correlation = 0.0;  // threshold vs pooled median force; NaN if undefined
};

/// Re-run the same trial set under each force threshold and correlate the
/// threshold with the pooled median contact force.
SweepResult sweep_thresholds(const std::vector<TrialSpec>& specs,
                             const std::vector<double>& thresholds,
                             const Config& config, int max_reaches, int jobs,
                             const std::string& log_dir = "");

/// Rebuild the aggregate for one controller purely from the trial logs in a
/// directory (reach phases only).
AggregateReport report_from_logs(const std::string& dir,
                                 const std::string& controller_id,
                                 int reach_limit = 1 << 30);

/// report.csv: one row per trial plus a summary block.
void write_report_csv(const std::string& path, const std::vector<TrialResult>& results,
                      const AggregateReport& report);

std::string trial_log_path(const std::string& dir, const std::string& controller_id,
                           int trial_id);

}  // namespace reachmpc

#endif  // REACHMPC_TRIAL_HPP_
