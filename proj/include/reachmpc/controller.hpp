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

#ifndef REACHMPC_CONTROLLER_HPP_
#define REACHMPC_CONTROLLER_HPP_

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "reachmpc/arm.hpp"
#include "reachmpc/qp.hpp"
#include "reachmpc/world.hpp"

// One-step model predictive controller over the quasi-static arm model:
// at every outer step it rebuilds theta(k+1) = theta(k) + B dphi with
// B = (Kj + sum J_ci^T K_ci J_ci)^-1 Kj, frames reaching as a QP in dphi,
// and bounds the predicted per-contact normal-force changes.

namespace reachmpc {

/// Circular region with its own don't-care force threshold.
struct FragileRegion {
  Eigen::Vector2d center;
  double radius = 0.0;
  double f_thresh = 2.0;
};

struct ControllerParams {
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();  // x_g [m]

  double k_default = 5000.0;  // stiffness assigned to new contacts [N/m]
  double k_min = 50.0;        // estimator clamp [N/m]
  double k_max = 1e5;
  int stiffness_window_min = 5;    // samples before the estimator engages
  int stiffness_window_cap = 50;   // ring-buffer capacity
  double stiffness_min_spread = 1e-4;  // displacement spread [m]

  double f_thresh_default = 5.0;  // don't-care force threshold [N]
  std::vector<FragileRegion> fragile_regions;
  double f_rate = 0.5;    // max predicted force change per outer step [N]
  double f_safety = 100.0;  // halt-and-fail threshold [N]

  double d_w = 0.005;       // straight-line waypoint distance [m]
  double alpha1 = 1.0;      // reach objective weight
  double alpha2 = 0.01;     // torque-change weight
  double alpha3 = 10.0;     // over-threshold force-decrease weight
  double g3_decrease = 0.5;  // desired normal-force drop per step [N]
  double dphi_bound = 0.05;  // per-step virtual trajectory bound [rad]

  double activation_force = 0.1;  // taxel force that counts as contact [N]
  double pinv_reg = 1e-8;  // Tikhonov term shared with the baseline pseudoinverse
  double qp_tol = 1e-8;
  int qp_max_iter = 200;
};

/// One tactile contact as the controller sees it.
struct ContactRecord {
  TaxelId taxel;
  Eigen::Vector2d location;
  Eigen::Vector2d outward_normal;
  double normal_force = 0.0;    // [N]
  Eigen::Matrix2Xd jacobian;    // 2 x m at the taxel centroid
  double stiffness = 0.0;       // k_i [N/m]
};

enum class HaltReason { kSafety, kInfeasibleFallbackFailed, kSolverFault };

inline const char* to_string(HaltReason r) {
  switch (r) {
    case HaltReason::kSafety: return "safety";
    case HaltReason::kInfeasibleFallbackFailed: return "infeasible_fallback_failed";
    case HaltReason::kSolverFault: return "solver_fault";
  }
  return "unknown";
}

struct QpStepStats {
  qp::SolveStatus status = qp::SolveStatus::kOptimal;
  int active_count = 0;
  int n_contacts = 0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double max_violation = 0.0;  // post-hoc G x - h check
  bool rate_relaxed = false;   // infeasibility fallback engaged
  bool fallback_zero = false;  // dphi forced to zero
};

/// Per-step controller output: either a virtual-trajectory increment or a
/// latched halt.
struct StepDecision {
  bool halted = false;
  HaltReason reason = HaltReason::kSafety;
  JointVector dphi;
  QpStepStats stats;
};

/// Thrown when the model assembly or QP hits a numerical fault; controllers
/// convert it into Halt(solver_fault).
struct SolverFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Desired end-effector motion for one step: the straight line toward the
/// goal, clamped to length d_w.
Eigen::Vector2d desired_delta_x(const Eigen::Vector2d& x_h, const Eigen::Vector2d& x_g,
                                double d_w);

/// B = (Kj + sum J_ci^T k_i n_i n_i^T J_ci)^-1 Kj. The defining identity is
/// honored to 1e-9 max-norm (one refinement pass after the Cholesky solve).
Eigen::MatrixXd assemble_model(const ArmModel& arm,
                               const std::vector<ContactRecord>& contacts);

/// The three linear maps of dphi derived from B.
struct PredictionMaps {
  Eigen::MatrixXd dtheta;         // m x m: predicted joint change
  Eigen::Matrix2Xd ee;            // 2 x m: predicted end-effector motion
  Eigen::MatrixXd contact_force;  // n_contacts x m: predicted normal-force change
};

PredictionMaps predicted_quantities(const Eigen::MatrixXd& model,
                                    const ArmModel& arm, const JointVector& theta,
                                    const std::vector<ContactRecord>& contacts);

/// Don't-care threshold for a contact location: first fragile region that
/// contains it (closed disc), otherwise the default.
double threshold_for_location(const ControllerParams& params,
                              const Eigen::Vector2d& location);

/// Assemble the per-step QP in dphi. `rate_scale` loosens the force-rate rows
/// (the infeasibility fallback retries with 2x).
qp::Problem<double> build_qp(const JointVector& theta, const JointVector& phi,
                             const Eigen::Vector2d& x_h,
                             const std::vector<ContactRecord>& contacts,
                             const ControllerParams& params, const ArmModel& arm,
                             double rate_scale = 1.0);

/// Ordinary least-squares slope of normal force against normal displacement,
/// clamped to [k_min, k_max]. Falls back to `fallback` when there are fewer
/// than `min_samples` points or the displacement spread is degenerate.
double estimate_stiffness(const std::vector<std::pair<double, double>>& samples,
                          double fallback, double k_min, double k_max,
                          int min_samples, double min_spread);

/// Common interface for the reach controllers driven by the trial harness.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual StepDecision step(const JointVector& theta, const JointVector& phi,
                            const std::vector<TaxelReading>& skin) = 0;
  virtual void set_goal(const Eigen::Vector2d& goal) = 0;
  virtual Eigen::Vector2d goal() const = 0;
  virtual bool halted() const = 0;
};

class MpcController : public Controller {
 public:
  MpcController(ArmModel arm, ControllerParams params);

  StepDecision step(const JointVector& theta, const JointVector& phi,
                    const std::vector<TaxelReading>& skin) override;
  void set_goal(const Eigen::Vector2d& goal) override { params_.goal = goal; }
  Eigen::Vector2d goal() const override { return params_.goal; }
  bool halted() const override { return latched_.has_value(); }

  const ControllerParams& params() const { return params_; }

  /// Current stiffness estimate for a tracked taxel (tests/diagnostics).
  std::optional<double> tracked_stiffness(const TaxelId& id) const;

 private:
  struct ContactTrack {
    Eigen::Vector2d last_center;
    double cum_displacement = 0.0;
    double stiffness = 0.0;
    std::vector<std::pair<double, double>> samples;  // (normal disp [m], force [N])
  };

  StepDecision halt(HaltReason reason);
  void update_tracks(const std::vector<const TaxelReading*>& active);

  ArmModel arm_;
  ControllerParams params_;
  std::optional<HaltReason> latched_;
  std::map<TaxelId, ContactTrack> tracks_;
};

}  // namespace reachmpc

#endif  // REACHMPC_CONTROLLER_HPP_
