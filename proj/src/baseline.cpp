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

#include "reachmpc/baseline.hpp"

namespace reachmpc {

JointVector pseudoinverse_step(const Eigen::Matrix2Xd& ee_jacobian,
                               const Eigen::Vector2d& dx_d, double reg) {
  const Eigen::Index m = ee_jacobian.cols();
  // J^T J is rank-deficient for m > 2; the ridge keeps the system invertible
  const Eigen::MatrixXd normal = ee_jacobian.transpose() * ee_jacobian +
                                 reg * Eigen::MatrixXd::Identity(m, m);
  return normal.llt().solve(ee_jacobian.transpose() * dx_d);
}

BaselineController::BaselineController(ArmModel arm, ControllerParams params)
    : arm_(std::move(arm)), params_(std::move(params)) {
  arm_.validate();
}

StepDecision BaselineController::step(const JointVector& theta, const JointVector& phi,
                                      const std::vector<TaxelReading>& skin) {
  if (latched_) {
    StepDecision d;
    d.halted = true;
    d.reason = *latched_;
    return d;
  }
  for (const TaxelReading& t : skin) {
    if (t.normal_force > params_.f_safety) {
      latched_ = HaltReason::kSafety;
      StepDecision d;
      d.halted = true;
      d.reason = HaltReason::kSafety;
      return d;
    }
  }

  const auto joints = forward_kinematics(arm_, theta);
  const Eigen::Vector2d x_h = joints.back();
  const Eigen::Matrix2Xd jac =
      point_jacobian(joints, arm_.dof(), arm_.dof() - 1, x_h);
  const Eigen::Vector2d dx_d = desired_delta_x(x_h, params_.goal, params_.d_w);

  JointVector dphi = pseudoinverse_step(jac, dx_d, params_.pinv_reg);
  dphi = dphi.cwiseMax(-params_.dphi_bound).cwiseMin(params_.dphi_bound);
  // keep the virtual trajectory within the physical joint limits
  dphi = (phi + dphi).cwiseMax(arm_.joint_min).cwiseMin(arm_.joint_max) - phi;

  StepDecision d;
  d.dphi = std::move(dphi);
  return d;
}

}  // namespace reachmpc
