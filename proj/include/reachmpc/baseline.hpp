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

#ifndef REACHMPC_BASELINE_HPP_
#define REACHMPC_BASELINE_HPP_

#include <optional>

#include "reachmpc/controller.hpp"

namespace reachmpc {

/// Comparison controller: damped Jacobian pseudoinverse steps toward the goal
/// on the same impedance substrate. The skin feeds only the safety stop.
class BaselineController : public Controller {
 public:
  BaselineController(ArmModel arm, ControllerParams params);

  StepDecision step(const JointVector& theta, const JointVector& phi,
                    const std::vector<TaxelReading>& skin) override;
  void set_goal(const Eigen::Vector2d& goal) override { params_.goal = goal; }
  Eigen::Vector2d goal() const override { return params_.goal; }
  bool halted() const override { return latched_.has_value(); }

  const ControllerParams& params() const { return params_; }

 private:
  ArmModel arm_;
  ControllerParams params_;
  std::optional<HaltReason> latched_;
};

/// dphi = (J^T J + reg I)^-1 J^T dx_d: the raw pseudoinverse step before
/// bound/limit clamping. Exposed for the free-space equivalence checks.
JointVector pseudoinverse_step(const Eigen::Matrix2Xd& ee_jacobian,
                               const Eigen::Vector2d& dx_d, double reg);

}  // namespace reachmpc

#endif  // REACHMPC_BASELINE_HPP_
