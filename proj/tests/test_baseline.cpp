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

#include <doctest.h>

#include "reachmpc/rng.hpp"

using namespace reachmpc;

namespace {

std::vector<TaxelReading> zero_skin(const ArmModel& arm, const JointVector& q) {
  WorldState w = WorldState::at_rest(arm, q);
  return skin_reading(w, arm);
}

}  // namespace

TEST_CASE("baseline step matches an independent normal-equations oracle") {
  const ArmModel arm = ArmModel::human_like();
  const JointVector q(Eigen::Vector3d(0, 0, 0));
  ControllerParams params;
  params.d_w = 0.01;
  params.goal = forward_kinematics(arm, q).back() + Eigen::Vector2d(0.01, 0.0);

  BaselineController ctrl(arm, params);
  const StepDecision d = ctrl.step(q, q, zero_skin(arm, q));
  REQUIRE(!d.halted);

  // normal equations assembled by hand at the zero configuration, where the
  // jacobian columns are (0, 0.8), (0, 0.5), (0, 0.2)
  Eigen::Matrix2Xd jac(2, 3);
  jac << 0, 0, 0, 0.8, 0.5, 0.2;
  const Eigen::Matrix3d normal =
      jac.transpose() * jac + params.pinv_reg * Eigen::Matrix3d::Identity();
  const Eigen::Vector3d rhs = jac.transpose() * Eigen::Vector2d(0.01, 0.0);
  const Eigen::Vector3d oracle = normal.fullPivLu().solve(rhs);
  CHECK((d.dphi - oracle).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("baseline halts above the safety threshold") {
  const ArmModel arm = ArmModel::human_like();
  const JointVector q(Eigen::Vector3d(0.1, 0.3, 0.5));
  ControllerParams params;
  params.goal = {0.4, 0.2};
  params.f_safety = 15.0;
  BaselineController ctrl(arm, params);

  auto skin = zero_skin(arm, q);
  skin[3].normal_force = 16.0;
  const StepDecision d = ctrl.step(q, q, skin);
  CHECK(d.halted);
  CHECK(d.reason == HaltReason::kSafety);
  CHECK(ctrl.halted());
  // latched
  CHECK(ctrl.step(q, q, zero_skin(arm, q)).halted);
}

TEST_CASE("zero desired motion gives a zero step") {
  const ArmModel arm = ArmModel::human_like();
  const JointVector q(Eigen::Vector3d(0.1, 0.3, 0.5));
  ControllerParams params;
  params.goal = forward_kinematics(arm, q).back();
  BaselineController ctrl(arm, params);
  const StepDecision d = ctrl.step(q, q, zero_skin(arm, q));
  REQUIRE(!d.halted);
  CHECK(d.dphi.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("skin-blindness below the safety threshold") {
  const ArmModel arm = ArmModel::human_like();
  const JointVector q(Eigen::Vector3d(0.2, -0.4, 1.0));
  ControllerParams params;
  params.goal = {0.3, 0.3};
  params.f_safety = 100.0;
  CounterRng rng(9);

  BaselineController a(arm, params);
  BaselineController b(arm, params);
  auto skin1 = zero_skin(arm, q);
  auto skin2 = skin1;
  for (auto& t : skin2) t.normal_force = rng.uniform(0.0, 99.0);
  const StepDecision da = a.step(q, q, skin1);
  const StepDecision db = b.step(q, q, skin2);
  REQUIRE(!da.halted);
  REQUIRE(!db.halted);
  CHECK(da.dphi == db.dphi);
}

TEST_CASE("steps are clamped to the per-step bound and joint limits") {
  const ArmModel arm = ArmModel::human_like();
  ControllerParams params;
  params.goal = {-0.8, -0.8};
  params.dphi_bound = 0.05;

  SUBCASE("per-step bound") {
    const JointVector q(Eigen::Vector3d(0.0, 0.0, 0.5));
    BaselineController ctrl(arm, params);
    const StepDecision d = ctrl.step(q, q, zero_skin(arm, q));
    REQUIRE(!d.halted);
    CHECK(d.dphi.cwiseAbs().maxCoeff() <= 0.05 + 1e-15);
  }
  SUBCASE("virtual trajectory limit") {
    // phi already at the torso limit: no further negative motion allowed
    JointVector q(Eigen::Vector3d(-2.0, 0.0, 0.5));
    BaselineController ctrl(arm, params);
    const StepDecision d = ctrl.step(q, q, zero_skin(arm, q));
    REQUIRE(!d.halted);
    CHECK(q[0] + d.dphi[0] >= arm.joint_min[0] - 1e-15);
  }
}
