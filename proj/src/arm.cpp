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

#include "reachmpc/arm.hpp"

#include <cmath>
#include <stdexcept>

namespace reachmpc {

Eigen::VectorXd ArmModel::inertia_diagonal() const {
  const int m = dof();
  // joint i sits at x = sum of proximal link lengths in the zero configuration
  Eigen::VectorXd joint_x(m);
  double x = 0.0;
  for (int i = 0; i < m; ++i) {
    joint_x[i] = x;
    x += link_lengths[i];
  }
  Eigen::VectorXd inertia = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double center = joint_x[j] + 0.5 * link_lengths[j];
      const double lever = center - joint_x[i];
      inertia[i] += link_mass[j] * lever * lever;
    }
  }
  return inertia;
}

Eigen::VectorXd ArmModel::critical_damping() const {
  return 2.0 * (joint_stiffness.array() * inertia_diagonal().array()).sqrt();
}

ArmModel ArmModel::human_like() {
  ArmModel arm;
  arm.link_lengths = (Eigen::VectorXd(3) << 0.3, 0.3, 0.2).finished();
  arm.joint_min = (Eigen::VectorXd(3) << -2.0, -2.4, 0.0).finished();
  arm.joint_max = (Eigen::VectorXd(3) << 2.0, 2.4, 2.7).finished();
  arm.joint_stiffness = (Eigen::VectorXd(3) << 30.0, 20.0, 15.0).finished();
  arm.link_mass = (Eigen::VectorXd(3) << 2.0, 1.0, 0.5).finished();
  arm.link_radius = 0.03;
  arm.joint_damping = arm.critical_damping();
  return arm;
}

void ArmModel::validate() const {
  const int m = dof();
  if (m < 1) throw std::invalid_argument("arm needs at least one link");
  auto expect_size = [m](const Eigen::VectorXd& v, const char* what) {
    if (v.size() != m) {
      throw std::invalid_argument(std::string("arm field has wrong length: ") + what);
    }
  };
  expect_size(joint_min, "joint_min");
  expect_size(joint_max, "joint_max");
  expect_size(joint_stiffness, "joint_stiffness");
  expect_size(joint_damping, "joint_damping");
  expect_size(link_mass, "link_mass");
  if (!(link_radius > 0.0)) throw std::invalid_argument("link_radius must be > 0");
  for (int i = 0; i < m; ++i) {
    if (!(link_lengths[i] > 0.0)) throw std::invalid_argument("link length must be > 0");
    if (!(link_mass[i] > 0.0)) throw std::invalid_argument("link mass must be > 0");
    if (!(joint_stiffness[i] > 0.0)) throw std::invalid_argument("joint stiffness must be > 0");
    if (!(joint_damping[i] > 0.0)) throw std::invalid_argument("joint damping must be > 0");
    if (!(joint_min[i] < joint_max[i])) throw std::invalid_argument("joint_min must be < joint_max");
  }
}

std::vector<Eigen::Vector2d> forward_kinematics(const ArmModel& arm,
                                                const JointVector& q) {
  const int m = arm.dof();
  if (q.size() != m) throw std::invalid_argument("forward_kinematics: q has wrong length");
  std::vector<Eigen::Vector2d> points(m + 1);
  points[0].setZero();
  double angle = 0.0;
  for (int i = 0; i < m; ++i) {
    angle += q[i];
    points[i + 1] = points[i] + arm.link_lengths[i] * Eigen::Vector2d(std::cos(angle), std::sin(angle));
  }
  return points;
}

Eigen::Matrix2Xd point_jacobian(const std::vector<Eigen::Vector2d>& joints,
                                int n_joints, int link_index,
                                const Eigen::Vector2d& point) {
  if (link_index < 0 || link_index >= n_joints) {
    throw std::invalid_argument("point_jacobian: link_index out of range");
  }
  Eigen::Matrix2Xd jac = Eigen::Matrix2Xd::Zero(2, n_joints);
  for (int j = 0; j <= link_index; ++j) {
    const Eigen::Vector2d r = point - joints[j];
    jac.col(j) = Eigen::Vector2d(-r.y(), r.x());  // z-axis rotation lever
  }
  return jac;
}

Eigen::Matrix2Xd point_jacobian(const ArmModel& arm, const JointVector& q,
                                int link_index, const Eigen::Vector2d& point) {
  return point_jacobian(forward_kinematics(arm, q), arm.dof(), link_index, point);
}

Eigen::Matrix2Xd ee_jacobian(const ArmModel& arm, const JointVector& q) {
  const auto points = forward_kinematics(arm, q);
  return point_jacobian(points, arm.dof(), arm.dof() - 1, points.back());
}

std::pair<JointVector, JointVector> joint_limit_margins(const ArmModel& arm,
                                                        const JointVector& q) {
  if (q.size() != arm.dof()) throw std::invalid_argument("joint_limit_margins: q has wrong length");
  return {arm.joint_min - q, arm.joint_max - q};
}

}  // namespace reachmpc
