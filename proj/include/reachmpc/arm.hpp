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

#ifndef REACHMPC_ARM_HPP_
#define REACHMPC_ARM_HPP_

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace reachmpc {

/// Joint-space vector (angles, setpoints, increments). Length equals the
/// number of joints of the arm it is used with.
using JointVector = Eigen::VectorXd;

/// Parameters of the simulated planar revolute-joint arm. Links are capsules
/// of half-width `link_radius` spanning consecutive joint positions; the base
/// is fixed at the origin.
struct ArmModel {
  Eigen::VectorXd link_lengths;     // [m], one per link
  Eigen::VectorXd joint_min;        // [rad]
  Eigen::VectorXd joint_max;        // [rad]
  Eigen::VectorXd joint_stiffness;  // Kj diagonal [Nm/rad]
  Eigen::VectorXd joint_damping;    // Dj diagonal [Nm s/rad]
  Eigen::VectorXd link_mass;        // [kg]
  double link_radius = 0.03;        // capsule half-width [m]

  int dof() const { return static_cast<int>(link_lengths.size()); }

  /// Configuration-independent diagonal inertia surrogate:
  /// I_i = sum_{j>=i} mass_j * (distance from joint i to the center of link j
  /// at the zero configuration)^2.
  Eigen::VectorXd inertia_diagonal() const;

  /// Damping for near-critical response of each joint treated as a decoupled
  /// second-order system: D_i = 2 sqrt(K_i I_i).
  Eigen::VectorXd critical_damping() const;

  /// Three-link arm with human-like proportions: torso, shoulder, elbow.
  static ArmModel human_like();

  /// Throws std::invalid_argument if any structural invariant is broken
  /// (positive lengths/masses/stiffness, joint_min < joint_max, m >= 1).
  void validate() const;
};

/// Positions of the base, each joint, and the end effector: m+1 points with
/// point 0 at the origin.
std::vector<Eigen::Vector2d> forward_kinematics(const ArmModel& arm,
                                                const JointVector& q);

/// Jacobian of a point rigidly attached to link `link_index`, 2 x m. Columns
/// for joints distal to the link are zero.
Eigen::Matrix2Xd point_jacobian(const ArmModel& arm, const JointVector& q,
                                int link_index, const Eigen::Vector2d& point);

/// Same, with the joint positions already computed (hot paths recompute the
/// chain once and share it).
Eigen::Matrix2Xd point_jacobian(const std::vector<Eigen::Vector2d>& joints,
                                int n_joints, int link_index,
                                const Eigen::Vector2d& point);

/// Jacobian at the end-effector point.
Eigen::Matrix2Xd ee_jacobian(const ArmModel& arm, const JointVector& q);

/// (joint_min - q, joint_max - q): the admissible joint-angle change before
/// hitting each limit. First component is <= 0 and second >= 0 whenever q is
/// inside the limits.
std::pair<JointVector, JointVector> joint_limit_margins(const ArmModel& arm,
                                                        const JointVector& q);

}  // namespace reachmpc

#endif  // REACHMPC_ARM_HPP_
