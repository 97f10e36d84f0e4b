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

#ifndef REACHMPC_WORLD_HPP_
#define REACHMPC_WORLD_HPP_

#include <Eigen/Dense>
#include <vector>

#include "reachmpc/arm.hpp"

// Physics and tactile substrate: circular obstacles against capsule links,
// penalty contact forces, a 1 kHz joint-space impedance loop, and a simulated
// skin that reports per-taxel normal forces at 100 taxels per meter.

namespace reachmpc {

enum class ObstacleKind { kFixed, kMovable };

struct Obstacle {
  Eigen::Vector2d center;
  double radius = 0.01;              // [m]
  ObstacleKind kind = ObstacleKind::kFixed;
  double surface_stiffness = 5000.0;  // [N/m]
  double friction_threshold = 2.0;    // [N], movable only
  double mobility_gain = 0.05;        // [m/(s N)], movable only
};

struct TaxelId {
  int link = 0;
  int edge = 0;  // 0/1: long edges, 2/3: proximal/distal end caps
  int slot = 0;

  friend bool operator==(const TaxelId&, const TaxelId&) = default;
  friend auto operator<=>(const TaxelId&, const TaxelId&) = default;
};

struct TaxelReading {
  TaxelId id;
  Eigen::Vector2d center;          // taxel centroid in the world frame
  Eigen::Vector2d outward_normal;  // unit, away from the arm surface
  double normal_force = 0.0;       // [N], >= 0
};

/// Geometric contact between one link capsule and one obstacle.
struct RawContact {
  int link_index = 0;
  Eigen::Vector2d point;           // closest point on the arm surface
  Eigen::Vector2d outward_normal;  // unit, from arm surface toward obstacle
  double penetration_depth = 0.0;  // [m], >= 0
  int obstacle_id = 0;
};

struct WorldState {
  JointVector theta;      // joint angles [rad]
  JointVector theta_dot;  // joint velocities [rad/s]
  JointVector phi;        // virtual trajectory [rad]
  std::vector<Obstacle> obstacles;
  double time = 0.0;      // [s]

  static WorldState at_rest(const ArmModel& arm, const JointVector& theta0,
                            std::vector<Obstacle> obstacles = {});
};

struct SimParams {
  double dt_inner = 0.001;  // 1 kHz impedance loop
  int inner_substeps = 10;  // outer period 0.01 s (100 Hz)
  double taxel_pitch = 0.01;  // 100 taxels per meter
};

/// One RawContact per (link, obstacle) pair whose capsule-circle distance is
/// below the sum of radii. Empty when contact free.
std::vector<RawContact> detect_contacts(const WorldState& world, const ArmModel& arm);
std::vector<RawContact> detect_contacts(const std::vector<Eigen::Vector2d>& joints,
                                        const ArmModel& arm,
                                        const std::vector<Obstacle>& obstacles);

/// Penalty force applied by the arm to the environment at each contact:
/// surface_stiffness * penetration * outward_normal. Frictionless.
std::vector<Eigen::Vector2d> contact_forces(const std::vector<RawContact>& contacts,
                                            const std::vector<Obstacle>& obstacles);

/// Movable obstacle slide law: no motion while the applied force stays within
/// the friction threshold, velocity proportional to the excess beyond it.
Obstacle update_movable(const Obstacle& obstacle, const Eigen::Vector2d& net_force,
                        double dt);

/// One 1 ms impedance step: tau = Kj (phi - theta) - Dj theta_dot, minus the
/// contact torques, integrated semi-implicitly with the diagonal inertia
/// surrogate; theta hard-clamped to the joint limits; movable obstacles
/// advanced with the same dt. Returns false on a non-finite state, which
/// aborts the trial as a simulation fault.
[[nodiscard]] bool step_inner(WorldState& world, const ArmModel& arm, double dt_inner);

/// Per-taxel skin image for the current state. Taxels tile both long edges
/// and both end caps of every link at the given pitch; each contact's normal
/// force magnitude is accumulated on the taxel nearest to the contact point.
/// All taxels are reported, zeros included, in (link, edge, slot) order.
std::vector<TaxelReading> skin_reading(const WorldState& world, const ArmModel& arm,
                                       double taxel_pitch = 0.01);

struct OuterStepResult {
  bool ok = true;
  std::vector<TaxelReading> skin;
};

/// Outer control period: phi += dphi (clamped to the joint limits), then
/// inner_substeps inner steps, then a fresh skin reading.
OuterStepResult simulate_outer_step(WorldState& world, const ArmModel& arm,
                                    const JointVector& dphi,
                                    const SimParams& sim = SimParams{});

/// Lyapunov-style diagnostic: kinetic + joint-spring + contact-spring energy.
/// Non-increasing under zero input with no movable obstacles.
double mechanical_energy(const WorldState& world, const ArmModel& arm);

}  // namespace reachmpc

#endif  // REACHMPC_WORLD_HPP_
