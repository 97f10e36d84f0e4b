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

#include "reachmpc/world.hpp"

#include <cmath>
#include <stdexcept>

namespace reachmpc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Closest point on segment [a, b] to point c.
Eigen::Vector2d closest_on_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                   const Eigen::Vector2d& c) {
  const Eigen::Vector2d d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 <= 0.0) return a;
  const double t = std::clamp((c - a).dot(d) / len2, 0.0, 1.0);
  return a + t * d;
}

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

}  // namespace

WorldState WorldState::at_rest(const ArmModel& arm, const JointVector& theta0,
                               std::vector<Obstacle> obstacles) {
  WorldState w;
  w.theta = theta0;
  w.theta_dot = JointVector::Zero(arm.dof());
  w.phi = theta0;
  w.obstacles = std::move(obstacles);
  return w;
}

std::vector<RawContact> detect_contacts(const std::vector<Eigen::Vector2d>& joints,
                                        const ArmModel& arm,
                                        const std::vector<Obstacle>& obstacles) {
  std::vector<RawContact> contacts;
  const int m = arm.dof();
  for (int link = 0; link < m; ++link) {
    const Eigen::Vector2d& a = joints[link];
    const Eigen::Vector2d& b = joints[link + 1];
    for (int oid = 0; oid < static_cast<int>(obstacles.size()); ++oid) {
      const Obstacle& obs = obstacles[oid];
      const Eigen::Vector2d axis_point = closest_on_segment(a, b, obs.center);
      const Eigen::Vector2d to_center = obs.center - axis_point;
      const double dist = to_center.norm();
      const double reach = arm.link_radius + obs.radius;
      if (dist >= reach) continue;
      RawContact c;
      c.link_index = link;
      // degenerate case: obstacle center exactly on the link axis
      c.outward_normal = dist > 1e-12 ? Eigen::Vector2d(to_center / dist)
                                      : Eigen::Vector2d(perp((b - a).normalized()));
      c.penetration_depth = reach - dist;
      c.point = axis_point + arm.link_radius * c.outward_normal;
      c.obstacle_id = oid;
      contacts.push_back(c);
    }
  }
  return contacts;
}

std::vector<RawContact> detect_contacts(const WorldState& world, const ArmModel& arm) {
  return detect_contacts(forward_kinematics(arm, world.theta), arm, world.obstacles);
}

std::vector<Eigen::Vector2d> contact_forces(const std::vector<RawContact>& contacts,
                                            const std::vector<Obstacle>& obstacles) {
  std::vector<Eigen::Vector2d> forces;
  forces.reserve(contacts.size());
  for (const RawContact& c : contacts) {
    const double k = obstacles[c.obstacle_id].surface_stiffness;
    forces.push_back(k * c.penetration_depth * c.outward_normal);
  }
  return forces;
}

Obstacle update_movable(const Obstacle& obstacle, const Eigen::Vector2d& net_force,
                        double dt) {
  const double magnitude = net_force.norm();
  if (magnitude <= obstacle.friction_threshold || magnitude <= 0.0) return obstacle;
  Obstacle moved = obstacle;
  moved.center += obstacle.mobility_gain * (magnitude - obstacle.friction_threshold) * dt *
                  (net_force / magnitude);
  return moved;
}

bool step_inner(WorldState& world, const ArmModel& arm, double dt_inner) {
  const int m = arm.dof();
  const auto joints = forward_kinematics(arm, world.theta);
  const auto contacts = detect_contacts(joints, arm, world.obstacles);
  const auto forces = contact_forces(contacts, world.obstacles);

  // tau = Kj (phi - theta) - Dj theta_dot - sum J^T f
  Eigen::VectorXd tau =
      arm.joint_stiffness.cwiseProduct(world.phi - world.theta) -
      arm.joint_damping.cwiseProduct(world.theta_dot);
  for (size_t i = 0; i < contacts.size(); ++i) {
    const Eigen::Matrix2Xd jac =
        point_jacobian(joints, m, contacts[i].link_index, contacts[i].point);
    tau -= jac.transpose() * forces[i];
  }

  const Eigen::VectorXd inertia = arm.inertia_diagonal();
  world.theta_dot += dt_inner * tau.cwiseQuotient(inertia);
  world.theta += dt_inner * world.theta_dot;

  for (int j = 0; j < m; ++j) {
    if (world.theta[j] < arm.joint_min[j]) {
      world.theta[j] = arm.joint_min[j];
      if (world.theta_dot[j] < 0.0) world.theta_dot[j] = 0.0;
    } else if (world.theta[j] > arm.joint_max[j]) {
      world.theta[j] = arm.joint_max[j];
      if (world.theta_dot[j] > 0.0) world.theta_dot[j] = 0.0;
    }
  }

  // slide movable obstacles under the net force the arm applies to them
  for (int oid = 0; oid < static_cast<int>(world.obstacles.size()); ++oid) {
    if (world.obstacles[oid].kind != ObstacleKind::kMovable) continue;
    Eigen::Vector2d net = Eigen::Vector2d::Zero();
    bool touched = false;
    for (size_t i = 0; i < contacts.size(); ++i) {
      if (contacts[i].obstacle_id == oid) {
        net += forces[i];
        touched = true;
      }
    }
    if (touched) world.obstacles[oid] = update_movable(world.obstacles[oid], net, dt_inner);
  }

  world.time += dt_inner;
  return world.theta.allFinite() && world.theta_dot.allFinite();
}

std::vector<TaxelReading> skin_reading(const WorldState& world, const ArmModel& arm,
                                       double taxel_pitch) {
  const int m = arm.dof();
  const auto joints = forward_kinematics(arm, world.theta);
  const double r = arm.link_radius;

  std::vector<TaxelReading> taxels;
  std::vector<int> link_begin(m + 1, 0);
  for (int link = 0; link < m; ++link) {
    link_begin[link] = static_cast<int>(taxels.size());
    const Eigen::Vector2d& a = joints[link];
    const Eigen::Vector2d& b = joints[link + 1];
    const double length = arm.link_lengths[link];
    const Eigen::Vector2d u = (b - a) / length;
    const Eigen::Vector2d v = perp(u);  // left of the link axis

    const int n_edge = std::max(1, static_cast<int>(std::lround(length / taxel_pitch)));
    for (int edge = 0; edge < 2; ++edge) {
      const Eigen::Vector2d normal = edge == 0 ? v : Eigen::Vector2d(-v);
      for (int k = 0; k < n_edge; ++k) {
        const double s = (k + 0.5) * length / n_edge;
        taxels.push_back({{link, edge, k}, a + s * u + r * normal, normal, 0.0});
      }
    }
    const int n_cap = std::max(1, static_cast<int>(std::lround(kPi * r / taxel_pitch)));
    for (int cap = 0; cap < 2; ++cap) {
      // proximal cap faces backward along -u, distal cap forward along +u
      const Eigen::Vector2d& center = cap == 0 ? a : b;
      const double base = cap == 0 ? 0.5 * kPi : -0.5 * kPi;
      for (int k = 0; k < n_cap; ++k) {
        const double beta = base + (k + 0.5) * kPi / n_cap;
        const Eigen::Vector2d normal(std::cos(beta) * u.x() - std::sin(beta) * u.y(),
                                     std::sin(beta) * u.x() + std::cos(beta) * u.y());
        taxels.push_back({{link, 2 + cap, k}, center + r * normal, normal, 0.0});
      }
    }
  }
  link_begin[m] = static_cast<int>(taxels.size());

  const auto contacts = detect_contacts(joints, arm, world.obstacles);
  const auto forces = contact_forces(contacts, world.obstacles);
  for (size_t i = 0; i < contacts.size(); ++i) {
    const int link = contacts[i].link_index;
    int nearest = link_begin[link];
    double best = (taxels[nearest].center - contacts[i].point).squaredNorm();
    for (int t = link_begin[link] + 1; t < link_begin[link + 1]; ++t) {
      const double d2 = (taxels[t].center - contacts[i].point).squaredNorm();
      if (d2 < best) {
        best = d2;
        nearest = t;
      }
    }
    taxels[nearest].normal_force += forces[i].norm();
  }
  return taxels;
}

OuterStepResult simulate_outer_step(WorldState& world, const ArmModel& arm,
                                    const JointVector& dphi, const SimParams& sim) {
  if (dphi.size() != arm.dof()) throw std::invalid_argument("simulate_outer_step: dphi has wrong length");
  world.phi = (world.phi + dphi).cwiseMax(arm.joint_min).cwiseMin(arm.joint_max);
  OuterStepResult result;
  for (int k = 0; k < sim.inner_substeps; ++k) {
    if (!step_inner(world, arm, sim.dt_inner)) {
      result.ok = false;
      return result;
    }
  }
  result.skin = skin_reading(world, arm, sim.taxel_pitch);
  return result;
}

double mechanical_energy(const WorldState& world, const ArmModel& arm) {
  const Eigen::VectorXd inertia = arm.inertia_diagonal();
  const Eigen::VectorXd deflection = world.phi - world.theta;
  double energy = 0.5 * world.theta_dot.dot(inertia.cwiseProduct(world.theta_dot)) +
                  0.5 * deflection.dot(arm.joint_stiffness.cwiseProduct(deflection));
  const auto contacts = detect_contacts(world, arm);
  for (const RawContact& c : contacts) {
    const double k = world.obstacles[c.obstacle_id].surface_stiffness;
    energy += 0.5 * k * c.penetration_depth * c.penetration_depth;
  }
  return energy;
}

}  // namespace reachmpc
