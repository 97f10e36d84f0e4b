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

#ifndef REACHMPC_CONFIG_HPP_
#define REACHMPC_CONFIG_HPP_

#include <string>

#include "reachmpc/arm.hpp"
#include "reachmpc/controller.hpp"
#include "reachmpc/world.hpp"

namespace reachmpc {

/// Axis-aligned sampling rectangle for obstacles and goals.
struct Workspace {
  double x_min = 0.15;
  double y_min = -0.30;
  double x_max = 0.60;
  double y_max = 0.30;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
};

/// Obstacle material defaults applied to generated scenes.
struct WorldParams {
  double surface_stiffness = 5000.0;  // [N/m]
  double friction_threshold = 2.0;    // [N]
  double mobility_gain = 0.05;        // [m/(s N)]
  SimParams sim;
};

/// Supervision and experiment-generation parameters.
struct HarnessParams {
  double success_eps = 0.025;        // [m]
  double stagnation_eps = 0.01;      // [m]
  double stagnation_window = 2.0;    // [s]
  double max_duration = 30.0;        // [s] per reach
  double pullout_duration = 5.0;     // [s]
  double retry_offset = 0.05;        // [m], alternating sides
  Workspace workspace;
  double obstacle_radius = 0.01;     // [m]
  JointVector initial_theta = (Eigen::VectorXd(3) << -1.2, 1.0, 1.0).finished();
};

struct Config {
  ArmModel arm = ArmModel::human_like();
  WorldParams world;
  ControllerParams controller;
  HarnessParams harness;
};

/// Parse a JSON config file with sections arm/world/controller/harness.
/// Missing keys keep their defaults; joint_damping defaults to the
/// near-critical value derived from the (possibly overridden) arm.
Config load_config(const std::string& path);
Config config_from_json_text(const std::string& text);
std::string config_to_json_text(const Config& config);

}  // namespace reachmpc

#endif  // REACHMPC_CONFIG_HPP_
