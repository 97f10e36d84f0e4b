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

#include "reachmpc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace reachmpc {

namespace {

using nlohmann::json;

Eigen::VectorXd to_vector(const json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

json from_vector(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void maybe_vec(const json& j, const char* key, Eigen::VectorXd& out) {
  if (j.contains(key)) out = to_vector(j.at(key));
}

}  // namespace

Config config_from_json_text(const std::string& text) {
  Config config;
  const json j = json::parse(text);

  if (j.contains("arm")) {
    const json& a = j.at("arm");
    const bool damping_given = a.contains("joint_damping");
    maybe_vec(a, "link_lengths", config.arm.link_lengths);
    maybe_vec(a, "joint_min", config.arm.joint_min);
    maybe_vec(a, "joint_max", config.arm.joint_max);
    maybe_vec(a, "joint_stiffness", config.arm.joint_stiffness);
    maybe_vec(a, "link_mass", config.arm.link_mass);
    maybe(a, "link_radius", config.arm.link_radius);
    if (damping_given) {
      config.arm.joint_damping = to_vector(a.at("joint_damping"));
    } else {
      config.arm.joint_damping = config.arm.critical_damping();
    }
  }
  config.arm.validate();

  if (j.contains("world")) {
    const json& w = j.at("world");
    maybe(w, "surface_stiffness", config.world.surface_stiffness);
    maybe(w, "friction_threshold", config.world.friction_threshold);
    maybe(w, "mobility_gain", config.world.mobility_gain);
    maybe(w, "dt_inner", config.world.sim.dt_inner);
    maybe(w, "inner_substeps", config.world.sim.inner_substeps);
    maybe(w, "taxel_pitch", config.world.sim.taxel_pitch);
  }

  if (j.contains("controller")) {
    const json& c = j.at("controller");
    maybe(c, "k_default", config.controller.k_default);
    maybe(c, "k_min", config.controller.k_min);
    maybe(c, "k_max", config.controller.k_max);
    maybe(c, "stiffness_window_min", config.controller.stiffness_window_min);
    maybe(c, "stiffness_window_cap", config.controller.stiffness_window_cap);
    maybe(c, "stiffness_min_spread", config.controller.stiffness_min_spread);
    maybe(c, "f_thresh_default", config.controller.f_thresh_default);
    maybe(c, "f_rate", config.controller.f_rate);
    maybe(c, "f_safety", config.controller.f_safety);
    maybe(c, "d_w", config.controller.d_w);
    maybe(c, "alpha1", config.controller.alpha1);
    maybe(c, "alpha2", config.controller.alpha2);
    maybe(c, "alpha3", config.controller.alpha3);
    maybe(c, "g3_decrease", config.controller.g3_decrease);
    maybe(c, "dphi_bound", config.controller.dphi_bound);
    maybe(c, "activation_force", config.controller.activation_force);
    maybe(c, "pinv_reg", config.controller.pinv_reg);
    maybe(c, "qp_tol", config.controller.qp_tol);
    maybe(c, "qp_max_iter", config.controller.qp_max_iter);
    if (c.contains("fragile_regions")) {
      config.controller.fragile_regions.clear();
      for (const json& region : c.at("fragile_regions")) {
        FragileRegion fr;
        fr.center = {region.at("center")[0].get<double>(), region.at("center")[1].get<double>()};
        fr.radius = region.at("radius").get<double>();
        fr.f_thresh = region.at("f_thresh").get<double>();
        config.controller.fragile_regions.push_back(fr);
      }
    }
  }

  if (j.contains("harness")) {
    const json& h = j.at("harness");
    maybe(h, "success_eps", config.harness.success_eps);
    maybe(h, "stagnation_eps", config.harness.stagnation_eps);
    maybe(h, "stagnation_window", config.harness.stagnation_window);
    maybe(h, "max_duration", config.harness.max_duration);
    maybe(h, "pullout_duration", config.harness.pullout_duration);
    maybe(h, "retry_offset", config.harness.retry_offset);
    maybe(h, "obstacle_radius", config.harness.obstacle_radius);
    if (h.contains("workspace")) {
      const json& ws = h.at("workspace");
      config.harness.workspace = {ws[0].get<double>(), ws[1].get<double>(),
                                  ws[2].get<double>(), ws[3].get<double>()};
    }
    maybe_vec(h, "initial_theta", config.harness.initial_theta);
  }

  if (config.harness.initial_theta.size() != config.arm.dof()) {
    throw std::invalid_argument("initial_theta length does not match the arm");
  }
  return config;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str());
}

std::string config_to_json_text(const Config& config) {
  json j;
  j["arm"] = {{"link_lengths", from_vector(config.arm.link_lengths)},
              {"joint_min", from_vector(config.arm.joint_min)},
              {"joint_max", from_vector(config.arm.joint_max)},
              {"joint_stiffness", from_vector(config.arm.joint_stiffness)},
              {"joint_damping", from_vector(config.arm.joint_damping)},
              {"link_mass", from_vector(config.arm.link_mass)},
              {"link_radius", config.arm.link_radius}};
  j["world"] = {{"surface_stiffness", config.world.surface_stiffness},
                {"friction_threshold", config.world.friction_threshold},
                {"mobility_gain", config.world.mobility_gain},
                {"dt_inner", config.world.sim.dt_inner},
                {"inner_substeps", config.world.sim.inner_substeps},
                {"taxel_pitch", config.world.sim.taxel_pitch}};
  json fragile = json::array();
  for (const FragileRegion& fr : config.controller.fragile_regions) {
    fragile.push_back({{"center", {fr.center.x(), fr.center.y()}},
                       {"radius", fr.radius},
                       {"f_thresh", fr.f_thresh}});
  }
  j["controller"] = {{"k_default", config.controller.k_default},
                     {"k_min", config.controller.k_min},
                     {"k_max", config.controller.k_max},
                     {"stiffness_window_min", config.controller.stiffness_window_min},
                     {"stiffness_window_cap", config.controller.stiffness_window_cap},
                     {"stiffness_min_spread", config.controller.stiffness_min_spread},
                     {"f_thresh_default", config.controller.f_thresh_default},
                     {"f_rate", config.controller.f_rate},
                     {"f_safety", config.controller.f_safety},
                     {"d_w", config.controller.d_w},
                     {"alpha1", config.controller.alpha1},
                     {"alpha2", config.controller.alpha2},
                     {"alpha3", config.controller.alpha3},
                     {"g3_decrease", config.controller.g3_decrease},
                     {"dphi_bound", config.controller.dphi_bound},
                     {"activation_force", config.controller.activation_force},
                     {"pinv_reg", config.controller.pinv_reg},
                     {"qp_tol", config.controller.qp_tol},
                     {"qp_max_iter", config.controller.qp_max_iter},
                     {"fragile_regions", fragile}};
  j["harness"] = {{"success_eps", config.harness.success_eps},
                  {"stagnation_eps", config.harness.stagnation_eps},
                  {"stagnation_window", config.harness.stagnation_window},
                  {"max_duration", config.harness.max_duration},
                  {"pullout_duration", config.harness.pullout_duration},
                  {"retry_offset", config.harness.retry_offset},
                  {"workspace",
                   {config.harness.workspace.x_min, config.harness.workspace.y_min,
                    config.harness.workspace.x_max, config.harness.workspace.y_max}},
                  {"obstacle_radius", config.harness.obstacle_radius},
                  {"initial_theta", from_vector(config.harness.initial_theta)}};
  return j.dump(2);
}

}  // namespace reachmpc
