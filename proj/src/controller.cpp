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

#include "reachmpc/controller.hpp"

#include <algorithm>
#include <cmath>

namespace reachmpc {

Eigen::Vector2d desired_delta_x(const Eigen::Vector2d& x_h, const Eigen::Vector2d& x_g,
                                double d_w) {
  const Eigen::Vector2d to_goal = x_g - x_h;
  const double dist = to_goal.norm();
  if (dist <= d_w) return to_goal;
  return (d_w / dist) * to_goal;
}

Eigen::MatrixXd assemble_model(const ArmModel& arm,
                               const std::vector<ContactRecord>& contacts) {
  const int m = arm.dof();
  const Eigen::MatrixXd stiffness = arm.joint_stiffness.asDiagonal();
  Eigen::MatrixXd system = stiffness;
  for (const ContactRecord& c : contacts) {
    // K_ci = k n n^T: stiffness along the surface normal only
    const Eigen::RowVectorXd normal_jac = c.outward_normal.transpose() * c.jacobian;
    system.noalias() += c.stiffness * normal_jac.transpose() * normal_jac;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) throw SolverFault("contact model not positive definite");
  Eigen::MatrixXd model = llt.solve(stiffness);
  model += llt.solve(stiffness - system * model);  // one refinement pass
  if (!model.allFinite()) throw SolverFault("contact model solve produced non-finite values");
  return model;
}

PredictionMaps predicted_quantities(const Eigen::MatrixXd& model,
                                    const ArmModel& arm, const JointVector& theta,
                                    const std::vector<ContactRecord>& contacts) {
  PredictionMaps maps;
  maps.dtheta = model;
  maps.ee = ee_jacobian(arm, theta) * model;
  maps.contact_force.resize(static_cast<Eigen::Index>(contacts.size()), arm.dof());
  for (size_t i = 0; i < contacts.size(); ++i) {
    const ContactRecord& c = contacts[i];
    maps.contact_force.row(static_cast<Eigen::Index>(i)) =
        c.stiffness * c.outward_normal.transpose() * c.jacobian * model;
  }
  return maps;
}

double threshold_for_location(const ControllerParams& params,
                              const Eigen::Vector2d& location) {
  for (const FragileRegion& region : params.fragile_regions) {
    if ((location - region.center).norm() <= region.radius) return region.f_thresh;
  }
  return params.f_thresh_default;
}

qp::Problem<double> build_qp(const JointVector& theta, const JointVector& phi,
                             const Eigen::Vector2d& x_h,
                             const std::vector<ContactRecord>& contacts,
                             const ControllerParams& params, const ArmModel& arm,
                             double rate_scale) {
  const int m = arm.dof();
  const int nc = static_cast<int>(contacts.size());
  const Eigen::MatrixXd model = assemble_model(arm, contacts);
  const PredictionMaps maps = predicted_quantities(model, arm, theta, contacts);
  const Eigen::Vector2d dx_d = desired_delta_x(x_h, params.goal, params.d_w);

  qp::Problem<double> qp;
  // g1 with the same Tikhonov term as the baseline pseudoinverse, so the two
  // controllers coincide exactly in free space
  qp.H = 2.0 * params.alpha1 *
         (maps.ee.transpose() * maps.ee +
          params.pinv_reg * Eigen::MatrixXd::Identity(m, m));
  qp.f = -2.0 * params.alpha1 * maps.ee.transpose() * dx_d;
  if (params.alpha2 > 0.0) {
    // g2 = ||dtau||^2 = dphi^T Kj^T Kj dphi, diagonal since Kj is
    for (int j = 0; j < m; ++j) {
      qp.H(j, j) += 2.0 * params.alpha2 * arm.joint_stiffness[j] * arm.joint_stiffness[j];
    }
  }

  const auto [margin_min, margin_max] = joint_limit_margins(arm, theta);

  const int rows = 2 * m        // joint limits through the model
                   + 2 * nc     // force change bounds per contact
                   + 2 * m      // per-step dphi bounds
                   + 2 * m;     // virtual trajectory within joint limits
  qp.G = Eigen::MatrixXd::Zero(rows, m);
  qp.h = Eigen::VectorXd::Zero(rows);
  int r = 0;

  // (a) predicted joint angles stay within the physical limits
  qp.G.block(r, 0, m, m) = maps.dtheta;
  qp.h.segment(r, m) = margin_max;
  r += m;
  qp.G.block(r, 0, m, m) = -maps.dtheta;
  qp.h.segment(r, m) = -margin_min;
  r += m;

  // (b)/(c) per-contact predicted normal-force change
  for (int i = 0; i < nc; ++i) {
    const ContactRecord& c = contacts[static_cast<size_t>(i)];
    const double f_thresh = threshold_for_location(params, c.location);
    const double rate = rate_scale * params.f_rate;
    double upper;
    if (c.normal_force > f_thresh) {
      upper = 0.0;  // prevent any predicted increase
      // g3: pull the force down by a fixed amount per step
      const double desired_drop = -params.g3_decrease;
      qp.H.noalias() += 2.0 * params.alpha3 * maps.contact_force.row(i).transpose() *
                        maps.contact_force.row(i);
      qp.f.noalias() -= 2.0 * params.alpha3 * desired_drop *
                        maps.contact_force.row(i).transpose();
    } else {
      upper = std::min(rate, f_thresh - c.normal_force);
    }
    qp.G.row(r) = maps.contact_force.row(i);
    qp.h[r] = upper;
    ++r;
    qp.G.row(r) = -maps.contact_force.row(i);
    qp.h[r] = rate;
    ++r;
  }

  // (d) per-step bounds on the optimization variable
  qp.G.block(r, 0, m, m) = Eigen::MatrixXd::Identity(m, m);
  qp.h.segment(r, m).setConstant(params.dphi_bound);
  r += m;
  qp.G.block(r, 0, m, m) = -Eigen::MatrixXd::Identity(m, m);
  qp.h.segment(r, m).setConstant(params.dphi_bound);
  r += m;

  // (e) the virtual trajectory itself stays within the joint limits
  qp.G.block(r, 0, m, m) = Eigen::MatrixXd::Identity(m, m);
  qp.h.segment(r, m) = arm.joint_max - phi;
  r += m;
  qp.G.block(r, 0, m, m) = -Eigen::MatrixXd::Identity(m, m);
  qp.h.segment(r, m) = phi - arm.joint_min;

  return qp;
}

double estimate_stiffness(const std::vector<std::pair<double, double>>& samples,
                          double fallback, double k_min, double k_max,
                          int min_samples, double min_spread) {
  if (static_cast<int>(samples.size()) < min_samples) return fallback;
  double lo = samples.front().first;
  double hi = lo;
  for (const auto& [d, f] : samples) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (hi - lo <= min_spread) return fallback;

  const double n = static_cast<double>(samples.size());
  double mean_d = 0.0, mean_f = 0.0;
  for (const auto& [d, f] : samples) {
    mean_d += d;
    mean_f += f;
  }
  mean_d /= n;
  mean_f /= n;
  double cov = 0.0, var = 0.0;
  for (const auto& [d, f] : samples) {
    cov += (d - mean_d) * (f - mean_f);
    var += (d - mean_d) * (d - mean_d);
  }
  return std::clamp(cov / var, k_min, k_max);
}

MpcController::MpcController(ArmModel arm, ControllerParams params)
    : arm_(std::move(arm)), params_(std::move(params)) {
  arm_.validate();
}

StepDecision MpcController::halt(HaltReason reason) {
  latched_ = reason;
  StepDecision d;
  d.halted = true;
  d.reason = reason;
  return d;
}

void MpcController::update_tracks(const std::vector<const TaxelReading*>& active) {
  std::map<TaxelId, ContactTrack> next;
  for (const TaxelReading* taxel : active) {
    ContactTrack track;
    auto it = tracks_.find(taxel->id);
    if (it != tracks_.end()) {
      track = std::move(it->second);
      track.cum_displacement += (taxel->center - track.last_center).dot(taxel->outward_normal);
    } else {
      track.stiffness = params_.k_default;
    }
    track.last_center = taxel->center;
    track.samples.emplace_back(track.cum_displacement, taxel->normal_force);
    if (static_cast<int>(track.samples.size()) > params_.stiffness_window_cap) {
      track.samples.erase(track.samples.begin());
    }
    track.stiffness = estimate_stiffness(track.samples, track.stiffness, params_.k_min,
                                         params_.k_max, params_.stiffness_window_min,
                                         params_.stiffness_min_spread);
    next.emplace(taxel->id, std::move(track));
  }
  tracks_ = std::move(next);  // taxels that broke contact lose their history
}

std::optional<double> MpcController::tracked_stiffness(const TaxelId& id) const {
  auto it = tracks_.find(id);
  if (it == tracks_.end()) return std::nullopt;
  return it->second.stiffness;
}

StepDecision MpcController::step(const JointVector& theta, const JointVector& phi,
                                 const std::vector<TaxelReading>& skin) {
  if (latched_) {
    StepDecision d;
    d.halted = true;
    d.reason = *latched_;
    return d;
  }

  std::vector<const TaxelReading*> active;
  for (const TaxelReading& t : skin) {
    if (t.normal_force > params_.f_safety) return halt(HaltReason::kSafety);
    if (t.normal_force > params_.activation_force) active.push_back(&t);
  }
  update_tracks(active);

  const int m = arm_.dof();
  const auto joints = forward_kinematics(arm_, theta);
  std::vector<ContactRecord> contacts;
  contacts.reserve(active.size());
  for (const TaxelReading* taxel : active) {
    ContactRecord c;
    c.taxel = taxel->id;
    c.location = taxel->center;
    c.outward_normal = taxel->outward_normal;
    c.normal_force = taxel->normal_force;
    c.jacobian = point_jacobian(joints, m, taxel->id.link, taxel->center);
    c.stiffness = tracks_.at(taxel->id).stiffness;
    contacts.push_back(std::move(c));
  }

  StepDecision decision;
  decision.stats.n_contacts = static_cast<int>(contacts.size());
  try {
    qp::Problem<double> problem =
        build_qp(theta, phi, joints.back(), contacts, params_, arm_);
    qp::Solution<double> sol = qp::solve(problem, params_.qp_tol, params_.qp_max_iter);
    if (sol.status != qp::SolveStatus::kOptimal) {
      // relax the force-rate rows once, then fall back to standing still
      decision.stats.rate_relaxed = true;
      problem = build_qp(theta, phi, joints.back(), contacts, params_, arm_, 2.0);
      sol = qp::solve(problem, params_.qp_tol, params_.qp_max_iter);
    }
    if (sol.status == qp::SolveStatus::kOptimal) {
      decision.dphi =
          sol.x.cwiseMax(-params_.dphi_bound).cwiseMin(params_.dphi_bound);
      decision.stats.max_violation =
          problem.n_rows() > 0 ? (problem.G * sol.x - problem.h).maxCoeff() : 0.0;
    } else {
      decision.dphi = JointVector::Zero(m);
      decision.stats.fallback_zero = true;
    }
    decision.stats.status = sol.status;
    decision.stats.active_count = sol.active_count;
    decision.stats.objective = sol.objective;
    decision.stats.kkt_residual = sol.kkt_residual;
    if (!decision.dphi.allFinite()) throw SolverFault("non-finite control step");
  } catch (const SolverFault&) {
    return halt(HaltReason::kSolverFault);
  }
  return decision;
}

}  // namespace reachmpc
