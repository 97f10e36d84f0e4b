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

#include <doctest.h>

#include <cmath>

#include "reachmpc/rng.hpp"

using namespace reachmpc;

namespace {

// Independent oracle: chain of 3x3 homogeneous transforms
// T_i = Rot(q_i) * Trans(L_i, 0), accumulated from the base.
std::vector<Eigen::Vector2d> fk_transform_chain(const ArmModel& arm,
                                                const JointVector& q) {
  std::vector<Eigen::Vector2d> points;
  Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
  points.emplace_back(T(0, 2), T(1, 2));
  for (int i = 0; i < arm.dof(); ++i) {
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    rot(0, 0) = std::cos(q[i]);
    rot(0, 1) = -std::sin(q[i]);
    rot(1, 0) = std::sin(q[i]);
    rot(1, 1) = std::cos(q[i]);
    Eigen::Matrix3d trans = Eigen::Matrix3d::Identity();
    trans(0, 2) = arm.link_lengths[i];
    T = T * rot * trans;
    points.emplace_back(T(0, 2), T(1, 2));
  }
  return points;
}

// World position of a material point given in link-local coordinates
// (s along the axis from the proximal joint, d across it).
Eigen::Vector2d material_point(const ArmModel& arm, const JointVector& q,
                               int link, double s, double d) {
  double angle = 0.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  for (int i = 0; i < link; ++i) {
    angle += q[i];
    origin += arm.link_lengths[i] * Eigen::Vector2d(std::cos(angle), std::sin(angle));
  }
  angle += q[link];
  const Eigen::Vector2d u(std::cos(angle), std::sin(angle));
  const Eigen::Vector2d v(-u.y(), u.x());
  return origin + s * u + d * v;
}

// Central finite differences of the material point w.r.t. each joint.
Eigen::Matrix2Xd jacobian_fd(const ArmModel& arm, const JointVector& q, int link,
                             double s, double d, double h) {
  Eigen::Matrix2Xd jac(2, arm.dof());
  for (int j = 0; j < arm.dof(); ++j) {
    JointVector qp = q, qm = q;
    qp[j] += h;
    qm[j] -= h;
    jac.col(j) = (material_point(arm, qp, link, s, d) -
                  material_point(arm, qm, link, s, d)) /
                 (2.0 * h);
  }
  return jac;
}

JointVector random_q(const ArmModel& arm, CounterRng& rng) {
  JointVector q(arm.dof());
  for (int i = 0; i < arm.dof(); ++i) q[i] = rng.uniform(arm.joint_min[i], arm.joint_max[i]);
  return q;
}

}  // namespace

TEST_CASE("forward kinematics at simple configurations") {
  const ArmModel arm = ArmModel::human_like();
  const auto straight = forward_kinematics(arm, Eigen::Vector3d(0, 0, 0));
  REQUIRE(straight.size() == 4);
  CHECK(straight[0].norm() == 0.0);
  CHECK(straight.back().x() == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(straight.back().y() == doctest::Approx(0.0).epsilon(1e-12));

  const auto rotated = forward_kinematics(arm, Eigen::Vector3d(M_PI_2, 0, 0));
  CHECK(rotated.back().x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rotated.back().y() == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("forward kinematics matches the transform-chain oracle") {
  const ArmModel arm = ArmModel::human_like();
  CounterRng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const JointVector q = random_q(arm, rng);
    const auto got = forward_kinematics(arm, q);
    const auto expected = fk_transform_chain(arm, q);
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK((got[i] - expected[i]).norm() < 1e-12);
    }
  }
}

TEST_CASE("forward kinematics rejects wrong dimensions") {
  const ArmModel arm = ArmModel::human_like();
  CHECK_THROWS_AS(forward_kinematics(arm, Eigen::Vector2d(0, 0)), std::invalid_argument);
  CHECK_THROWS_AS(point_jacobian(arm, Eigen::Vector3d(0, 0, 0), 5, {0.1, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("end-effector jacobian at the zero configuration") {
  const ArmModel arm = ArmModel::human_like();
  const Eigen::Matrix2Xd jac = ee_jacobian(arm, Eigen::Vector3d(0, 0, 0));
  // lever arms along the x axis: columns are (0, distance to EE)
  CHECK(jac(0, 0) == doctest::Approx(0.0));
  CHECK(jac(1, 0) == doctest::Approx(0.8));
  CHECK(jac(1, 1) == doctest::Approx(0.5));
  CHECK(jac(1, 2) == doctest::Approx(0.2));
  CHECK(jac(0, 1) == doctest::Approx(0.0));
  CHECK(jac(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("point jacobian: distal columns are exactly zero") {
  const ArmModel arm = ArmModel::human_like();
  CounterRng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const JointVector q = random_q(arm, rng);
    const Eigen::Vector2d p = material_point(arm, q, 1, rng.uniform(0.0, 0.3),
                                             arm.link_radius);
    const Eigen::Matrix2Xd jac = point_jacobian(arm, q, 1, p);
    CHECK(jac.col(2).norm() == 0.0);
  }
}

TEST_CASE("point jacobian matches central finite differences") {
  const ArmModel arm = ArmModel::human_like();
  CounterRng rng(11);
  const double h = 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    const JointVector q = random_q(arm, rng);
    const int link = rng.uniform_int(0, arm.dof() - 1);
    const double s = rng.uniform(0.0, arm.link_lengths[link]);
    const double d = rng.uniform(-arm.link_radius, arm.link_radius);
    const Eigen::Vector2d p = material_point(arm, q, link, s, d);
    const Eigen::Matrix2Xd analytic = point_jacobian(arm, q, link, p);
    const Eigen::Matrix2Xd fd = jacobian_fd(arm, q, link, s, d, h);
    CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("ee jacobian equals point jacobian at the end effector") {
  const ArmModel arm = ArmModel::human_like();
  CounterRng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const JointVector q = random_q(arm, rng);
    const auto points = forward_kinematics(arm, q);
    const Eigen::Matrix2Xd a = ee_jacobian(arm, q);
    const Eigen::Matrix2Xd b = point_jacobian(arm, q, arm.dof() - 1, points.back());
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("jacobian-kinematics consistency: quadratic error decay") {
  const ArmModel arm = ArmModel::human_like();
  CounterRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const JointVector q = random_q(arm, rng);
    JointVector dq(arm.dof());
    for (int i = 0; i < arm.dof(); ++i) dq[i] = rng.uniform(-1.0, 1.0);
    dq *= 1e-2 / dq.norm();
    const Eigen::Matrix2Xd jac = ee_jacobian(arm, q);
    const Eigen::Vector2d ee = forward_kinematics(arm, q).back();

    auto err = [&](const JointVector& step) {
      return (forward_kinematics(arm, q + step).back() - ee - jac * step).norm();
    };
    const double e1 = err(dq);
    const double e2 = err(0.5 * dq);
    if (e1 > 1e-12) CHECK(e1 / e2 > 3.0);  // ~4 for a second-order remainder
  }
}

TEST_CASE("joint limit margins") {
  const ArmModel arm = ArmModel::human_like();

  SUBCASE("midpoint symmetry") {
    const JointVector mid = 0.5 * (arm.joint_min + arm.joint_max);
    const auto [lo, hi] = joint_limit_margins(arm, mid);
    CHECK((lo + hi).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("at the upper limit") {
    const auto [lo, hi] = joint_limit_margins(arm, arm.joint_max);
    CHECK(hi.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("direct subtraction") {
    ArmModel unit = arm;
    unit.joint_min = Eigen::Vector3d(-1, -1, -1);
    unit.joint_max = Eigen::Vector3d(1, 1, 1);
    const auto [lo, hi] = joint_limit_margins(unit, Eigen::Vector3d(0.1, 0.1, 0.1));
    for (int i = 0; i < 3; ++i) {
      CHECK(lo[i] == doctest::Approx(-1.1));
      CHECK(hi[i] == doctest::Approx(0.9));
    }
  }
}

TEST_CASE("default damping is the near-critical value") {
  const ArmModel arm = ArmModel::human_like();
  const Eigen::VectorXd inertia = arm.inertia_diagonal();
  for (int i = 0; i < arm.dof(); ++i) {
    CHECK(arm.joint_damping[i] ==
          doctest::Approx(2.0 * std::sqrt(arm.joint_stiffness[i] * inertia[i])));
  }
  CHECK_NOTHROW(arm.validate());
}
