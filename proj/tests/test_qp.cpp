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

#include "reachmpc/qp.hpp"

#include <doctest.h>

#include "qp_oracle.hpp"
#include "reachmpc/rng.hpp"

using namespace reachmpc;

TEST_CASE("unconstrained minimum is -H^-1 f") {
  qp::Problem<double> p;
  p.H = Eigen::Matrix2d::Identity();
  p.f = Eigen::Vector2d(-2.0, -2.0);
  p.G.resize(0, 2);
  p.h.resize(0);
  const auto sol = qp::solve(p);
  REQUIRE(sol.status == qp::SolveStatus::kOptimal);
  CHECK(sol.x[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(sol.x[1] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(sol.kkt_residual < 1e-8);
}

TEST_CASE("single active constraint: min (x-2)^2 s.t. x <= 1") {
  qp::Problem<double> p;
  p.H.resize(1, 1);
  p.H << 2.0;
  p.f.resize(1);
  p.f << -4.0;
  p.G.resize(1, 1);
  p.G << 1.0;
  p.h.resize(1);
  p.h << 1.0;
  const auto sol = qp::solve(p);
  REQUIRE(sol.status == qp::SolveStatus::kOptimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sol.lambda[0] == doctest::Approx(2.0).epsilon(1e-8));

  SUBCASE("kkt residual at the analytic optimum") {
    Eigen::VectorXd x(1), lambda(1);
    x << 1.0;
    lambda << 2.0;
    CHECK(qp::kkt_residual(p, x, lambda) < 1e-10);
  }
  SUBCASE("kkt residual detects a perturbed point") {
    Eigen::VectorXd x(1), lambda(1);
    x << 1.0 - 1e-3;
    lambda << 2.0;
    CHECK(qp::kkt_residual(p, x, lambda) >= 9e-4);
  }
}

TEST_CASE("200 random instances match the enumeration oracle") {
  CounterRng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(1, 4);
    const int rows = rng.uniform_int(0, 8);
    const auto p = testing::random_feasible_qp(rng, n, rows);
    const auto oracle = testing::enumerate_qp(p);
    REQUIRE(oracle.has_value());  // feasible by construction
    const auto sol = qp::solve(p);
    REQUIRE(sol.status == qp::SolveStatus::kOptimal);
    CHECK(std::abs(sol.objective - oracle->objective) < 1e-6);
    CHECK(sol.kkt_residual <= 1e-6);
    CHECK(qp::kkt_residual(p, oracle->x,
                           // oracle multipliers are implicit; the solver's own
                           // pair must certify the same optimum
                           sol.lambda) < 1e-5);
  }
}

TEST_CASE("infeasible rows are detected via phase 1") {
  qp::Problem<double> p;
  p.H = Eigen::Matrix2d::Identity();
  p.f = Eigen::Vector2d::Zero();
  p.G.resize(2, 2);
  p.G << 1.0, 0.0, -1.0, 0.0;  // x0 <= -1 and x0 >= 1
  p.h.resize(2);
  p.h << -1.0, -1.0;
  const auto sol = qp::solve(p);
  CHECK(sol.status == qp::SolveStatus::kInfeasible);
}

TEST_CASE("scale invariance of the argmin") {
  CounterRng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = testing::random_feasible_qp(rng, 3, 5);
    qp::Problem<double> scaled = p;
    const double c = rng.uniform(1e-2, 1e2);
    scaled.H *= c;
    scaled.f *= c;
    const auto a = qp::solve(p);
    const auto b = qp::solve(scaled);
    REQUIRE(a.status == qp::SolveStatus::kOptimal);
    REQUIRE(b.status == qp::SolveStatus::kOptimal);
    CHECK((a.x - b.x).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("adding a constraint never improves the objective") {
  CounterRng rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = testing::random_feasible_qp(rng, 3, 5);
    auto base = testing::enumerate_qp(p);
    REQUIRE(base.has_value());

    qp::Problem<double> tightened = p;
    tightened.G.conservativeResize(6, 3);
    tightened.h.conservativeResize(6);
    for (int i = 0; i < 3; ++i) tightened.G(5, i) = rng.uniform(-1.0, 1.0);
    // keep the new row satisfiable but possibly active at the old optimum
    tightened.h[5] = tightened.G.row(5).dot(base->x) + rng.uniform(-0.2, 0.5);

    const auto t_oracle = testing::enumerate_qp(tightened);
    const auto t_sol = qp::solve(tightened);
    if (!t_oracle.has_value()) {
      CHECK(t_sol.status == qp::SolveStatus::kInfeasible);
      continue;
    }
    REQUIRE(t_sol.status == qp::SolveStatus::kOptimal);
    CHECK(t_sol.objective >= base->objective - 1e-9);
    CHECK(std::abs(t_sol.objective - t_oracle->objective) < 1e-6);
  }
}

TEST_CASE("identical problems give identical solutions") {
  CounterRng rng(5);
  const auto p = testing::random_feasible_qp(rng, 4, 8);
  const auto a = qp::solve(p);
  const auto b = qp::solve(p);
  CHECK(a.x == b.x);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("iteration cap reports max_iter with a finite iterate") {
  CounterRng rng(77);
  const auto p = testing::random_feasible_qp(rng, 4, 8);
  const auto sol = qp::solve(p, 1e-8, 1);
  CHECK(sol.status == qp::SolveStatus::kMaxIter);
  CHECK(sol.x.allFinite());
}

TEST_CASE("semidefinite H is regularized, not rejected") {
  qp::Problem<double> p;
  p.H = Eigen::Matrix2d::Zero();  // degenerate cost, salvaged by the 1e-9 ridge
  p.f = Eigen::Vector2d(1.0, 0.0);
  p.G.resize(2, 2);
  p.G << -1.0, 0.0, 0.0, -1.0;  // x >= -2
  p.h.resize(2);
  p.h << 2.0, 2.0;
  const auto sol = qp::solve(p);
  REQUIRE(sol.status == qp::SolveStatus::kOptimal);
  CHECK(sol.x[0] == doctest::Approx(-2.0).epsilon(1e-6));
}
