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

#ifndef REACHMPC_TESTS_QP_ORACLE_HPP_
#define REACHMPC_TESTS_QP_ORACLE_HPP_

#include <Eigen/Dense>
#include <optional>

#include "reachmpc/qp.hpp"
#include "reachmpc/rng.hpp"

// Test-only oracle, independent of the active-set solver: enumerate every
// subset of constraints, solve the equality-constrained KKT system with the
// subset tight, and keep the best feasible candidate. Exponential in the row
// count, which is fine for p <= 8.

namespace reachmpc::testing {

struct OracleResult {
  Eigen::VectorXd x;
  double objective = 0.0;
};

inline std::optional<OracleResult> enumerate_qp(const qp::Problem<double>& p,
                                                double feas_tol = 1e-9) {
  const Eigen::Index n = p.n_vars();
  const Eigen::Index rows = p.n_rows();
  std::optional<OracleResult> best;

  for (std::uint32_t mask = 0; mask < (1u << rows); ++mask) {
    std::vector<int> subset;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (mask & (1u << i)) subset.push_back(static_cast<int>(i));
    }
    if (static_cast<Eigen::Index>(subset.size()) > n) continue;

    const Eigen::Index w = static_cast<Eigen::Index>(subset.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + w, n + w);
    kkt.topLeftCorner(n, n) = p.H;
    Eigen::VectorXd rhs(n + w);
    rhs.head(n) = -p.f;
    for (Eigen::Index k = 0; k < w; ++k) {
      kkt.block(n + k, 0, 1, n) = p.G.row(subset[static_cast<size_t>(k)]);
      kkt.block(0, n + k, n, 1) = p.G.row(subset[static_cast<size_t>(k)]).transpose();
      rhs[n + k] = p.h[subset[static_cast<size_t>(k)]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    if (rows > 0 && (p.G * x - p.h).maxCoeff() > feas_tol) continue;
    const double obj = p.objective(x);
    if (!best || obj < best->objective) best = OracleResult{x, obj};
  }
  return best;
}

/// Random strictly convex, feasible-by-construction instance.
inline qp::Problem<double> random_feasible_qp(CounterRng& rng, int n, int rows) {
  qp::Problem<double> p;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
  p.H = a.transpose() * a + 0.2 * Eigen::MatrixXd::Identity(n, n);
  p.f.resize(n);
  for (int i = 0; i < n; ++i) p.f[i] = rng.uniform(-2.0, 2.0);
  p.G.resize(rows, n);
  p.h.resize(rows);
  Eigen::VectorXd x_feas(n);
  for (int i = 0; i < n; ++i) x_feas[i] = rng.uniform(-1.0, 1.0);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < n; ++i) p.G(r, i) = rng.uniform(-1.0, 1.0);
    p.h[r] = p.G.row(r).dot(x_feas) + rng.uniform(0.0, 1.0);
  }
  return p;
}

}  // namespace reachmpc::testing

#endif  // REACHMPC_TESTS_QP_ORACLE_HPP_
