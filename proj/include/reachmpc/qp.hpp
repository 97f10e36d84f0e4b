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

#ifndef REACHMPC_QP_HPP_
#define REACHMPC_QP_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

// Dense convex quadratic programming for small problems:
//
//   minimize   1/2 x^T H x + f^T x
//   subject to G x <= h
//
// H symmetric positive semidefinite (regularized internally when needed).
// Solved with a primal active-set method; a phase-1 subproblem supplies a
// feasible start and detects infeasibility. Sized for n up to ~10 variables
// and a few thousand rows; every factorization is dense.

namespace reachmpc::qp {

enum class SolveStatus { kOptimal, kInfeasible, kMaxIter };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kMaxIter: return "max_iter";
  }
  return "unknown";
}

template <typename Scalar>
struct Problem {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix H;  // n x n, symmetric PSD
  Vector f;  // n
  Matrix G;  // p x n
  Vector h;  // p

  Eigen::Index n_vars() const { return H.rows(); }
  Eigen::Index n_rows() const { return G.rows(); }

  Scalar objective(const Vector& x) const {
    return Scalar(0.5) * x.dot(H * x) + f.dot(x);
  }
};

template <typename Scalar>
struct Solution {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector x;
  Vector lambda;  // one multiplier per inequality row, >= 0 at an optimum
  SolveStatus status = SolveStatus::kMaxIter;
  Scalar objective = Scalar(0);
  Scalar kkt_residual = std::numeric_limits<Scalar>::infinity();
  int iterations = 0;
  int active_count = 0;
};

/// Max over the four KKT error magnitudes: stationarity ||Hx + f + G^T l||_inf,
/// primal violation max(Gx - h, 0), dual violation max(-l, 0), and
/// complementarity |l_i (G_i x - h_i)|.
template <typename Scalar>
Scalar kkt_residual(const Problem<Scalar>& p,
                    const typename Problem<Scalar>::Vector& x,
                    const typename Problem<Scalar>::Vector& lambda) {
  using Vector = typename Problem<Scalar>::Vector;
  Scalar r = (p.H * x + p.f + p.G.transpose() * lambda).template lpNorm<Eigen::Infinity>();
  if (p.n_rows() > 0) {
    const Vector slack = p.G * x - p.h;  // <= 0 when feasible
    r = std::max(r, slack.maxCoeff());
    r = std::max(r, -lambda.minCoeff());
    r = std::max(r, (lambda.array() * slack.array()).abs().maxCoeff());
  }
  return std::max(r, Scalar(0));
}

namespace detail {

// Equality-constrained step: minimize 1/2 p^T H p + g^T p with A p = 0 for the
// working-set rows A. Returns false when the KKT system is numerically
// singular (dependent working set), which the caller treats as a fault.
template <typename Scalar>
bool eqp_step(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& H,
              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& g,
              const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& G,
              const std::vector<int>& working,
              Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& step,
              Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& nu) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = H.rows();
  const Eigen::Index w = static_cast<Eigen::Index>(working.size());
  if (w == 0) {
    step = H.llt().solve(-g);
    nu.resize(0);
    return step.allFinite();
  }
  Matrix kkt = Matrix::Zero(n + w, n + w);
  kkt.topLeftCorner(n, n) = H;
  for (Eigen::Index k = 0; k < w; ++k) {
    kkt.block(n + k, 0, 1, n) = G.row(working[static_cast<size_t>(k)]);
    kkt.block(0, n + k, n, 1) = G.row(working[static_cast<size_t>(k)]).transpose();
  }
  Vector rhs = Vector::Zero(n + w);
  rhs.head(n) = -g;
  Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) return false;
  const Vector sol = lu.solve(rhs);
  step = sol.head(n);
  nu = sol.tail(w);
  return sol.allFinite();
}

// Primal active-set loop from a feasible x0. Requires H strictly convex.
template <typename Scalar>
Solution<Scalar> active_set(const Problem<Scalar>& p,
                            const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& H,
                            Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x,
                            Scalar tol, int max_iter) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = p.n_vars();
  const Eigen::Index rows = p.n_rows();

  Solution<Scalar> sol;
  std::vector<int> working;
  Vector step(n), nu;

  for (int iter = 0; iter < max_iter; ++iter) {
    sol.iterations = iter + 1;
    const Vector grad = H * x + p.f;
    if (!eqp_step<Scalar>(H, grad, p.G, working, step, nu)) {
      // dependent working set; drop the most recent addition and retry
      if (working.empty()) break;
      working.pop_back();
      continue;
    }

    const Scalar step_scale = Scalar(1) + x.template lpNorm<Eigen::Infinity>();
    if (step.template lpNorm<Eigen::Infinity>() <= tol * step_scale) {
      // stationary on the working set; check the multiplier signs
      int drop = -1;
      Scalar most_negative = -tol;
      for (size_t k = 0; k < working.size(); ++k) {
        if (nu[static_cast<Eigen::Index>(k)] < most_negative) {
          most_negative = nu[static_cast<Eigen::Index>(k)];
          drop = static_cast<int>(k);
        }
      }
      if (drop < 0) {
        sol.x = x;
        sol.lambda = Vector::Zero(rows);
        for (size_t k = 0; k < working.size(); ++k) {
          sol.lambda[working[k]] = nu[static_cast<Eigen::Index>(k)];
        }
        sol.status = SolveStatus::kOptimal;
        sol.active_count = static_cast<int>(working.size());
        return sol;
      }
      working.erase(working.begin() + drop);
      continue;
    }

    // ratio test against rows not in the working set
    Scalar alpha = Scalar(1);
    int blocking = -1;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (std::find(working.begin(), working.end(), static_cast<int>(i)) != working.end()) continue;
      const Scalar dir = p.G.row(i).dot(step);
      if (dir <= tol) continue;
      const Scalar gap = std::max(p.h[i] - p.G.row(i).dot(x), Scalar(0));
      const Scalar a = gap / dir;
      if (a < alpha) {
        alpha = a;
        blocking = static_cast<int>(i);
      }
    }
    x += alpha * step;
    if (blocking >= 0) working.push_back(blocking);
  }

  sol.x = x;
  sol.lambda = Vector::Zero(rows);
  sol.status = SolveStatus::kMaxIter;
  sol.active_count = static_cast<int>(working.size());
  return sol;
}

}  // namespace detail

/// Solve the QP. `status == kOptimal` guarantees primal feasibility within
/// tol, nonnegative multipliers, and stationarity/complementarity residuals
/// within tol (reported in `kkt_residual`). Infeasible problems come back as
/// kInfeasible with the phase-1 minimizer in `x`.
template <typename Scalar>
Solution<Scalar> solve(const Problem<Scalar>& p, Scalar tol = Scalar(1e-8),
                       int max_iter = 200) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = p.n_vars();
  const Eigen::Index rows = p.n_rows();

  // Symmetrize, then push the spectrum to >= 1e-9 so the active-set core
  // always works with a strictly convex cost.
  Matrix H = Scalar(0.5) * (p.H + p.H.transpose());
  {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
    const Scalar lambda_min = eig.eigenvalues().minCoeff();
    const Scalar floor = Scalar(1e-9);
    if (lambda_min < floor) H += (floor - lambda_min) * Matrix::Identity(n, n);
  }

  const Scalar feas_tol = tol * (Scalar(1) + (rows > 0 ? p.h.template lpNorm<Eigen::Infinity>() : Scalar(0)));
  auto feasible = [&](const Vector& x) {
    return rows == 0 || ((p.G * x - p.h).maxCoeff() <= feas_tol);
  };

  // Feasible start: try the origin and the unconstrained minimum before
  // paying for phase 1.
  Vector x0 = Vector::Zero(n);
  bool have_start = feasible(x0);
  if (!have_start) {
    const Vector x_uc = H.llt().solve(-p.f);
    if (x_uc.allFinite() && feasible(x_uc)) {
      x0 = x_uc;
      have_start = true;
    }
  }
  if (!have_start) {
    // phase 1: minimize 1/2 mu ||x||^2 + 1/2 s^2 + s  s.t.  Gx - s <= h.
    // The linear term drives s negative for feasible problems, so the
    // handoff point is strictly feasible; infeasible problems still end at
    // s = smallest achievable violation > 0.
    Problem<Scalar> ph;
    const Scalar mu = Scalar(1e-9);
    ph.H = Matrix::Zero(n + 1, n + 1);
    ph.H.topLeftCorner(n, n) = mu * Matrix::Identity(n, n);
    ph.H(n, n) = Scalar(1);
    ph.f = Vector::Zero(n + 1);
    ph.f[n] = Scalar(1);
    ph.G = Matrix::Zero(rows, n + 1);
    ph.G.leftCols(n) = p.G;
    ph.G.col(n).setConstant(Scalar(-1));
    ph.h = p.h;
    Vector y0 = Vector::Zero(n + 1);
    y0[n] = std::max(Scalar(0), (p.G * Vector::Zero(n) - p.h).maxCoeff()) + Scalar(1);
    Solution<Scalar> ph_sol = detail::active_set<Scalar>(ph, ph.H, y0, tol, max_iter);
    const Scalar violation = ph_sol.x[n];
    if (ph_sol.status != SolveStatus::kOptimal || violation > Scalar(10) * feas_tol) {
      Solution<Scalar> sol;
      sol.x = ph_sol.x.head(n);
      sol.lambda = Vector::Zero(rows);
      // an unfinished phase 1 proves nothing; only a converged one certifies
      sol.status = ph_sol.status == SolveStatus::kOptimal ? SolveStatus::kInfeasible
                                                          : SolveStatus::kMaxIter;
      sol.objective = p.objective(sol.x);
      sol.iterations = ph_sol.iterations;
      return sol;
    }
    x0 = ph_sol.x.head(n);
  }

  Solution<Scalar> sol = detail::active_set<Scalar>(p, H, x0, tol, max_iter);
  sol.objective = p.objective(sol.x);
  sol.kkt_residual = kkt_residual(p, sol.x, sol.lambda);
  return sol;
}

}  // namespace reachmpc::qp

#endif  // REACHMPC_QP_HPP_
