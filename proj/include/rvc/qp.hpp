#pragma once

#include <Eigen/Dense>

namespace rvc::qp {

/// Dense convex QP:
///   minimize 1/2 x^T Q x + c^T x
///   subject to a_eq x = b_eq, a_in x <= b_in
/// Q must be positive semi-definite; a tiny ridge makes the factorization
/// strictly positive definite internally.
struct QpProblem {
  Eigen::MatrixXd q;
  Eigen::VectorXd c;
  Eigen::MatrixXd a_eq;  // meq x n (may be 0 x n)
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_in;  // m x n
  Eigen::VectorXd b_in;

  int n() const { return static_cast<int>(c.size()); }
  int n_eq() const { return static_cast<int>(b_eq.size()); }
  int n_in() const { return static_cast<int>(b_in.size()); }
  void validate() const;
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double worst() const;
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda_eq;  // multipliers of a_eq x = b_eq
  Eigen::VectorXd lambda_in;  // multipliers of a_in x <= b_in, >= 0
  QpStatus status = QpStatus::Optimal;
  double objective = 0.0;
  int iterations = 0;
  KktResiduals kkt;
  int infeasible_constraint = -1;  // certificate row (eq rows first) on Infeasible
};

struct QpOptions {
  double ridge = 1e-9;      // relative diagonal lift applied to Q
  double tol = 1e-9;        // feasibility tolerance (scaled per row)
  int max_iterations = 0;   // 0 = automatic from problem size
};

/// Goldfarb-Idnani dual active-set method. Deterministic: fixed tie-breaking,
/// no randomization. KKT residuals of the original (un-ridged) problem are
/// reported in the solution.
QpSolution solve_qp(const QpProblem& problem, const QpOptions& opts = {});

}  // namespace rvc::qp
