#include "rvc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rvc/errors.hpp"

namespace rvc::qp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void QpProblem::validate() const {
  const int nn = n();
  if (q.rows() != nn || q.cols() != nn)
    throw InconsistentDimensions("qp: Q must be n x n");
  if ((a_eq.size() > 0 && a_eq.cols() != nn) || a_eq.rows() != b_eq.size())
    throw InconsistentDimensions("qp: equality block shape mismatch");
  if ((a_in.size() > 0 && a_in.cols() != nn) || a_in.rows() != b_in.size())
    throw InconsistentDimensions("qp: inequality block shape mismatch");
  if (nn > 0 &&
      (q - q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + q.cwiseAbs().maxCoeff()))
    throw InconsistentDimensions("qp: Q must be symmetric");
}

double KktResiduals::worst() const {
  return std::max(std::max(stationarity, primal), std::max(dual, complementarity));
}

QpSolution solve_qp(const QpProblem& problem, const QpOptions& opts) {
  problem.validate();
  const int n = problem.n();
  const int meq = problem.n_eq();
  const int mineq = problem.n_in();
  const int m = meq + mineq;

  // constraint normals in ">=" form: equalities as-is, a_in x <= b -> -a x >= -b
  Eigen::MatrixXd cmat(n, m);
  Eigen::VectorXd bvec(m);
  for (int i = 0; i < meq; ++i) {
    cmat.col(i) = problem.a_eq.row(i).transpose();
    bvec(i) = problem.b_eq(i);
  }
  for (int i = 0; i < mineq; ++i) {
    cmat.col(meq + i) = -problem.a_in.row(i).transpose();
    bvec(meq + i) = -problem.b_in(i);
  }

  // ridge-lifted factorization; KKT is reported against the original Q
  const double diag_scale = std::max(1.0, problem.q.diagonal().cwiseAbs().maxCoeff());
  Eigen::MatrixXd g = problem.q;
  g.diagonal().array() += opts.ridge * diag_scale;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    throw ConfigError("qp.q", "quadratic term is not positive semi-definite");

  // J = L^-T, unconstrained minimum x = -G^-1 c
  Eigen::MatrixXd jmat =
      llt.matrixL().transpose().solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd x = llt.solve(-problem.c);

  Eigen::MatrixXd rmat = Eigen::MatrixXd::Zero(n, n);  // active-set triangle
  std::vector<int> active;
  std::vector<double> flip_sign;  // +-1 per active constraint
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  int q_act = 0;

  const int max_iter =
      opts.max_iterations > 0 ? opts.max_iterations : 50 * (n + m + 10);

  QpSolution sol;
  sol.lambda_eq = Eigen::VectorXd::Zero(meq);
  sol.lambda_in = Eigen::VectorXd::Zero(mineq);
  int iter = 0;

  auto residual = [&](int ci) { return cmat.col(ci).dot(x) - bvec(ci); };
  auto row_tol = [&](int ci) { return opts.tol * (1.0 + std::abs(bvec(ci))); };
  auto is_active = [&](int ci) {
    return std::find(active.begin(), active.end(), ci) != active.end();
  };

  auto givens = [](double a, double b, double& cth, double& sth) {
    const double r = std::hypot(a, b);
    if (r <= 0.0) {
      cth = 1.0;
      sth = 0.0;
    } else {
      cth = a / r;
      sth = b / r;
    }
    return r;
  };

  auto add_constraint = [&](Eigen::VectorXd& d, int ci, double sign, double mult) {
    for (int i = n - 1; i > q_act; --i) {
      if (d(i) == 0.0) continue;
      double cth, sth;
      const double r = givens(d(i - 1), d(i), cth, sth);
      d(i - 1) = r;
      d(i) = 0.0;
      for (int k = 0; k < n; ++k) {
        const double t1 = jmat(k, i - 1), t2 = jmat(k, i);
        jmat(k, i - 1) = cth * t1 + sth * t2;
        jmat(k, i) = -sth * t1 + cth * t2;
      }
    }
    rmat.col(q_act).head(q_act + 1) = d.head(q_act + 1);
    active.push_back(ci);
    flip_sign.push_back(sign);
    u(q_act) = mult;
    ++q_act;
  };

  auto drop_constraint = [&](int l) {
    active.erase(active.begin() + l);
    flip_sign.erase(flip_sign.begin() + l);
    for (int j = l; j < q_act - 1; ++j) {
      rmat.col(j) = rmat.col(j + 1);
      u(j) = u(j + 1);
    }
    u(q_act - 1) = 0.0;
    rmat.col(q_act - 1).setZero();
    --q_act;
    // re-triangularize: kill the subdiagonal introduced by the column shift
    for (int j = l; j < q_act; ++j) {
      if (rmat(j + 1, j) == 0.0) continue;
      double cth, sth;
      const double r = givens(rmat(j, j), rmat(j + 1, j), cth, sth);
      rmat(j, j) = r;
      rmat(j + 1, j) = 0.0;
      for (int k = j + 1; k < q_act; ++k) {
        const double t1 = rmat(j, k), t2 = rmat(j + 1, k);
        rmat(j, k) = cth * t1 + sth * t2;
        rmat(j + 1, k) = -sth * t1 + cth * t2;
      }
      for (int k = 0; k < n; ++k) {
        const double t1 = jmat(k, j), t2 = jmat(k, j + 1);
        jmat(k, j) = cth * t1 + sth * t2;
        jmat(k, j + 1) = -sth * t1 + cth * t2;
      }
    }
  };

  while (true) {
    // next violated constraint: equalities first in order, then the most
    // violated inequality (lowest index breaks ties)
    int p = -1;
    double sign = 1.0;
    for (int i = 0; i < meq && p < 0; ++i) {
      if (is_active(i)) continue;
      const double s = residual(i);
      if (std::abs(s) > row_tol(i)) {
        p = i;
        sign = s > 0.0 ? -1.0 : 1.0;
      } else {
        // keep satisfied equalities pinned so later steps respect them
        Eigen::VectorXd d = jmat.transpose() * cmat.col(i);
        add_constraint(d, i, 1.0, 0.0);
      }
    }
    if (p < 0) {
      double worst = 0.0;
      for (int i = meq; i < m; ++i) {
        if (is_active(i)) continue;
        const double s = residual(i);
        const double v = s / (1.0 + std::abs(bvec(i)));
        if (v < -opts.tol && v < worst) {
          worst = v;
          p = i;
        }
      }
      sign = 1.0;
    }
    if (p < 0) {
      sol.status = QpStatus::Optimal;
      break;
    }

    const Eigen::VectorXd nplus = sign * cmat.col(p);
    const double bplus = sign * bvec(p);
    double u_plus = 0.0;
    bool resolved = false;

    while (!resolved) {
      if (++iter > max_iter) {
        sol.status = QpStatus::MaxIterations;
        resolved = true;
        break;
      }
      const Eigen::VectorXd d = jmat.transpose() * nplus;
      const Eigen::VectorXd z = jmat.rightCols(n - q_act) * d.tail(n - q_act);
      Eigen::VectorXd r(q_act);
      if (q_act > 0)
        r = rmat.topLeftCorner(q_act, q_act)
                .triangularView<Eigen::Upper>()
                .solve(d.head(q_act));

      // dual step bound over active inequalities
      double t1 = kInf;
      int l = -1;
      for (int k = 0; k < q_act; ++k) {
        if (active[static_cast<size_t>(k)] < meq) continue;
        if (r(k) > 1e-14) {
          const double tt = std::max(0.0, u(k)) / r(k);
          if (tt < t1) {
            t1 = tt;
            l = k;
          }
        }
      }

      // primal step that brings constraint p onto its boundary
      const double ztn = d.tail(n - q_act).squaredNorm();
      const double s_p = nplus.dot(x) - bplus;
      double t2 = kInf;
      if (ztn > 1e-26 * std::max(1.0, d.squaredNorm())) t2 = -s_p / ztn;

      const double t = std::min(t1, t2);
      if (t == kInf) {
        sol.status = QpStatus::Infeasible;
        sol.infeasible_constraint = p;
        resolved = true;
        break;
      }

      if (t2 == kInf) {
        // pure dual step: move multipliers, drop the blocking constraint
        for (int k = 0; k < q_act; ++k) u(k) -= t * r(k);
        u_plus += t;
        drop_constraint(l);
        continue;
      }

      x += t * z;
      for (int k = 0; k < q_act; ++k) u(k) -= t * r(k);
      u_plus += t;

      if (t2 <= t1) {
        Eigen::VectorXd d2 = jmat.transpose() * nplus;
        add_constraint(d2, p, sign, u_plus);
        resolved = true;
      } else {
        drop_constraint(l);
      }
    }
    if (sol.status != QpStatus::Optimal) break;
  }

  sol.x = x;
  sol.iterations = iter;
  sol.objective = 0.5 * x.dot(problem.q * x) + problem.c.dot(x);

  if (sol.status == QpStatus::Optimal) {
    for (int k = 0; k < q_act; ++k) {
      const int ci = active[static_cast<size_t>(k)];
      if (ci < meq)
        sol.lambda_eq(ci) = -flip_sign[static_cast<size_t>(k)] * u(k);
      else
        sol.lambda_in(ci - meq) = u(k);
    }
    Eigen::VectorXd stat = problem.q * x + problem.c;
    if (mineq > 0) stat += problem.a_in.transpose() * sol.lambda_in;
    if (meq > 0) stat += problem.a_eq.transpose() * sol.lambda_eq;
    const double stat_scale = 1.0 + problem.c.lpNorm<Eigen::Infinity>() +
                              (problem.q * x).lpNorm<Eigen::Infinity>();
    sol.kkt.stationarity = stat.lpNorm<Eigen::Infinity>() / stat_scale;

    double primal = 0.0;
    for (int i = 0; i < meq; ++i)
      primal = std::max(primal, std::abs(problem.a_eq.row(i).dot(x) - problem.b_eq(i)) /
                                    (1.0 + std::abs(problem.b_eq(i))));
    double compl_res = 0.0;
    for (int i = 0; i < mineq; ++i) {
      const double s = problem.a_in.row(i).dot(x) - problem.b_in(i);
      primal = std::max(primal, s / (1.0 + std::abs(problem.b_in(i))));
      compl_res = std::max(compl_res, std::abs(sol.lambda_in(i) * s));
    }
    sol.kkt.primal = primal;
    sol.kkt.dual = mineq > 0 ? std::max(0.0, -sol.lambda_in.minCoeff()) : 0.0;
    sol.kkt.complementarity = compl_res;
  }
  return sol;
}

}  // namespace rvc::qp
