#include "rvc/control.hpp"

#include <cmath>
#include <string>

#include "rvc/errors.hpp"

namespace rvc::ctrl {

double PvPlantConfig::zeta() const {
  return std::sqrt((1.0 - pf_min * pf_min) / (pf_min * pf_min));
}

void PvPlantConfig::validate() const {
  if (!(pf_min > 0.0) || pf_min > 1.0)
    throw ConfigError("plant.pf_min", "must be in (0, 1]");
  if (s_max_va <= 0.0) throw ConfigError("plant.s_max_va", "must be > 0");
}

void RobustControlProblem::validate(const std::vector<PvPlantConfig>& plants) const {
  const int n = n_nodes();
  const int np = n_plants();
  if (static_cast<int>(plants.size()) != np)
    throw InconsistentDimensions("control: plants size != plant_col size");
  if (static_cast<int>(estimates.size()) != n)
    throw MissingEstimate("control: need one sensitivity estimate per node");
  for (const auto& e : estimates) {
    if (e.kp_hat.size() != n || e.kq_hat.size() != n || e.dkp.size() != n ||
        e.dkq.size() != n)
      throw InconsistentDimensions("control: estimate column count != n_nodes");
    if (e.dkp.minCoeff() < 0.0 || e.dkq.minCoeff() < 0.0)
      throw InconsistentDimensions("control: negative interval half-width");
  }
  if (p_meas_w.size() != np || q_meas_var.size() != np || mpp_w.size() != np)
    throw InconsistentDimensions("control: per-plant vectors must have n_plants entries");
  if (mpp_w.minCoeff() < 0.0) throw ConfigError("control.mpp", "must be >= 0");
  if (!(v_min < v_max)) throw ConfigError("control.v_bounds", "need v_min < v_max");
  if (xi.size() != n) throw InconsistentDimensions("control: xi must have n_nodes entries");
  for (int i = 0; i < n; ++i)
    if (xi(i) < 0.0 || xi(i) > np)
      throw ConfigError("control.xi", "budget must lie in [0, n_plants]");
  for (int c : plant_col)
    if (c < 0 || c >= n) throw InconsistentDimensions("control: plant_col out of range");
  for (const auto& pl : plants) pl.validate();
  if (polygon_segments < 4)
    throw ConfigError("control.polygon_segments", "need at least 4 segments");
}

std::pair<qp::QpProblem, RobustQpLayout> build_robust_qp(
    const RobustControlProblem& problem, const std::vector<PvPlantConfig>& plants,
    double s_base_va) {
  problem.validate(plants);
  if (s_base_va <= 0.0) throw ConfigError("control.s_base_va", "must be > 0");

  const int np = problem.n_plants();
  const int n = problem.n_nodes();
  const bool split = problem.formulation == RobustFormulation::SplitBudget;

  RobustQpLayout lay;
  lay.n_plants = np;
  lay.n_nodes = n;
  lay.p0 = 0;
  lay.q0 = np;
  lay.yp0 = 2 * np;
  lay.yq0 = 3 * np;
  lay.z0 = 4 * np;
  lay.gp0 = 4 * np + n;
  lay.gq0 = split ? lay.gp0 + n * np : -1;
  lay.n_vars = split ? 4 * np + n + 2 * n * np : 4 * np + n + n * np;
  const int nv = lay.n_vars;

  const Eigen::VectorXd mpp = problem.mpp_w / s_base_va;
  const Eigen::VectorXd pm = problem.p_meas_w / s_base_va;
  const Eigen::VectorXd qm = problem.q_meas_var / s_base_va;

  qp::QpProblem qp;
  qp.q = Eigen::MatrixXd::Zero(nv, nv);
  qp.c = Eigen::VectorXd::Zero(nv);
  for (int k = 0; k < np; ++k) {
    qp.q(lay.p(k), lay.p(k)) = 2.0;
    qp.q(lay.q(k), lay.q(k)) = 2.0;
    qp.c(lay.p(k)) = -2.0 * mpp(k);
  }

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  auto add_row = [&](const Eigen::VectorXd& r, double b) {
    rows.push_back(r);
    rhs.push_back(b);
  };
  auto unit = [&](int idx, double v) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
    r(idx) = v;
    return r;
  };

  int n_eq = 0;
  for (const auto& pl : plants)
    if (!pl.reactive_capable) ++n_eq;
  qp.a_eq = Eigen::MatrixXd::Zero(n_eq, nv);
  qp.b_eq = Eigen::VectorXd::Zero(n_eq);
  int eq_row = 0;

  for (int k = 0; k < np; ++k) {
    const auto& pl = plants[static_cast<size_t>(k)];
    const double smax = pl.s_max_va / s_base_va;

    add_row(unit(lay.p(k), 1.0), mpp(k));   // p <= MPP
    add_row(unit(lay.p(k), -1.0), 0.0);     // p >= 0

    // inscribed polygon for the capability circle (vertex on the p axis)
    const double edge = smax * std::cos(M_PI / problem.polygon_segments);
    for (int e = 0; e < problem.polygon_segments; ++e) {
      const double phi = (2.0 * e + 1.0) * M_PI / problem.polygon_segments;
      Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
      r(lay.p(k)) = std::cos(phi);
      r(lay.q(k)) = std::sin(phi);
      add_row(r, edge);
    }

    if (pl.reactive_capable) {
      const double zeta = pl.zeta();
      Eigen::VectorXd r1 = Eigen::VectorXd::Zero(nv);
      r1(lay.q(k)) = 1.0;
      r1(lay.p(k)) = -zeta;
      add_row(r1, 0.0);  // q <= zeta p
      Eigen::VectorXd r2 = Eigen::VectorXd::Zero(nv);
      r2(lay.q(k)) = -1.0;
      r2(lay.p(k)) = -zeta;
      add_row(r2, 0.0);  // -q <= zeta p
    } else {
      qp.a_eq(eq_row, lay.q(k)) = 1.0;
      qp.b_eq(eq_row) = 0.0;
      ++eq_row;
    }

    // |p - p_meas| <= y^p, |q - q_meas| <= y^q
    Eigen::VectorXd r = unit(lay.p(k), 1.0);
    r(lay.yp(k)) = -1.0;
    add_row(r, pm(k));
    r = unit(lay.p(k), -1.0);
    r(lay.yp(k)) = -1.0;
    add_row(r, -pm(k));
    r = unit(lay.q(k), 1.0);
    r(lay.yq(k)) = -1.0;
    add_row(r, qm(k));
    r = unit(lay.q(k), -1.0);
    r(lay.yq(k)) = -1.0;
    add_row(r, -qm(k));

    add_row(unit(lay.yp(k), -1.0), 0.0);
    add_row(unit(lay.yq(k), -1.0), 0.0);
  }

  for (int i = 0; i < n; ++i) {
    const auto& est = problem.estimates[static_cast<size_t>(i)];
    // budget coefficient: each plant brings two deviation sources when split
    const double gamma = split ? 2.0 * problem.xi(i) : problem.xi(i);

    Eigen::VectorXd up = Eigen::VectorXd::Zero(nv);
    Eigen::VectorXd lo = Eigen::VectorXd::Zero(nv);
    double up_b = problem.v_max - problem.voltage_margin - problem.v_prev(i);
    double lo_b = problem.v_prev(i) - (problem.v_min + problem.voltage_margin);
    for (int k = 0; k < np; ++k) {
      const int col = problem.plant_col[static_cast<size_t>(k)];
      const double kp = est.kp_hat(col);
      const double kq = est.kq_hat(col);
      up(lay.p(k)) = kp;
      up(lay.q(k)) = kq;
      lo(lay.p(k)) = -kp;
      lo(lay.q(k)) = -kq;
      up_b += kp * pm(k) + kq * qm(k);
      lo_b -= kp * pm(k) + kq * qm(k);
      up(lay.gp(i, k)) = 1.0;
      lo(lay.gp(i, k)) = 1.0;
      if (split) {
        up(lay.gq(i, k)) = 1.0;
        lo(lay.gq(i, k)) = 1.0;
      }
    }
    up(lay.z(i)) = gamma;
    lo(lay.z(i)) = gamma;
    add_row(up, up_b);
    add_row(lo, lo_b);

    for (int k = 0; k < np; ++k) {
      const int col = problem.plant_col[static_cast<size_t>(k)];
      const double dkp = est.dkp(col);
      const double dkq = est.dkq(col);
      // z + g >= dK * y, written as dK*y - z - g <= 0
      Eigen::VectorXd rp = Eigen::VectorXd::Zero(nv);
      rp(lay.yp(k)) = dkp;
      rp(lay.z(i)) = -1.0;
      rp(lay.gp(i, k)) = -1.0;
      add_row(rp, 0.0);
      Eigen::VectorXd rq = Eigen::VectorXd::Zero(nv);
      if (split) {
        rq(lay.yq(k)) = dkq;
        rq(lay.z(i)) = -1.0;
        rq(lay.gq(i, k)) = -1.0;
      } else {
        rq(lay.yp(k)) = dkq;  // printed variant couples dK^q with y^p
        rq(lay.z(i)) = -1.0;
        rq(lay.gp(i, k)) = -1.0;
      }
      add_row(rq, 0.0);

      add_row(unit(lay.gp(i, k), -1.0), 0.0);
      if (split) add_row(unit(lay.gq(i, k), -1.0), 0.0);
    }
    add_row(unit(lay.z(i), -1.0), 0.0);
  }

  qp.a_in.resize(static_cast<Eigen::Index>(rows.size()), nv);
  qp.b_in.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    qp.a_in.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    qp.b_in(static_cast<Eigen::Index>(r)) = rhs[r];
  }
  return {std::move(qp), lay};
}

Setpoint solve_robust(const RobustControlProblem& problem,
                      const std::vector<PvPlantConfig>& plants, double s_base_va,
                      const qp::QpOptions& opts) {
  auto [qp_prob, lay] = build_robust_qp(problem, plants, s_base_va);
  const auto sol = qp::solve_qp(qp_prob, opts);

  Setpoint sp;
  sp.status = sol.status;
  sp.iterations = sol.iterations;
  sp.kkt = sol.kkt;
  const int np = lay.n_plants, n = lay.n_nodes;
  sp.p_pv_w = problem.p_meas_w;
  sp.q_pv_var = problem.q_meas_var;
  if (sol.status != qp::QpStatus::Optimal) return sp;

  sp.p_pv_w.resize(np);
  sp.q_pv_var.resize(np);
  sp.z.resize(n);
  sp.yp.resize(np);
  sp.yq.resize(np);
  sp.gp.resize(n, np);
  sp.gq = lay.gq0 >= 0 ? Eigen::MatrixXd(n, np) : Eigen::MatrixXd();
  double obj = 0.0;
  const Eigen::VectorXd mpp = problem.mpp_w / s_base_va;
  for (int k = 0; k < np; ++k) {
    const double p = sol.x(lay.p(k));
    const double q = sol.x(lay.q(k));
    sp.p_pv_w(k) = p * s_base_va;
    sp.q_pv_var(k) = q * s_base_va;
    sp.yp(k) = sol.x(lay.yp(k));
    sp.yq(k) = sol.x(lay.yq(k));
    obj += (p - mpp(k)) * (p - mpp(k)) + q * q;
  }
  for (int i = 0; i < n; ++i) {
    sp.z(i) = sol.x(lay.z(i));
    for (int k = 0; k < np; ++k) {
      sp.gp(i, k) = sol.x(lay.gp(i, k));
      if (lay.gq0 >= 0) sp.gq(i, k) = sol.x(lay.gq(i, k));
    }
  }
  sp.objective = obj;
  return sp;
}

RobustnessReport verify_robustness(const RobustControlProblem& problem,
                                   const std::vector<PvPlantConfig>& plants,
                                   double s_base_va, const Setpoint& setpoint) {
  problem.validate(plants);
  const int np = problem.n_plants();
  const int n = problem.n_nodes();
  const int dims = 2 * np;
  if (dims > 10)
    throw TooManyVertices("verify_robustness: " + std::to_string(dims) +
                          " interval coefficients per node (max 10)");

  const Eigen::VectorXd dp = (setpoint.p_pv_w - problem.p_meas_w) / s_base_va;
  const Eigen::VectorXd dq = (setpoint.q_pv_var - problem.q_meas_var) / s_base_va;

  RobustnessReport rep;
  rep.vertices = 1 << dims;
  rep.worst_high.resize(n);
  rep.worst_low.resize(n);

  for (int i = 0; i < n; ++i) {
    const auto& est = problem.estimates[static_cast<size_t>(i)];
    double base = problem.v_prev(i);
    for (int k = 0; k < np; ++k) {
      const int col = problem.plant_col[static_cast<size_t>(k)];
      base += est.kp_hat(col) * dp(k) + est.kq_hat(col) * dq(k);
    }
    double hi = -1e300, lo = 1e300;
    for (int v = 0; v < rep.vertices; ++v) {
      double dev = 0.0;
      for (int k = 0; k < np; ++k) {
        const int col = problem.plant_col[static_cast<size_t>(k)];
        const double sp = (v >> (2 * k)) & 1 ? 1.0 : -1.0;
        const double sq = (v >> (2 * k + 1)) & 1 ? 1.0 : -1.0;
        dev += sp * est.dkp(col) * dp(k) + sq * est.dkq(col) * dq(k);
      }
      hi = std::max(hi, base + dev);
      lo = std::min(lo, base + dev);
    }
    rep.worst_high(i) = hi;
    rep.worst_low(i) = lo;
  }
  return rep;
}

}  // namespace rvc::ctrl
