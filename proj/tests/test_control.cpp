#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "rvc/control.hpp"
#include "rvc/errors.hpp"

using namespace rvc;
using namespace rvc::ctrl;

namespace {

est::SensitivityEstimate flat_estimate(int n_cols, double kp, double dkp, double kq,
                                       double dkq) {
  est::SensitivityEstimate e;
  e.kp_hat = Eigen::VectorXd::Constant(n_cols, kp);
  e.kq_hat = Eigen::VectorXd::Constant(n_cols, kq);
  e.dkp = Eigen::VectorXd::Constant(n_cols, dkp);
  e.dkq = Eigen::VectorXd::Constant(n_cols, dkq);
  return e;
}

// single node, single plant; powers in pu (s_base = 1)
RobustControlProblem one_plant_problem(double v_prev, double k, double dk,
                                       double p_meas, double mpp, double xi) {
  RobustControlProblem pr;
  pr.v_prev = Eigen::VectorXd::Constant(1, v_prev);
  pr.estimates = {flat_estimate(1, k, dk, 0.0, 0.0)};
  pr.plant_col = {0};
  pr.p_meas_w = Eigen::VectorXd::Constant(1, p_meas);
  pr.q_meas_var = Eigen::VectorXd::Zero(1);
  pr.mpp_w = Eigen::VectorXd::Constant(1, mpp);
  pr.v_min = 0.96;
  pr.v_max = 1.04;
  pr.xi = Eigen::VectorXd::Constant(1, xi);
  return pr;
}

PvPlantConfig active_only_plant() {
  PvPlantConfig pl;
  pl.bus_id = 11;
  pl.s_max_va = 1.5;
  pl.pf_min = 1.0;
  pl.reactive_capable = false;
  return pl;
}

PvPlantConfig pq_plant(double s_max = 1.5, double pf = 0.9) {
  PvPlantConfig pl;
  pl.bus_id = 9;
  pl.s_max_va = s_max;
  pl.pf_min = pf;
  pl.reactive_capable = true;
  return pl;
}

}  // namespace

TEST_CASE("plant config derives zeta consistently") {
  PvPlantConfig pl = pq_plant(10e3, 0.9);
  const double z = pl.zeta();
  CHECK(std::abs(z - std::sqrt((1.0 - 0.81) / 0.81)) < 1e-12);
  pl.pf_min = 1.0;
  CHECK(pl.zeta() == doctest::Approx(0.0));
  pl.pf_min = 0.0;
  CHECK_THROWS_AS(pl.validate(), ConfigError);
}

TEST_CASE("unconstrained optimum sits at the MPP with zero reactive power") {
  auto pr = one_plant_problem(1.00, 0.05, 0.01, 0.2, 0.5, 1.0);
  const auto sp = solve_robust(pr, {pq_plant()}, 1.0);
  REQUIRE(sp.status == qp::QpStatus::Optimal);
  CHECK(sp.p_pv_w(0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(std::abs(sp.q_pv_var(0)) < 1e-6);
  CHECK(sp.objective < 1e-10);
}

TEST_CASE("zero uncertainty collapses to the nominal problem") {
  for (auto form : {RobustFormulation::SplitBudget, RobustFormulation::AsPrinted}) {
    auto pr = one_plant_problem(1.035, 0.05, 0.0, 0.2, 0.9, 1.0);
    pr.formulation = form;
    const auto sp = solve_robust(pr, {active_only_plant()}, 1.0);
    REQUIRE(sp.status == qp::QpStatus::Optimal);
    // nominal binding: k * (p - p_meas) = v_max - v_prev
    const double p_expect = 0.2 + (1.04 - 1.035) / 0.05;
    CHECK(sp.p_pv_w(0) == doctest::Approx(p_expect).epsilon(1e-6));
    CHECK(sp.z.cwiseAbs().maxCoeff() < 1e-6);
    CHECK(sp.gp.cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("binding upper bound matches a grid-search brute force") {
  const double v_prev = 1.03, k = 0.05, dk = 0.01, p_meas = 0.2, mpp = 0.9;
  auto pr = one_plant_problem(v_prev, k, dk, p_meas, mpp, 1.0);
  const auto sp = solve_robust(pr, {active_only_plant()}, 1.0);
  REQUIRE(sp.status == qp::QpStatus::Optimal);

  // brute force: largest feasible p under the worst-case coefficient,
  // refined in three stages
  auto feasible = [&](double p) {
    const double d = p - p_meas;
    return v_prev + k * d + dk * std::abs(d) <= 1.04 + 1e-12;
  };
  double best = 0.0, step = 1e-3;
  double lo = 0.0, hi = mpp;
  for (int stage = 0; stage < 3; ++stage) {
    best = lo;
    for (double p = lo; p <= hi + step / 2; p += step) {
      const double pc = std::min(p, mpp);
      if (feasible(pc)) best = pc;
    }
    lo = std::max(0.0, best - step);
    hi = std::min(mpp, best + step);
    step *= 1e-3;
  }
  CHECK(sp.p_pv_w(0) == doctest::Approx(best).epsilon(1e-6));
  // worst-case coefficient lands exactly on the bound
  CHECK(v_prev + (k + dk) * (sp.p_pv_w(0) - p_meas) == doctest::Approx(1.04).epsilon(1e-8));
}

TEST_CASE("objective is non-decreasing in the uncertainty budget") {
  double prev_obj = -1.0;
  for (double xi : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    auto pr = one_plant_problem(1.03, 0.05, 0.015, 0.2, 0.9, xi);
    const auto sp = solve_robust(pr, {active_only_plant()}, 1.0);
    REQUIRE(sp.status == qp::QpStatus::Optimal);
    CHECK(sp.objective >= prev_obj - 1e-9);
    prev_obj = sp.objective;
  }
}

TEST_CASE("full budget protects every coefficient vertex") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int bound_count = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const int np = 1 + static_cast<int>(rng() % 2);
    const int n = np + static_cast<int>(rng() % 2);
    RobustControlProblem pr;
    pr.v_prev = Eigen::VectorXd::Zero(n);
    pr.xi = Eigen::VectorXd::Constant(n, static_cast<double>(np));
    std::vector<PvPlantConfig> plants;
    for (int k = 0; k < np; ++k) {
      pr.plant_col.push_back(k);
      plants.push_back(u01(rng) < 0.5 ? active_only_plant() : pq_plant());
    }
    for (int i = 0; i < n; ++i) {
      const double kp = 0.02 + 0.18 * u01(rng);
      const double kq = 0.01 + 0.08 * u01(rng);
      auto e = flat_estimate(n, kp, 0.6 * kp * u01(rng), kq, 0.6 * kq * u01(rng));
      pr.estimates.push_back(e);
      pr.v_prev(i) = 1.04 - 0.001 - 0.02 * u01(rng);
    }
    pr.p_meas_w = Eigen::VectorXd::Zero(np);
    pr.q_meas_var = Eigen::VectorXd::Zero(np);
    pr.mpp_w = Eigen::VectorXd::Zero(np);
    for (int k = 0; k < np; ++k) {
      pr.p_meas_w(k) = 0.3 * u01(rng);
      pr.mpp_w(k) = pr.p_meas_w(k) + 0.5 * u01(rng);
    }
    const auto sp = solve_robust(pr, plants, 1.0);
    if (sp.status != qp::QpStatus::Optimal) continue;
    const auto rep = verify_robustness(pr, plants, 1.0, sp);
    CHECK(rep.worst_high.maxCoeff() <= 1.04 + 1e-6);
    if ((pr.mpp_w - sp.p_pv_w).cwiseAbs().maxCoeff() > 1e-6) ++bound_count;

    // deterministic constraints always hold at the setpoint
    for (int k = 0; k < np; ++k) {
      CHECK(sp.p_pv_w(k) >= -1e-8);
      CHECK(sp.p_pv_w(k) <= pr.mpp_w(k) + 1e-8);
      const double s2 = sp.p_pv_w(k) * sp.p_pv_w(k) + sp.q_pv_var(k) * sp.q_pv_var(k);
      const double smax = plants[static_cast<size_t>(k)].s_max_va;
      CHECK(s2 <= smax * smax + 1e-6);
      if (!plants[static_cast<size_t>(k)].reactive_capable)
        CHECK(std::abs(sp.q_pv_var(k)) < 1e-9);
      else
        CHECK(std::abs(sp.q_pv_var(k)) <=
              plants[static_cast<size_t>(k)].zeta() * sp.p_pv_w(k) + 1e-6);
    }
  }
  CHECK(bound_count > 0);  // the generator must actually exercise binding cases
}

TEST_CASE("zero budget reports but does not protect") {
  auto pr = one_plant_problem(1.035, 0.05, 0.02, 0.2, 0.9, 0.0);
  const auto sp = solve_robust(pr, {active_only_plant()}, 1.0);
  REQUIRE(sp.status == qp::QpStatus::Optimal);
  const auto rep = verify_robustness(pr, {active_only_plant()}, 1.0, sp);
  // nominal lands on the bound; the adverse vertex exceeds it
  CHECK(rep.worst_high(0) > 1.04 + 1e-6);
}

TEST_CASE("zero deltas make the worst case equal the nominal prediction") {
  auto pr = one_plant_problem(1.01, 0.05, 0.02, 0.3, 0.9, 1.0);
  Setpoint sp;
  sp.p_pv_w = pr.p_meas_w;  // no move
  sp.q_pv_var = pr.q_meas_var;
  const auto rep = verify_robustness(pr, {active_only_plant()}, 1.0, sp);
  CHECK(rep.worst_high(0) == doctest::Approx(1.01));
  CHECK(rep.worst_low(0) == doctest::Approx(1.01));
}

TEST_CASE("vertex enumeration refuses oversized problems") {
  RobustControlProblem pr;
  const int np = 6;  // 12 interval coefficients per node
  pr.v_prev = Eigen::VectorXd::Constant(np, 1.0);
  pr.xi = Eigen::VectorXd::Constant(np, 1.0);
  std::vector<PvPlantConfig> plants;
  for (int k = 0; k < np; ++k) {
    pr.plant_col.push_back(k);
    plants.push_back(pq_plant());
    pr.estimates.push_back(flat_estimate(np, 0.05, 0.01, 0.02, 0.01));
  }
  pr.p_meas_w = Eigen::VectorXd::Zero(np);
  pr.q_meas_var = Eigen::VectorXd::Zero(np);
  pr.mpp_w = Eigen::VectorXd::Ones(np);
  Setpoint sp;
  sp.p_pv_w = Eigen::VectorXd::Ones(np);
  sp.q_pv_var = Eigen::VectorXd::Zero(np);
  CHECK_THROWS_AS(verify_robustness(pr, plants, 1.0, sp), TooManyVertices);
}

TEST_CASE("infeasible bounds surface as status with held setpoint") {
  // previous voltage far above v_max with a tiny coefficient: no curtailment
  // can restore feasibility
  auto pr = one_plant_problem(1.2, 1e-6, 0.0, 0.1, 0.9, 1.0);
  const auto sp = solve_robust(pr, {active_only_plant()}, 1.0);
  CHECK(sp.status == qp::QpStatus::Infeasible);
  CHECK(sp.p_pv_w(0) == doctest::Approx(0.1));  // held at measured value
}

TEST_CASE("physical setpoints are independent of the power base") {
  auto pr_w = one_plant_problem(1.03, 0.05, 0.01, 0.2, 0.9, 1.0);
  const auto sp1 = solve_robust(pr_w, {active_only_plant()}, 1.0);

  // same physical problem on a 100 kVA base: powers in watts, coefficients
  // rescaled pu-volt per pu-watt
  const double sb = 100e3;
  RobustControlProblem pr2 = pr_w;
  pr2.estimates = {flat_estimate(1, 0.05, 0.01, 0.0, 0.0)};
  pr2.p_meas_w *= sb;
  pr2.q_meas_var *= sb;
  pr2.mpp_w *= sb;
  auto plant2 = active_only_plant();
  plant2.s_max_va *= sb;
  const auto sp2 = solve_robust(pr2, {plant2}, sb);
  REQUIRE(sp1.status == qp::QpStatus::Optimal);
  REQUIRE(sp2.status == qp::QpStatus::Optimal);
  CHECK(sp1.p_pv_w(0) == doctest::Approx(sp2.p_pv_w(0) / sb).epsilon(1e-8));
}

TEST_CASE("printed formulation is weaker than the split one") {
  // both p and q active with uncertainty on both coefficient families
  RobustControlProblem pr;
  pr.v_prev = Eigen::VectorXd::Constant(1, 1.035);
  pr.estimates = {flat_estimate(1, 0.06, 0.02, 0.05, 0.02)};
  pr.plant_col = {0};
  pr.p_meas_w = Eigen::VectorXd::Constant(1, 0.3);
  pr.q_meas_var = Eigen::VectorXd::Zero(1);
  pr.mpp_w = Eigen::VectorXd::Constant(1, 0.9);
  pr.xi = Eigen::VectorXd::Constant(1, 1.0);

  auto pr_split = pr;
  pr_split.formulation = RobustFormulation::SplitBudget;
  auto pr_printed = pr;
  pr_printed.formulation = RobustFormulation::AsPrinted;

  const auto sp_split = solve_robust(pr_split, {pq_plant()}, 1.0);
  const auto sp_printed = solve_robust(pr_printed, {pq_plant()}, 1.0);
  REQUIRE(sp_split.status == qp::QpStatus::Optimal);
  REQUIRE(sp_printed.status == qp::QpStatus::Optimal);
  // the split form protects at least as much, so it cannot do better
  CHECK(sp_split.objective >= sp_printed.objective - 1e-9);
}
