#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "rvc/errors.hpp"
#include "rvc/grid.hpp"

using namespace rvc;
using namespace rvc::grid;
using rvc::testing::make_chain;
using rvc::testing::two_bus_voltage;

TEST_CASE("no-load flat case") {
  const auto m = make_chain(5, 0.02, 0.01);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
  const auto st = solve_power_flow(m, z, z, 1.0);
  for (int i = 0; i < 5; ++i) {
    CHECK(st.v_mag(i) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(st.v_ang(i) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("two-bus case matches the closed-form quadratic") {
  // r = x = 0.01 pu on a 1.6 ohm base
  const double zb = 400.0 * 400.0 / 100e3;
  const auto m = make_chain(2, 0.01 * zb, 0.01 * zb);
  Eigen::VectorXd p(1), q(1);
  p << -0.1;
  q << 0.0;
  const auto st = solve_power_flow(m, p, q, 1.0);
  const double expected = two_bus_voltage(0.01, 0.01, -0.1, 0.0);
  CHECK(std::abs(st.v_mag(1) - expected) < 1e-9);

  // a few more operating points
  for (double pp : {-0.3, -0.05, 0.2}) {
    for (double qq : {-0.1, 0.0, 0.15}) {
      Eigen::VectorXd pv(1), qv(1);
      pv << pp;
      qv << qq;
      const auto s2 = solve_power_flow(m, pv, qv, 1.0);
      CHECK(std::abs(s2.v_mag(1) - two_bus_voltage(0.01, 0.01, pp, qq)) < 1e-9);
    }
  }
}

TEST_CASE("per-unit consistency: base change leaves physical voltages alone") {
  const double s1 = 100e3, s2 = 200e3;
  const auto ma = make_chain(4, 0.05, 0.02, s1);
  const auto mb = make_chain(4, 0.05, 0.02, s2);
  Eigen::VectorXd p(3), q(3);
  p << -0.10, 0.06, -0.02;  // pu on s1
  q << -0.03, 0.00, 0.01;
  const auto sa = solve_power_flow(ma, p, q, 1.01);
  const auto sb = solve_power_flow(mb, p * (s1 / s2), q * (s1 / s2), 1.01);
  for (int i = 0; i < 4; ++i)
    CHECK(sa.v_mag(i) == doctest::Approx(sb.v_mag(i)).epsilon(1e-12));
}

TEST_CASE("power flow rejects bad input and infeasible points") {
  const auto m = make_chain(2, 0.016, 0.016);
  Eigen::VectorXd p(1), q(1);
  p << -60.0;  // far beyond maximum transferable power
  q << 0.0;
  CHECK_THROWS_AS(solve_power_flow(m, p, q, 1.0), rvc::Error);

  Eigen::VectorXd bad(2);
  bad << 0.0, 0.0;
  CHECK_THROWS_AS(solve_power_flow(m, bad, bad, 1.0), InconsistentDimensions);
}

TEST_CASE("oracle on a mostly resistive branch: kq ~ 0 and kp ~ r") {
  const double zb = 1.6;
  const auto m = make_chain(2, 0.02 * zb, 1e-9 * zb);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(1);
  const auto st = solve_power_flow(m, z, z, 1.0);
  const auto sens = oracle_sensitivities(m, st);
  CHECK(std::abs(sens.kq(0, 0)) < 1e-6);
  CHECK(sens.kp(0, 0) == doctest::Approx(0.02).epsilon(1e-4));
}

TEST_CASE("oracle against analytic two-bus derivative at a loaded point") {
  // d|v2|/dp from implicit differentiation of the closed form
  const double r = 0.015, x = 0.008, p = -0.2, q = -0.05;
  const double zb = 1.6;
  const auto m = make_chain(2, r * zb, x * zb);
  Eigen::VectorXd pv(1), qv(1);
  pv << p;
  qv << q;
  const auto st = solve_power_flow(m, pv, qv, 1.0);
  const auto sens = oracle_sensitivities(m, st);

  const double h = 1e-7;  // reference: tight central difference on the closed form
  const double dp_ref =
      (two_bus_voltage(r, x, p + h, q) - two_bus_voltage(r, x, p - h, q)) / (2 * h);
  const double dq_ref =
      (two_bus_voltage(r, x, p, q + h) - two_bus_voltage(r, x, p, q - h)) / (2 * h);
  CHECK(sens.kp(0, 0) == doctest::Approx(dp_ref).epsilon(1e-6));
  CHECK(sens.kq(0, 0) == doctest::Approx(dq_ref).epsilon(1e-6));
}

TEST_CASE("finite-difference step halving shows second-order behaviour") {
  const auto m = make_chain(3, 0.03, 0.012);
  Eigen::VectorXd p(2), q(2);
  p << -0.15, 0.1;
  q << -0.05, 0.0;
  const auto st = solve_power_flow(m, p, q, 1.0);
  const auto s1 = oracle_sensitivities(m, st, 2e-3);
  const auto s2 = oracle_sensitivities(m, st, 1e-3);
  const auto s4 = oracle_sensitivities(m, st, 1e-4);  // near-exact reference
  const double e1 = (s1.kp - s4.kp).cwiseAbs().maxCoeff();
  const double e2 = (s2.kp - s4.kp).cwiseAbs().maxCoeff();
  CHECK(e2 < e1 / 4.0 * 1.5);  // allow slack on the 2nd-order ratio
}

TEST_CASE("self-sensitivity grows with electrical distance on a radial feeder") {
  const auto m = make_chain(8, 0.03, 0.012);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(7, -0.02);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(7);
  const auto st = solve_power_flow(m, p, q, 1.0);
  const auto sens = oracle_sensitivities(m, st);
  for (int i = 0; i < 7; ++i) CHECK(sens.kp(i, i) > 0.0);
  for (int i = 1; i < 7; ++i) CHECK(sens.kp(i, i) >= sens.kp(i - 1, i - 1));
}

TEST_CASE("linearized voltage: zero delta and unit column") {
  Eigen::VectorXd prev(3);
  prev << 1.0, 1.01, 1.02;
  Eigen::MatrixXd kp = Eigen::MatrixXd::Zero(3, 3), kq = Eigen::MatrixXd::Zero(3, 3);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
  CHECK((linearized_voltage(prev, kp, kq, z, z) - prev).norm() == 0.0);

  kp(1, 2) = 1.0;  // K^p_1 = e_2
  Eigen::VectorXd dp = Eigen::VectorXd::Zero(3);
  dp(2) = 1.0;
  const auto v = linearized_voltage(prev, kp, kq, dp, z);
  CHECK(v(1) == doctest::Approx(prev(1) + 1.0));
  CHECK(v(0) == doctest::Approx(prev(0)));
}

TEST_CASE("linearization fidelity against the power flow") {
  const auto m = make_chain(6, 0.03, 0.012);
  const int nb = 5;
  Eigen::VectorXd p0(nb), q0(nb);
  p0 << -0.05, 0.08, -0.02, 0.1, -0.03;
  q0 << -0.01, 0.0, 0.01, -0.02, 0.0;
  const auto st = solve_power_flow(m, p0, q0, 1.01);
  const auto sens = oracle_sensitivities(m, st);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd dp(nb), dq(nb);
    for (int i = 0; i < nb; ++i) {
      dp(i) = u(rng);
      dq(i) = u(rng);
    }
    const auto truth = solve_power_flow(m, p0 + dp, q0 + dq, 1.01);
    const auto pred =
        linearized_voltage(st.v_nonslack(m), sens.kp, sens.kq, dp, dq);
    worst = std::max(worst, (pred - truth.v_nonslack(m)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("network json round trip and validation") {
  const auto m = make_chain(4, 0.02, 0.01);
  const auto text = m.to_json_text();
  const auto back = NetworkModel::from_json_text(text);
  CHECK(back.n_buses() == 4);
  CHECK(back.branches.size() == 3);
  CHECK(back.s_base_va == m.s_base_va);

  // two slack buses must be rejected
  auto bad = m;
  bad.buses[1].type = BusType::Slack;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  // disconnected graph must be rejected
  auto disc = m;
  disc.branches.pop_back();
  CHECK_THROWS_AS(disc.validate(), ConfigError);

  // zero impedance must be rejected
  auto zimp = m;
  zimp.branches[0].r_ohm = 0.0;
  zimp.branches[0].x_ohm = 0.0;
  CHECK_THROWS_AS(zimp.validate(), ConfigError);
}

TEST_CASE("power flow determinism") {
  const auto m = make_chain(5, 0.025, 0.01);
  Eigen::VectorXd p(4), q(4);
  p << -0.1, 0.05, -0.02, 0.08;
  q << -0.02, 0.0, 0.01, -0.01;
  const auto a = solve_power_flow(m, p, q, 1.02);
  const auto b = solve_power_flow(m, p, q, 1.02);
  CHECK((a.v_mag - b.v_mag).norm() == 0.0);
  CHECK((a.v_ang - b.v_ang).norm() == 0.0);
}
