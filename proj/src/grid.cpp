#include "rvc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <queue>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rvc/errors.hpp"

namespace rvc::grid {

using json = nlohmann::json;

void NetworkModel::validate() const {
  if (s_base_va <= 0.0) throw ConfigError("network.s_base_va", "must be > 0");
  if (v_base_v <= 0.0) throw ConfigError("network.v_base_v", "must be > 0");
  if (buses.size() < 2) throw ConfigError("network.buses", "need at least 2 buses");

  int slack_count = 0;
  for (const auto& b : buses)
    if (b.type == BusType::Slack) ++slack_count;
  if (slack_count != 1)
    throw ConfigError("network.buses",
                      "expected exactly one slack bus, got " + std::to_string(slack_count));

  for (size_t i = 0; i < buses.size(); ++i)
    for (size_t j = i + 1; j < buses.size(); ++j)
      if (buses[i].id == buses[j].id)
        throw ConfigError("network.buses", "duplicate bus id " + std::to_string(buses[i].id));

  for (const auto& br : branches) {
    if (position_of(br.from) < 0 || position_of(br.to) < 0)
      throw ConfigError("network.branches", "branch references unknown bus");
    if (std::hypot(br.r_ohm, br.x_ohm) <= 0.0)
      throw ConfigError("network.branches", "branch impedance magnitude must be > 0");
    if (br.ampacity_a <= 0.0)
      throw ConfigError("network.branches", "ampacity must be > 0");
  }

  // connectivity (BFS over branch adjacency)
  const int n = n_buses();
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (const auto& br : branches) {
    const int f = position_of(br.from), t = position_of(br.to);
    adj[static_cast<size_t>(f)].push_back(t);
    adj[static_cast<size_t>(t)].push_back(f);
  }
  std::vector<char> seen(static_cast<size_t>(n), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int w : adj[static_cast<size_t>(u)])
      if (!seen[static_cast<size_t>(w)]) {
        seen[static_cast<size_t>(w)] = 1;
        ++reached;
        q.push(w);
      }
  }
  if (reached != n) throw ConfigError("network", "graph is not connected");
}

int NetworkModel::slack_position() const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].type == BusType::Slack) return static_cast<int>(i);
  return -1;
}

std::vector<int> NetworkModel::non_slack_positions() const {
  std::vector<int> out;
  out.reserve(buses.size());
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].type != BusType::Slack) out.push_back(static_cast<int>(i));
  return out;
}

int NetworkModel::position_of(int bus_id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return static_cast<int>(i);
  return -1;
}

NetworkModel NetworkModel::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("network", std::string("json parse failed: ") + e.what());
  }
  NetworkModel m;
  try {
    if (j.value("schema", "") != "rvc-network/1")
      throw ConfigError("network.schema", "expected rvc-network/1");
    m.s_base_va = j.at("s_base_va").get<double>();
    m.v_base_v = j.at("v_base_v").get<double>();
    for (const auto& jb : j.at("buses")) {
      BusSpec b;
      b.id = jb.at("id").get<int>();
      const std::string t = jb.at("type").get<std::string>();
      if (t == "slack")
        b.type = BusType::Slack;
      else if (t == "pq")
        b.type = BusType::PQ;
      else
        throw ConfigError("network.buses.type", "unknown bus type '" + t + "'");
      b.base_kv = jb.value("base_kv", m.v_base_v / 1000.0);
      m.buses.push_back(b);
    }
    for (const auto& jb : j.at("branches")) {
      BranchSpec br;
      br.from = jb.at("from").get<int>();
      br.to = jb.at("to").get<int>();
      br.r_ohm = jb.at("r_ohm").get<double>();
      br.x_ohm = jb.at("x_ohm").get<double>();
      br.ampacity_a = jb.at("ampacity_a").get<double>();
      m.branches.push_back(br);
    }
  } catch (const json::exception& e) {
    throw ConfigError("network", std::string("missing/invalid field: ") + e.what());
  }
  m.validate();
  return m;
}

NetworkModel NetworkModel::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open network file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string NetworkModel::to_json_text() const {
  json j;
  j["schema"] = "rvc-network/1";
  j["s_base_va"] = s_base_va;
  j["v_base_v"] = v_base_v;
  j["buses"] = json::array();
  for (const auto& b : buses) {
    json jb;
    jb["id"] = b.id;
    jb["type"] = b.type == BusType::Slack ? "slack" : "pq";
    jb["base_kv"] = b.base_kv;
    j["buses"].push_back(jb);
  }
  j["branches"] = json::array();
  for (const auto& br : branches) {
    json jb;
    jb["from"] = br.from;
    jb["to"] = br.to;
    jb["r_ohm"] = br.r_ohm;
    jb["x_ohm"] = br.x_ohm;
    jb["ampacity_a"] = br.ampacity_a;
    j["branches"].push_back(jb);
  }
  return j.dump(2);
}

Eigen::VectorXd GridState::v_nonslack(const NetworkModel& model) const {
  const auto pos = model.non_slack_positions();
  Eigen::VectorXd out(static_cast<Eigen::Index>(pos.size()));
  for (size_t i = 0; i < pos.size(); ++i) out(static_cast<Eigen::Index>(i)) = v_mag(pos[i]);
  return out;
}

namespace {

Eigen::MatrixXcd build_ybus(const NetworkModel& model) {
  const int n = model.n_buses();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  const double zb = model.z_base_ohm();
  for (const auto& br : model.branches) {
    const int f = model.position_of(br.from);
    const int t = model.position_of(br.to);
    const std::complex<double> z(br.r_ohm / zb, br.x_ohm / zb);
    const std::complex<double> yb = 1.0 / z;
    y(f, f) += yb;
    y(t, t) += yb;
    y(f, t) -= yb;
    y(t, f) -= yb;
  }
  return y;
}

}  // namespace

GridState solve_power_flow(const NetworkModel& model, const Eigen::VectorXd& p_inj,
                           const Eigen::VectorXd& q_inj, double slack_v,
                           const PowerFlowOptions& opts) {
  const int n = model.n_buses();
  const auto ns = model.non_slack_positions();
  const int m = static_cast<int>(ns.size());
  if (p_inj.size() != m || q_inj.size() != m)
    throw InconsistentDimensions("solve_power_flow: injection vectors must have N_b entries");
  if (!p_inj.allFinite() || !q_inj.allFinite() || !std::isfinite(slack_v))
    throw InconsistentDimensions("solve_power_flow: non-finite input");
  if (slack_v <= 0.0) throw NonConvergence("solve_power_flow: slack_v must be > 0");

  const Eigen::MatrixXcd y = build_ybus(model);
  const int slack = model.slack_position();

  // scheduled injections over all buses (slack entry unused)
  Eigen::VectorXd p_sched = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q_sched = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < m; ++k) {
    p_sched(ns[static_cast<size_t>(k)]) = p_inj(k);
    q_sched(ns[static_cast<size_t>(k)]) = q_inj(k);
  }

  // flat start
  Eigen::VectorXd vm = Eigen::VectorXd::Constant(n, 1.0);
  Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
  vm(slack) = slack_v;

  Eigen::VectorXd p_calc(n), q_calc(n);
  auto compute_injections = [&]() {
    for (int i = 0; i < n; ++i) {
      double pi = 0.0, qi = 0.0;
      for (int k = 0; k < n; ++k) {
        const double g = y(i, k).real(), b = y(i, k).imag();
        const double th = va(i) - va(k);
        const double ct = std::cos(th), st = std::sin(th);
        pi += vm(k) * (g * ct + b * st);
        qi += vm(k) * (g * st - b * ct);
      }
      p_calc(i) = vm(i) * pi;
      q_calc(i) = vm(i) * qi;
    }
  };

  for (int it = 0; it <= opts.max_iterations; ++it) {
    compute_injections();
    Eigen::VectorXd mis(2 * m);
    for (int k = 0; k < m; ++k) {
      const int i = ns[static_cast<size_t>(k)];
      mis(k) = p_sched(i) - p_calc(i);
      mis(m + k) = q_sched(i) - q_calc(i);
    }
    if (mis.lpNorm<Eigen::Infinity>() < opts.tolerance) {
      GridState st;
      st.v_mag = vm;
      st.v_ang = va;
      st.p_inj = p_calc;
      st.q_inj = q_calc;
      st.slack_v = slack_v;
      return st;
    }
    if (it == opts.max_iterations) break;

    // Jacobian in polar form over non-slack buses: [dP/dth dP/dV; dQ/dth dQ/dV]
    Eigen::MatrixXd jac(2 * m, 2 * m);
    for (int r = 0; r < m; ++r) {
      const int i = ns[static_cast<size_t>(r)];
      for (int c = 0; c < m; ++c) {
        const int j = ns[static_cast<size_t>(c)];
        const double g = y(i, j).real(), b = y(i, j).imag();
        if (i == j) {
          jac(r, c) = -q_calc(i) - b * vm(i) * vm(i);
          jac(r, m + c) = p_calc(i) / vm(i) + g * vm(i);
          jac(m + r, c) = p_calc(i) - g * vm(i) * vm(i);
          jac(m + r, m + c) = q_calc(i) / vm(i) - b * vm(i) * vm(i);
        } else {
          const double th = va(i) - va(j);
          const double ct = std::cos(th), st = std::sin(th);
          jac(r, c) = vm(i) * vm(j) * (g * st - b * ct);
          jac(r, m + c) = vm(i) * (g * ct + b * st);
          jac(m + r, c) = -vm(i) * vm(j) * (g * ct + b * st);
          jac(m + r, m + c) = vm(i) * (g * st - b * ct);
        }
      }
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible())
      throw SingularJacobian("solve_power_flow: singular Jacobian at iteration " +
                             std::to_string(it));
    const Eigen::VectorXd dx = lu.solve(mis);
    for (int k = 0; k < m; ++k) {
      const int i = ns[static_cast<size_t>(k)];
      va(i) += dx(k);
      vm(i) += dx(m + k);
      if (vm(i) <= 0.0)
        throw NonConvergence("solve_power_flow: voltage collapsed below zero");
    }
  }
  throw NonConvergence("solve_power_flow: no convergence after " +
                       std::to_string(opts.max_iterations) + " iterations");
}

SensitivityMatrix oracle_sensitivities(const NetworkModel& model, const GridState& state,
                                       double h, const PowerFlowOptions& opts) {
  const auto ns = model.non_slack_positions();
  const int m = static_cast<int>(ns.size());

  Eigen::VectorXd p0(m), q0(m);
  for (int k = 0; k < m; ++k) {
    p0(k) = state.p_inj(ns[static_cast<size_t>(k)]);
    q0(k) = state.q_inj(ns[static_cast<size_t>(k)]);
  }

  SensitivityMatrix out;
  out.kp.resize(m, m);
  out.kq.resize(m, m);

  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd pp = p0, pm = p0;
    pp(j) += h;
    pm(j) -= h;
    const auto sp = solve_power_flow(model, pp, q0, state.slack_v, opts);
    const auto sm = solve_power_flow(model, pm, q0, state.slack_v, opts);
    out.kp.col(j) = (sp.v_nonslack(model) - sm.v_nonslack(model)) / (2.0 * h);

    Eigen::VectorXd qp = q0, qm = q0;
    qp(j) += h;
    qm(j) -= h;
    const auto sqp = solve_power_flow(model, p0, qp, state.slack_v, opts);
    const auto sqm = solve_power_flow(model, p0, qm, state.slack_v, opts);
    out.kq.col(j) = (sqp.v_nonslack(model) - sqm.v_nonslack(model)) / (2.0 * h);
  }
  return out;
}

Eigen::VectorXd linearized_voltage(const Eigen::VectorXd& prev_v, const Eigen::MatrixXd& kp,
                                   const Eigen::MatrixXd& kq, const Eigen::VectorXd& dp,
                                   const Eigen::VectorXd& dq) {
  if (kp.rows() != prev_v.size() || kq.rows() != prev_v.size() || kp.cols() != dp.size() ||
      kq.cols() != dq.size())
    throw InconsistentDimensions("linearized_voltage: dimension mismatch");
  return prev_v + kp * dp + kq * dq;
}

}  // namespace rvc::grid
