// Copyright 2026 The pictraj Authors
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

#include "pictraj/dynamics.hpp"

#include <cassert>
#include <cmath>
#include <optional>
#include <sstream>

namespace pictraj {

namespace {

constexpr std::uint64_t kRolloutStream = 0x726f6c6c6f7574ULL;

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = m(i, j);
    }
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  const auto values = j.get<std::vector<std::vector<double>>>();
  if (static_cast<Eigen::Index>(values.size()) != rows) {
    throw ConfigError(std::string("policy.") + what + ": wrong row count");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(values[static_cast<std::size_t>(i)].size()) != cols) {
      throw ConfigError(std::string("policy.") + what + ": wrong column count");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = values[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

}  // namespace

void ControlAffineSystem::validate() const {
  if (state_dim < 1 || control_dim < 1 || horizon < 1) {
    throw ConfigError("system '" + name + "': dimensions and horizon must be positive");
  }
  if (!drift || !input_map) {
    throw ConfigError("system '" + name + "': drift and input map are required");
  }
  if (initial_state.size() != state_dim || !initial_state.allFinite()) {
    throw ConfigError("system '" + name + "': initial state has the wrong size or is non-finite");
  }
}

LinearGaussianPolicy::LinearGaussianPolicy(std::vector<Vector> feedforward, std::vector<Matrix> gain,
                                           std::vector<Matrix> covariance)
    : feedforward_(std::move(feedforward)), gain_(std::move(gain)), covariance_(std::move(covariance)) {
  if (feedforward_.empty() || gain_.size() != feedforward_.size() || covariance_.size() != feedforward_.size()) {
    throw ConfigError("policy: feedforward, gain and covariance must cover the same non-empty horizon");
  }
  const Eigen::Index m = feedforward_.front().size();
  const Eigen::Index n = gain_.front().cols();
  for (std::size_t t = 0; t < feedforward_.size(); ++t) {
    if (feedforward_[t].size() != m || gain_[t].rows() != m || gain_[t].cols() != n ||
        covariance_[t].rows() != m || covariance_[t].cols() != m) {
      throw ConfigError("policy: inconsistent dimensions at t=" + std::to_string(t));
    }
    if (!feedforward_[t].allFinite() || !gain_[t].allFinite()) {
      throw ConfigError("policy: non-finite parameters at t=" + std::to_string(t));
    }
    if (!is_spd(covariance_[t])) {
      throw ConfigError("policy: covariance is not symmetric positive definite at t=" + std::to_string(t));
    }
  }
}

LinearGaussianPolicy LinearGaussianPolicy::isotropic(int horizon, int state_dim, int control_dim, double sigma2) {
  const auto steps = static_cast<std::size_t>(std::max(horizon, 0));
  return LinearGaussianPolicy(std::vector<Vector>(steps, Vector::Zero(control_dim)),
                              std::vector<Matrix>(steps, Matrix::Zero(control_dim, state_dim)),
                              std::vector<Matrix>(steps, sigma2 * Matrix::Identity(control_dim, control_dim)));
}

RolloutBatch rollout(const ControlAffineSystem& system, const LinearGaussianPolicy& policy, int samples,
                     std::uint64_t seed, const RolloutOptions& options) {
  system.validate();
  if (policy.horizon() != system.horizon || policy.state_dim() != system.state_dim ||
      policy.control_dim() != system.control_dim) {
    throw ConfigError("rollout: policy shape does not match system '" + system.name + "'");
  }
  if (samples < 1) {
    throw ConfigError("rollout: need at least one sample");
  }
  const int horizon = system.horizon;
  std::vector<Matrix> chol(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    chol[static_cast<std::size_t>(t)] = Eigen::LLT<Matrix>(policy.covariance(t)).matrixL();
  }

  const auto k_count = static_cast<std::size_t>(samples);
  RolloutBatch batch{std::vector<Matrix>(k_count), std::vector<Matrix>(k_count), std::vector<Matrix>(k_count),
                     policy, seed};
  std::vector<std::optional<std::string>> failures(k_count);

  parallel_for(k_count, options.threads, [&](std::size_t k) {
    Matrix& xs = batch.states[k];
    Matrix& us = batch.controls[k];
    Matrix& dus = batch.noises[k];
    xs.resize(system.state_dim, horizon + 1);
    us.resize(system.control_dim, horizon);
    dus.resize(system.control_dim, horizon);
    xs.col(0) = system.initial_state;
    auto rng = substream(seed, kRolloutStream, k);
    Vector z(system.control_dim);
    for (int t = 0; t < horizon; ++t) {
      fill_standard_normal(rng, z);
      if (options.zero_noise) {
        dus.col(t).setZero();
      } else {
        dus.col(t) = chol[static_cast<std::size_t>(t)] * z;
      }
      const Vector x = xs.col(t);
      us.col(t) = policy.mean(t, x) + dus.col(t);
      xs.col(t + 1) = system.step(x, us.col(t));
      if (!xs.col(t + 1).allFinite()) {
        std::ostringstream msg;
        msg << "rollout: non-finite state in trajectory k=" << k << " at t=" << t + 1;
        failures[k] = msg.str();
        return;
      }
    }
  });
  for (const auto& failure : failures) {
    if (failure) {
      throw NumericalError(*failure);
    }
  }
#ifndef NDEBUG
  for (int k = 0; k < samples; ++k) {
    assert(batch.state(k, 0) == system.initial_state);
    for (int t = 0; t < horizon; ++t) {
      assert(batch.control(k, t) == policy.mean(t, batch.state(k, t)) + batch.noise(k, t));
      assert(batch.state(k, t + 1) == system.step(batch.state(k, t), batch.control(k, t)));
    }
  }
#endif
  return batch;
}

Matrix per_step_costs(const RolloutBatch& batch, const CostFunction& cost) {
  if (!cost.running || !cost.terminal) {
    throw ConfigError("cost: running and terminal rates are required");
  }
  const int horizon = batch.horizon();
  Matrix costs(batch.samples(), horizon + 1);
  for (int k = 0; k < batch.samples(); ++k) {
    for (int t = 0; t < horizon; ++t) {
      costs(k, t) = cost.running(t, batch.state(k, t), batch.control(k, t));
    }
    costs(k, horizon) = cost.terminal(batch.state(k, horizon));
    if (!costs.row(k).allFinite()) {
      throw NumericalError("path cost: non-finite cost on trajectory k=" + std::to_string(k));
    }
  }
  return costs;
}

Vector path_cost(const RolloutBatch& batch, const CostFunction& cost) {
  return per_step_costs(batch, cost).rowwise().sum();
}

Matrix noise_penalties(const RolloutBatch& batch) {
  const int horizon = batch.horizon();
  Matrix penalties(batch.samples(), horizon);
  for (int t = 0; t < horizon; ++t) {
    const Eigen::LLT<Matrix> llt(batch.policy.covariance(t));
    for (int k = 0; k < batch.samples(); ++k) {
      const Vector du = batch.noise(k, t);
      penalties(k, t) = 0.5 * du.dot(llt.solve(du));
    }
  }
  return penalties;
}

ControlAffineSystem LinearQuadraticProblem::system(std::string name) const {
  ControlAffineSystem sys;
  sys.name = std::move(name);
  sys.state_dim = static_cast<int>(a.rows());
  sys.control_dim = static_cast<int>(b.cols());
  sys.horizon = horizon;
  sys.drift = [a = a](const Vector& x) -> Vector { return a * x; };
  sys.input_map = [b = b](const Vector&) -> Matrix { return b; };
  sys.initial_state = initial_state;
  return sys;
}

CostFunction LinearQuadraticProblem::cost() const {
  CostFunction c;
  c.running = [q = q, r = r](int, const Vector& x, const Vector& u) {
    return 0.5 * (x.dot(q * x) + u.dot(r * u));
  };
  c.terminal = [qt = q_terminal](const Vector& x) { return 0.5 * x.dot(qt * x); };
  c.state_only_running = [q = q](int, const Vector& x) { return 0.5 * x.dot(q * x); };
  return c;
}

LqrSolution lqr_reference(const LinearQuadraticProblem& problem) {
  const Eigen::Index n = problem.a.rows();
  const Eigen::Index m = problem.b.cols();
  if (problem.a.cols() != n || problem.b.rows() != n || problem.q.rows() != n || problem.q.cols() != n ||
      problem.q_terminal.rows() != n || problem.q_terminal.cols() != n || problem.r.rows() != m ||
      problem.r.cols() != m || problem.initial_state.size() != n || problem.horizon < 1) {
    throw ConfigError("lqr_reference: inconsistent problem dimensions");
  }
  if (!is_spd(problem.r)) {
    throw ConfigError("lqr_reference: control weight must be symmetric positive definite");
  }
  const auto horizon = static_cast<std::size_t>(problem.horizon);
  LqrSolution sol;
  sol.gains.resize(horizon);
  sol.feedforward.assign(horizon, Vector::Zero(m));
  sol.cost_to_go.resize(horizon + 1);
  Matrix p = problem.q_terminal;
  sol.cost_to_go[horizon] = p;
  for (std::size_t t = horizon; t-- > 0;) {
    const Matrix s = problem.r + problem.b.transpose() * p * problem.b;
    const Eigen::LDLT<Matrix> ldlt(s);
    const Matrix gain = -ldlt.solve(problem.b.transpose() * p * problem.a);
    p = problem.q + problem.a.transpose() * p * (problem.a + problem.b * gain);
    p = 0.5 * (p + p.transpose());
    sol.gains[t] = gain;
    sol.cost_to_go[t] = p;
  }
  sol.optimal_cost = 0.5 * problem.initial_state.dot(sol.cost_to_go[0] * problem.initial_state);
  return sol;
}

nlohmann::json to_json(const LinearGaussianPolicy& policy) {
  nlohmann::json steps = nlohmann::json::array();
  for (int t = 0; t < policy.horizon(); ++t) {
    const Vector& ff = policy.feedforward(t);
    steps.push_back({{"feedforward", std::vector<double>(ff.begin(), ff.end())},
                     {"gain", matrix_to_json(policy.gain(t))},
                     {"covariance", matrix_to_json(policy.covariance(t))}});
  }
  return {{"horizon", policy.horizon()},
          {"state_dim", policy.state_dim()},
          {"control_dim", policy.control_dim()},
          {"steps", steps}};
}

LinearGaussianPolicy policy_from_json(const nlohmann::json& j) {
  const int horizon = j.at("horizon").get<int>();
  const int n = j.at("state_dim").get<int>();
  const int m = j.at("control_dim").get<int>();
  const auto& steps = j.at("steps");
  if (horizon < 1 || n < 1 || m < 1 || !steps.is_array() || static_cast<int>(steps.size()) != horizon) {
    throw ConfigError("policy: horizon/dimensions do not match the step list");
  }
  std::vector<Vector> ff;
  std::vector<Matrix> gains;
  std::vector<Matrix> covs;
  for (const auto& step : steps) {
    const auto u = step.at("feedforward").get<std::vector<double>>();
    if (static_cast<int>(u.size()) != m) {
      throw ConfigError("policy.feedforward: wrong length");
    }
    ff.emplace_back(Eigen::Map<const Vector>(u.data(), m));
    gains.push_back(matrix_from_json(step.at("gain"), m, n, "gain"));
    covs.push_back(matrix_from_json(step.at("covariance"), m, m, "covariance"));
  }
  return LinearGaussianPolicy(std::move(ff), std::move(gains), std::move(covs));
}

void write_trace(std::ostream& out, const RolloutBatch& batch) {
  for (int k = 0; k < batch.samples(); ++k) {
    const auto idx = static_cast<std::size_t>(k);
    nlohmann::json line = {{"k", k},
                           {"states", matrix_to_json(batch.states[idx].transpose())},
                           {"controls", matrix_to_json(batch.controls[idx].transpose())},
                           {"noises", matrix_to_json(batch.noises[idx].transpose())}};
    out << line.dump() << '\n';
  }
}

}  // namespace pictraj
