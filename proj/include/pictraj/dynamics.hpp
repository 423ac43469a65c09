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

#ifndef PICTRAJ_DYNAMICS_HPP
#define PICTRAJ_DYNAMICS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pictraj/common.hpp"

namespace pictraj {

/// Deterministic control-affine dynamics x' = a(x) + B(x) u over a fixed horizon.
struct ControlAffineSystem {
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  int horizon = 0;
  std::function<Vector(const Vector&)> drift;
  std::function<Matrix(const Vector&)> input_map;
  Vector initial_state;

  void validate() const;
  Vector step(const Vector& x, const Vector& u) const { return drift(x) + input_map(x) * u; }
};

/// Cost rates r_t(x, u) and r_T(x). `state_only_running` is l_t(x), required
/// by the SEPIC/PIREPS weightings where control effort is penalized through
/// the policy covariance instead.
struct CostFunction {
  std::function<double(int, const Vector&, const Vector&)> running;
  std::function<double(const Vector&)> terminal;
  std::optional<std::function<double(int, const Vector&)>> state_only_running;
};

/// pi(u | t, x) = N(u | feedforward[t] + gain[t] x, covariance[t]).
class LinearGaussianPolicy {
 public:
  LinearGaussianPolicy(std::vector<Vector> feedforward, std::vector<Matrix> gain, std::vector<Matrix> covariance);

  /// Zero feedforward and gain with covariance sigma2 * I at every step.
  static LinearGaussianPolicy isotropic(int horizon, int state_dim, int control_dim, double sigma2);

  int horizon() const { return static_cast<int>(feedforward_.size()); }
  int state_dim() const { return static_cast<int>(gain_.front().cols()); }
  int control_dim() const { return static_cast<int>(feedforward_.front().size()); }

  const Vector& feedforward(int t) const { return feedforward_[static_cast<std::size_t>(t)]; }
  const Matrix& gain(int t) const { return gain_[static_cast<std::size_t>(t)]; }
  const Matrix& covariance(int t) const { return covariance_[static_cast<std::size_t>(t)]; }

  Vector mean(int t, const Vector& x) const { return feedforward(t) + gain(t) * x; }
  /// 0.5 * log det covariance(t).
  double entropy_proxy(int t) const { return half_log_det(covariance(t)); }

  bool operator==(const LinearGaussianPolicy&) const = default;

 private:
  std::vector<Vector> feedforward_;
  std::vector<Matrix> gain_;
  std::vector<Matrix> covariance_;
};

/// K trajectories sampled from one policy.
///
/// states[k] is state_dim x (T+1), controls[k] and noises[k] are
/// control_dim x T. The sampling policy is kept so that noise norms
/// |du|^2_{Sigma_t^{-1}} can be formed later without it being passed around.
struct RolloutBatch {
  std::vector<Matrix> states;
  std::vector<Matrix> controls;
  std::vector<Matrix> noises;
  LinearGaussianPolicy policy;
  std::uint64_t seed = 0;

  int samples() const { return static_cast<int>(states.size()); }
  int horizon() const { return policy.horizon(); }
  Vector state(int k, int t) const { return states[static_cast<std::size_t>(k)].col(t); }
  Vector control(int k, int t) const { return controls[static_cast<std::size_t>(k)].col(t); }
  Vector noise(int k, int t) const { return noises[static_cast<std::size_t>(k)].col(t); }
};

struct RolloutOptions {
  bool zero_noise = false;  ///< force every noise draw to 0
  int threads = 1;
};

/// Samples K trajectories from x0 under `policy`; trajectory k uses the RNG
/// substream (seed, k) so the result does not depend on `options.threads`.
RolloutBatch rollout(const ControlAffineSystem& system, const LinearGaussianPolicy& policy, int samples,
                     std::uint64_t seed, const RolloutOptions& options = {});

/// K x (T+1) matrix: columns 0..T-1 hold r_t(x_t, u_t), column T holds r_T(x_T).
Matrix per_step_costs(const RolloutBatch& batch, const CostFunction& cost);

/// R(tau) = r_T(x_T) + sum_t r_t(x_t, u_t) for every trajectory.
Vector path_cost(const RolloutBatch& batch, const CostFunction& cost);

/// K x T matrix of 0.5 |du_t|^2_{Sigma_t^{-1}} using the batch's sampling policy.
Matrix noise_penalties(const RolloutBatch& batch);

/// Linear dynamics with quadratic cost: r_t = 0.5 (x'Qx + u'Ru), r_T = 0.5 x'Q_T x.
struct LinearQuadraticProblem {
  Matrix a;
  Matrix b;
  Matrix q;
  Matrix r;
  Matrix q_terminal;
  int horizon = 0;
  Vector initial_state;

  ControlAffineSystem system(std::string name = "linear") const;
  CostFunction cost() const;
};

struct LqrSolution {
  std::vector<Matrix> gains;        ///< u_t = feedforward[t] + gains[t] x_t
  std::vector<Vector> feedforward;  ///< zero for this cost class
  std::vector<Matrix> cost_to_go;   ///< V_t(x) = 0.5 x' P_t x, t = 0..T
  double optimal_cost = 0.0;        ///< V_0(x0)
};

/// Finite-horizon discrete Riccati recursion.
LqrSolution lqr_reference(const LinearQuadraticProblem& problem);

struct Benchmark {
  std::string id;
  ControlAffineSystem system;
  CostFunction cost;
  LinearGaussianPolicy initial_policy;
  std::optional<LinearQuadraticProblem> linear_quadratic;
};

/// "double-integrator", "pendulum" or "scalar-lqr"; ConfigError otherwise.
Benchmark make_benchmark(const std::string& id);
std::vector<std::string> benchmark_ids();

nlohmann::json to_json(const LinearGaussianPolicy& policy);
LinearGaussianPolicy policy_from_json(const nlohmann::json& j);

/// One JSON object per trajectory: {"k", "states", "controls", "noises"}.
void write_trace(std::ostream& out, const RolloutBatch& batch);

}  // namespace pictraj

#endif  // PICTRAJ_DYNAMICS_HPP
