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

#ifndef PICTRAJ_PIC_CORE_HPP
#define PICTRAJ_PIC_CORE_HPP

/**
 * \file
 * \brief Path integral control weightings and locally linear Gaussian policy fits.
 *
 * Every method weighs sampled trajectories by w^k = exp(-P(tau^k)) and then
 * refits the policy by weighted maximum likelihood. The methods differ only
 * in P:
 *
 *  - SEPIC:  l_T + sum l_t + sum 0.5|m_t + du_t|^2_{R_t} - sum 0.5|du_t|^2_{R_t}
 *  - PIREPS: P_SEPIC / (1 + lambda)
 *  - ERPIC:  R / (lambda + gamma) - gamma / (lambda + gamma) * sum 0.5|du_t|^2_{R_t}
 *  - ERPIC (temporal): the ERPIC expression restricted to the tail t' >= t
 *
 * with R_t = Sigma_t^{-1} taken from the sampling policy.
 */

#include <optional>
#include <string>

#include "pictraj/common.hpp"
#include "pictraj/dynamics.hpp"
#include "pictraj/weights.hpp"

namespace pictraj {

enum class PicMethod { kSepic, kPireps, kErpic, kErpicTemporal };

std::string to_string(PicMethod method);
/// Accepts SEPIC, PIREPS, ERPIC, ERPIC_TEMPORAL (case-insensitive, '-' or '_').
PicMethod parse_pic_method(const std::string& name);

struct PicConfig {
  PicMethod method = PicMethod::kErpicTemporal;
  double lambda = 1.0;
  double gamma = 0.0;
  int samples = 64;
  /// Relative Tikhonov factor; the regularizer is ridge * trace(S_xx) / state_dim.
  double ridge = 1e-8;
  double cov_floor = 1e-9;
  /// In P_SEPIC, measure |m_t + du_t| with m_t = u_t + K_t x_t rather than u_t.
  bool sepic_mean_includes_feedback = true;

  void validate() const;
  /// Only the ERPIC variants refit the covariance; the LSOC variants tie it
  /// to the control penalty and keep it fixed.
  bool fits_covariance() const { return method == PicMethod::kErpic || method == PicMethod::kErpicTemporal; }
};

Vector p_sepic(const RolloutBatch& batch, const CostFunction& cost, const LinearGaussianPolicy& policy,
               bool mean_includes_feedback = true);

Vector p_pireps(const RolloutBatch& batch, const CostFunction& cost, const LinearGaussianPolicy& policy,
                double lambda, bool mean_includes_feedback = true);

Vector p_erpic(const RolloutBatch& batch, const CostFunction& cost, double lambda, double gamma);

/// K x T matrix of tail-restricted ERPIC values; column 0 equals p_erpic.
Matrix p_erpic_temporal(const RolloutBatch& batch, const CostFunction& cost, double lambda, double gamma);

/// ERPIC from precomputed per-step costs (K x (T+1), terminal in the last
/// column). Lets callers supply any cost representation with the same
/// per-step totals, e.g. state-transition costs c_t(x_t, x_{t+1}).
Matrix p_erpic_temporal_from_costs(const Matrix& step_costs, const Matrix& noise_penalty, double lambda,
                                   double gamma);

/// Weights for `cfg.method`: global for SEPIC/PIREPS/ERPIC, per-timestep for ERPIC_TEMPORAL.
WeightVector pic_weights(const RolloutBatch& batch, const CostFunction& cost, const PicConfig& cfg);

/// Weighted maximum-likelihood refit of a locally linear Gaussian policy.
///
/// For each t, with x-hat the empirical mean of x_t and dx = x_t - x-hat,
/// du = du_t + K_t dx, the weighted means (mu_u, mu_x) and weighted
/// covariances (S_uu, S_ux, S_xx) give
///
///   K'     = S_ux (S_xx + ridge I)^{-1}
///   Sigma' = S_uu - K' S_xu               (eigenvalue floored)
///   u'     = u_t + K_t x-hat + mu_u - K' (x-hat + mu_x)
///
/// When S_xx vanishes (every trajectory shares x_t, as at t = 0) K' = 0 and
/// the update reduces to the open-loop moment match.
LinearGaussianPolicy fit_policy(const RolloutBatch& batch, const WeightVector& w, const LinearGaussianPolicy& prev,
                                const PicConfig& cfg);

struct MomentUpdate {
  Vector mean_shift;
  Matrix covariance;
  Vector standard_error;  ///< self-normalized IS standard error of mean_shift
};

/// Weighted moments of the noise at time t under the tail ERPIC weights.
/// Requires every trajectory to share the state at time t.
MomentUpdate mc_open_loop_erto(const RolloutBatch& batch, const CostFunction& cost, double lambda, double gamma,
                               int t);

/// Path-integral estimate E[xi exp(-L)] / E[exp(-L)] at time t from a batch
/// sampled with zero feedforward and gain, where L is the state-only cost
/// accumulated after t (l_{t'} for t' > t plus the terminal cost).
MomentUpdate mc_open_loop_lsoc(const RolloutBatch& free_batch, const CostFunction& state_cost_tail, int t);

}  // namespace pictraj

#endif  // PICTRAJ_PIC_CORE_HPP
