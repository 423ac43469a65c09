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

#include "pictraj/pic_core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace pictraj {

namespace {

void check_erpic_params(double lambda, double gamma) {
  if (!(lambda >= 0.0) || !(gamma >= 0.0) || !(lambda + gamma > 0.0)) {
    throw ConfigError("ERPIC: need lambda >= 0, gamma >= 0, lambda + gamma > 0");
  }
}

void check_common_state(const RolloutBatch& batch, int t, const char* what) {
  if (t < 0 || t >= batch.horizon()) {
    throw ConfigError(std::string(what) + ": timestep out of range");
  }
  const Vector x = batch.state(0, t);
  for (int k = 1; k < batch.samples(); ++k) {
    if (batch.state(k, t) != x) {
      throw ConfigError(std::string(what) + ": trajectories do not share the state at t=" + std::to_string(t));
    }
  }
}

MomentUpdate weighted_noise_moments(const RolloutBatch& batch, const Eigen::Ref<const Vector>& w, int t) {
  const int m = batch.policy.control_dim();
  MomentUpdate out{Vector::Zero(m), Matrix::Zero(m, m), Vector::Zero(m)};
  for (int k = 0; k < batch.samples(); ++k) {
    const Vector xi = batch.noise(k, t);
    out.mean_shift += w[k] * xi;
    out.covariance += w[k] * xi * xi.transpose();
  }
  out.covariance -= out.mean_shift * out.mean_shift.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  for (int k = 0; k < batch.samples(); ++k) {
    const Vector centered = batch.noise(k, t) - out.mean_shift;
    out.standard_error += (w[k] * w[k]) * centered.cwiseProduct(centered);
  }
  out.standard_error = out.standard_error.cwiseSqrt();
  return out;
}

}  // namespace

std::string to_string(PicMethod method) {
  switch (method) {
    case PicMethod::kSepic:
      return "SEPIC";
    case PicMethod::kPireps:
      return "PIREPS";
    case PicMethod::kErpic:
      return "ERPIC";
    case PicMethod::kErpicTemporal:
      return "ERPIC_TEMPORAL";
  }
  return "?";
}

PicMethod parse_pic_method(const std::string& name) {
  std::string key;
  for (char c : name) {
    key.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  if (key == "SEPIC") return PicMethod::kSepic;
  if (key == "PIREPS") return PicMethod::kPireps;
  if (key == "ERPIC") return PicMethod::kErpic;
  if (key == "ERPIC_TEMPORAL") return PicMethod::kErpicTemporal;
  throw ConfigError("unknown PIC method '" + name + "'");
}

void PicConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("pic.lambda: must be finite and >= 0");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("pic.gamma: must be finite and >= 0");
  }
  if (fits_covariance() && !(lambda + gamma > 0.0)) {
    throw ConfigError("pic.lambda: lambda + gamma must be > 0 for ERPIC methods");
  }
  if (samples < 2) {
    throw ConfigError("pic.samples: must be >= 2");
  }
  if (!(ridge >= 0.0)) {
    throw ConfigError("pic.ridge: must be >= 0");
  }
  if (!(cov_floor > 0.0)) {
    throw ConfigError("pic.cov_floor: must be > 0");
  }
}

Vector p_sepic(const RolloutBatch& batch, const CostFunction& cost, const LinearGaussianPolicy& policy,
               bool mean_includes_feedback) {
  if (!cost.state_only_running || !cost.terminal) {
    throw ConfigError("SEPIC: the cost must provide state-only running and terminal rates");
  }
  if (policy.horizon() != batch.horizon()) {
    throw ConfigError("SEPIC: policy horizon does not match the batch");
  }
  const int horizon = batch.horizon();
  std::vector<Eigen::LLT<Matrix>> factors;
  factors.reserve(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    factors.emplace_back(policy.covariance(t));
  }
  const auto& state_cost = *cost.state_only_running;
  Vector p(batch.samples());
  for (int k = 0; k < batch.samples(); ++k) {
    double total = cost.terminal(batch.state(k, horizon));
    for (int t = 0; t < horizon; ++t) {
      const Vector x = batch.state(k, t);
      const Vector du = batch.noise(k, t);
      const Vector mean = mean_includes_feedback ? policy.mean(t, x) : policy.feedforward(t);
      const Vector shifted = mean + du;
      const auto& llt = factors[static_cast<std::size_t>(t)];
      total += state_cost(t, x) + 0.5 * shifted.dot(llt.solve(shifted)) - 0.5 * du.dot(llt.solve(du));
    }
    if (!std::isfinite(total)) {
      throw NumericalError("SEPIC: non-finite P on trajectory k=" + std::to_string(k));
    }
    p[k] = total;
  }
  return p;
}

Vector p_pireps(const RolloutBatch& batch, const CostFunction& cost, const LinearGaussianPolicy& policy,
                double lambda, bool mean_includes_feedback) {
  if (!(lambda >= 0.0)) {
    throw ConfigError("PIREPS: lambda must be >= 0");
  }
  return p_sepic(batch, cost, policy, mean_includes_feedback) / (1.0 + lambda);
}

Matrix p_erpic_temporal_from_costs(const Matrix& step_costs, const Matrix& noise_penalty, double lambda,
                                   double gamma) {
  check_erpic_params(lambda, gamma);
  const Eigen::Index horizon = noise_penalty.cols();
  if (step_costs.rows() != noise_penalty.rows() || step_costs.cols() != horizon + 1) {
    throw ConfigError("ERPIC: cost and noise matrices have inconsistent shapes");
  }
  const double total = lambda + gamma;
  const double discount = gamma / total;
  Matrix p(step_costs.rows(), horizon);
  for (Eigen::Index k = 0; k < step_costs.rows(); ++k) {
    double tail_cost = step_costs(k, horizon);
    double tail_noise = 0.0;
    for (Eigen::Index t = horizon; t-- > 0;) {
      tail_cost += step_costs(k, t);
      tail_noise += noise_penalty(k, t);
      p(k, t) = tail_cost / total - discount * tail_noise;
    }
  }
  if (!p.allFinite()) {
    throw NumericalError("ERPIC: non-finite P");
  }
  return p;
}

Matrix p_erpic_temporal(const RolloutBatch& batch, const CostFunction& cost, double lambda, double gamma) {
  check_erpic_params(lambda, gamma);
  return p_erpic_temporal_from_costs(per_step_costs(batch, cost), noise_penalties(batch), lambda, gamma);
}

Vector p_erpic(const RolloutBatch& batch, const CostFunction& cost, double lambda, double gamma) {
  return p_erpic_temporal(batch, cost, lambda, gamma).col(0);
}

WeightVector pic_weights(const RolloutBatch& batch, const CostFunction& cost, const PicConfig& cfg) {
  cfg.validate();
  switch (cfg.method) {
    case PicMethod::kSepic: {
      const Vector p = p_sepic(batch, cost, batch.policy, cfg.sepic_mean_includes_feedback);
      return normalize_weights(Matrix(p), WeightGrouping::kGlobal);
    }
    case PicMethod::kPireps: {
      const Vector p = p_pireps(batch, cost, batch.policy, cfg.lambda, cfg.sepic_mean_includes_feedback);
      return normalize_weights(Matrix(p), WeightGrouping::kGlobal);
    }
    case PicMethod::kErpic: {
      const Vector p = p_erpic(batch, cost, cfg.lambda, cfg.gamma);
      return normalize_weights(Matrix(p), WeightGrouping::kGlobal);
    }
    case PicMethod::kErpicTemporal:
      return normalize_weights(p_erpic_temporal(batch, cost, cfg.lambda, cfg.gamma), WeightGrouping::kPerTimestep);
  }
  throw ConfigError("unknown PIC method");
}

LinearGaussianPolicy fit_policy(const RolloutBatch& batch, const WeightVector& w, const LinearGaussianPolicy& prev,
                                const PicConfig& cfg) {
  cfg.validate();
  const int samples = batch.samples();
  const int horizon = batch.horizon();
  if (samples < 2) {
    throw ConfigError("fit_policy: need at least 2 trajectories");
  }
  if (prev.horizon() != horizon || prev.state_dim() != batch.policy.state_dim() ||
      prev.control_dim() != batch.policy.control_dim()) {
    throw ConfigError("fit_policy: previous policy does not match the batch");
  }
  if (static_cast<int>(w.samples()) != samples) {
    throw ConfigError("fit_policy: weight count does not match the batch");
  }
  if (w.grouping == WeightGrouping::kPerTimestep && static_cast<int>(w.groups()) != horizon) {
    throw ConfigError("fit_policy: per-timestep weights must have one column per timestep");
  }
  const Eigen::Index n = prev.state_dim();
  const Eigen::Index m = prev.control_dim();

  std::vector<Vector> feedforward;
  std::vector<Matrix> gains;
  std::vector<Matrix> covariances;
  for (int t = 0; t < horizon; ++t) {
    const auto wt = w.for_timestep(static_cast<std::size_t>(t));
    const Matrix& prev_gain = prev.gain(t);

    // Shared states (always the case at t = 0) must give dx == 0 exactly;
    // averaging K copies of x0 can be off by an ulp and fake a spread.
    bool shared = true;
    for (int k = 1; k < samples && shared; ++k) {
      shared = batch.state(k, t) == batch.state(0, t);
    }
    Vector x_hat = Vector::Zero(n);
    if (shared) {
      x_hat = batch.state(0, t);
    } else {
      for (int k = 0; k < samples; ++k) {
        x_hat += batch.state(k, t);
      }
      x_hat /= static_cast<double>(samples);
    }

    std::vector<Vector> dx(static_cast<std::size_t>(samples));
    std::vector<Vector> du(static_cast<std::size_t>(samples));
    Vector mu_x = Vector::Zero(n);
    Vector mu_u = Vector::Zero(m);
    for (int k = 0; k < samples; ++k) {
      const auto i = static_cast<std::size_t>(k);
      dx[i] = batch.state(k, t) - x_hat;
      du[i] = batch.noise(k, t) + prev_gain * dx[i];
      mu_x += wt[k] * dx[i];
      mu_u += wt[k] * du[i];
    }
    Matrix s_xx = Matrix::Zero(n, n);
    Matrix s_ux = Matrix::Zero(m, n);
    Matrix s_uu = Matrix::Zero(m, m);
    for (int k = 0; k < samples; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const Vector cx = dx[i] - mu_x;
      const Vector cu = du[i] - mu_u;
      s_xx += wt[k] * cx * cx.transpose();
      s_ux += wt[k] * cu * cx.transpose();
      s_uu += wt[k] * cu * cu.transpose();
    }
    s_xx = 0.5 * (s_xx + s_xx.transpose());

    Matrix gain = Matrix::Zero(m, n);
    const double trace = s_xx.trace();
    if (!shared && trace > std::numeric_limits<double>::min()) {
      const Matrix regularized = s_xx + (cfg.ridge * trace / static_cast<double>(n)) * Matrix::Identity(n, n);
      const Eigen::LLT<Matrix> llt(regularized);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("fit_policy: state covariance is singular at t=" + std::to_string(t));
      }
      gain = llt.solve(s_ux.transpose()).transpose();
    }
    Matrix covariance = prev.covariance(t);
    if (cfg.fits_covariance()) {
      covariance = floor_spd(s_uu - gain * s_ux.transpose(), cfg.cov_floor);
    }
    Vector ff = prev.feedforward(t) + prev_gain * x_hat + mu_u - gain * (x_hat + mu_x);
    if (!ff.allFinite() || !gain.allFinite() || !covariance.allFinite()) {
      throw NumericalError("fit_policy: non-finite update at t=" + std::to_string(t));
    }
    feedforward.push_back(std::move(ff));
    gains.push_back(std::move(gain));
    covariances.push_back(std::move(covariance));
  }
  return LinearGaussianPolicy(std::move(feedforward), std::move(gains), std::move(covariances));
}

MomentUpdate mc_open_loop_erto(const RolloutBatch& batch, const CostFunction& cost, double lambda, double gamma,
                               int t) {
  check_common_state(batch, t, "mc_open_loop_erto");
  const Matrix p = p_erpic_temporal(batch, cost, lambda, gamma);
  const WeightVector w = normalize_weights(Matrix(p.col(t)), WeightGrouping::kGlobal);
  return weighted_noise_moments(batch, w.weights.col(0), t);
}

MomentUpdate mc_open_loop_lsoc(const RolloutBatch& free_batch, const CostFunction& state_cost_tail, int t) {
  check_common_state(free_batch, t, "mc_open_loop_lsoc");
  for (int s = 0; s < free_batch.horizon(); ++s) {
    if (!free_batch.policy.feedforward(s).isZero(0.0) || !free_batch.policy.gain(s).isZero(0.0)) {
      throw ConfigError("mc_open_loop_lsoc: batch must be sampled from the free (zero-mean) policy");
    }
  }
  const int horizon = free_batch.horizon();
  if (!state_cost_tail.terminal || (t + 1 < horizon && !state_cost_tail.state_only_running)) {
    throw ConfigError("mc_open_loop_lsoc: state-only running and terminal rates are required");
  }
  Vector tail(free_batch.samples());
  for (int k = 0; k < free_batch.samples(); ++k) {
    double sum = state_cost_tail.terminal(free_batch.state(k, horizon));
    for (int s = t + 1; s < horizon; ++s) {
      sum += (*state_cost_tail.state_only_running)(s, free_batch.state(k, s));
    }
    tail[k] = sum;
  }
  const WeightVector w = normalize_weights(Matrix(tail), WeightGrouping::kGlobal);
  return weighted_noise_moments(free_batch, w.weights.col(0), t);
}

}  // namespace pictraj
