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

// Reference computations used as test oracles. None of these call into the
// library's numerical code; they recompute everything from raw inputs in the
// most direct (and slowest) way available.

#ifndef PICTRAJ_TESTS_ORACLES_HPP
#define PICTRAJ_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pictraj/dynamics.hpp"
#include "pictraj/grid_lab.hpp"

namespace oracle {

using pictraj::Matrix;
using pictraj::Vector;

// Direct-space closed form pi0^a exp(-(1-a) f / gamma) with a = (lambda/(lambda+gamma))^g,
// or pi0 exp(-g f / lambda) when gamma = 0. Plain exponentials, renormalized
// with a long double sum. Only safe for moderate exponents.
inline std::vector<double> closed_form_density(const std::vector<double>& pi0, const std::vector<double>& f,
                                               double lambda, double gamma, int g, double cell_volume) {
  std::vector<long double> raw(pi0.size());
  long double total = 0.0L;
  const long double fmin = *std::min_element(f.begin(), f.end());
  for (std::size_t i = 0; i < pi0.size(); ++i) {
    long double value;
    if (gamma == 0.0) {
      value = pi0[i] * std::exp(-static_cast<long double>(g) * (f[i] - fmin) / lambda);
    } else {
      const long double a = std::pow(static_cast<long double>(lambda) / (lambda + gamma), g);
      value = std::pow(static_cast<long double>(pi0[i]), a) * std::exp(-(1.0L - a) * (f[i] - fmin) / gamma);
    }
    raw[i] = value;
    total += value * cell_volume;
  }
  std::vector<double> out(pi0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(raw[i] / total);
  return out;
}

inline double riemann_mean(const std::vector<double>& density, const std::vector<double>& f, double cell_volume) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < f.size(); ++i) s += static_cast<long double>(density[i]) * f[i] * cell_volume;
  return static_cast<double>(s);
}

inline double riemann_entropy(const std::vector<double>& density, double cell_volume) {
  long double s = 0.0L;
  for (double p : density) {
    if (p > 0.0) s -= static_cast<long double>(p) * std::log(static_cast<long double>(p)) * cell_volume;
  }
  return static_cast<double>(s);
}

// Weighted least squares of u_t on [1, x_t] by column-pivoted QR of the
// sqrt(w)-scaled design. Falls back to intercept only when x_t is shared.
struct WlsFit {
  Vector feedforward;
  Matrix gain;
  Matrix covariance;
};

inline WlsFit wls_fit(const pictraj::RolloutBatch& batch, const Eigen::Ref<const Vector>& w, int t) {
  const int k_count = batch.samples();
  const int n = batch.policy.state_dim();
  const int m = batch.policy.control_dim();
  bool shared = true;
  for (int k = 1; k < k_count && shared; ++k) shared = batch.state(k, t) == batch.state(0, t);
  const int p = shared ? 1 : n + 1;
  Matrix z(k_count, p);
  Matrix y(k_count, m);
  for (int k = 0; k < k_count; ++k) {
    const double s = std::sqrt(w[k]);
    z(k, 0) = s;
    if (!shared) z.row(k).tail(n) = s * batch.state(k, t).transpose();
    y.row(k) = s * batch.control(k, t).transpose();
  }
  const Matrix beta = z.colPivHouseholderQr().solve(y);  // p x m
  WlsFit fit;
  fit.feedforward = beta.row(0).transpose();
  fit.gain = shared ? Matrix::Zero(m, n) : Matrix(beta.bottomRows(n).transpose());
  fit.covariance = Matrix::Zero(m, m);
  for (int k = 0; k < k_count; ++k) {
    const Vector r = batch.control(k, t) - fit.feedforward - fit.gain * batch.state(k, t);
    fit.covariance += w[k] * r * r.transpose();
  }
  return fit;
}

// Open-loop LQ optimum from one dense least-squares solve over the stacked
// controls: x = Phi x0 + Gamma u, cost 0.5 (x'Qbar x + u'Rbar u).
inline double dense_lq_optimum(const pictraj::LinearQuadraticProblem& lq) {
  const int n = static_cast<int>(lq.a.rows());
  const int m = static_cast<int>(lq.b.cols());
  const int horizon = lq.horizon;
  Matrix phi = Matrix::Zero(n * (horizon + 1), n);
  Matrix gam = Matrix::Zero(n * (horizon + 1), m * horizon);
  Matrix power = Matrix::Identity(n, n);
  for (int t = 0; t <= horizon; ++t) {
    phi.block(t * n, 0, n, n) = power;
    power = lq.a * power;
  }
  for (int t = 1; t <= horizon; ++t) {
    for (int s = 0; s < t; ++s) {
      Matrix ap = Matrix::Identity(n, n);
      for (int i = 0; i < t - 1 - s; ++i) ap = lq.a * ap;
      gam.block(t * n, s * m, n, m) = ap * lq.b;
    }
  }
  Matrix qbar = Matrix::Zero(n * (horizon + 1), n * (horizon + 1));
  Matrix rbar = Matrix::Zero(m * horizon, m * horizon);
  for (int t = 0; t < horizon; ++t) {
    qbar.block(t * n, t * n, n, n) = lq.q;
    rbar.block(t * m, t * m, m, m) = lq.r;
  }
  qbar.block(horizon * n, horizon * n, n, n) = lq.q_terminal;
  const Vector free = phi * lq.initial_state;
  const Matrix h = rbar + gam.transpose() * qbar * gam;
  const Vector u = h.ldlt().solve(-gam.transpose() * qbar * free);
  const Vector x = free + gam * u;
  return 0.5 * (x.dot(qbar * x) + u.dot(rbar * u));
}

// One-step scalar problem x1 = x0 + u, u = u0 + xi, xi ~ N(0, s2),
// running cost 0.5 r u^2, terminal 0.5 q x1^2. The tilted noise density
// N(xi; 0, s2) exp(-P) is Gaussian; these are its mean and variance.
struct Gaussian1 {
  double mean;
  double variance;
};

// Free-noise path integral target: exp(-0.5 q (x0 + xi)^2) N(xi; 0, s2).
inline Gaussian1 lsoc_target(double x0, double s2, double q) {
  const double precision = 1.0 / s2 + q;
  return {-q * x0 / precision, 1.0 / precision};
}

// Entropy-regularized target: N(xi; 0, s2)^{lambda/(lambda+gamma)} exp(-R/(lambda+gamma)).
inline Gaussian1 erto_target(double x0, double u0, double s2, double r, double q, double lambda, double gamma) {
  const double eta = lambda + gamma;
  const double precision = lambda / (eta * s2) + (r + q) / eta;
  const double linear = -(r * u0 + q * (x0 + u0)) / eta;
  return {linear / precision, 1.0 / precision};
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle

#endif  // PICTRAJ_TESTS_ORACLES_HPP
