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

#ifndef PICTRAJ_ERES_HPP
#define PICTRAJ_ERES_HPP

/**
 * \file
 * \brief Entropy-regularized evolutionary strategy over Gaussian search distributions.
 *
 * Each generation draws K samples from N(mean, covariance) and reweights them
 * with w_k ∝ exp(-(f(x_k) - gamma/2 |x_k - mean|^2_{cov^-1}) / (lambda + gamma)).
 * The mean moves by the weighted sample offset; the covariance becomes the
 * weighted second moment about the previous mean. In the exact-expectation
 * limit the sequence converges to exp(-f/gamma).
 */

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "pictraj/common.hpp"
#include "pictraj/weights.hpp"

namespace pictraj::es {

inline constexpr double kCovarianceFloor = 1e-9;

/// Gaussian search distribution; the covariance is kept symmetric positive definite.
class SearchDistribution {
 public:
  SearchDistribution(Vector mean, Matrix covariance);

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  Eigen::Index dimension() const { return mean_.size(); }
  /// 0.5 * log det covariance.
  double entropy_proxy() const { return half_log_det(covariance_); }

 private:
  Vector mean_;
  Matrix covariance_;
};

struct EsConfig {
  double lambda = 1.0;
  double gamma = 0.0;
  int population = 16;
  std::uint64_t seed = 0;
  int threads = 1;  ///< objective evaluations in flight per generation

  void validate() const;
};

WeightVector es_weights(const std::vector<Vector>& samples, std::span<const double> f_values,
                        const SearchDistribution& dist, const EsConfig& cfg);

SearchDistribution es_update(const std::vector<Vector>& samples, std::span<const double> f_values,
                             const SearchDistribution& dist, const EsConfig& cfg);

/// Sample k of generation g; a pure function of (seed, g, k).
Vector es_sample(const SearchDistribution& dist, std::uint64_t seed, int generation, int k);

struct EsGeneration {
  int generation = 0;
  SearchDistribution distribution;
  double best_f = 0.0;
  double mean_f = 0.0;
  double ess = 0.0;
  bool weight_collapse = false;  ///< ESS < 2
};

using Objective = std::function<double(const Vector&)>;

/// Runs `generations` updates. Row g holds the distribution of generation g
/// and statistics of the population sampled from it.
std::vector<EsGeneration> es_run(const Objective& objective, const SearchDistribution& init,
                                 const EsConfig& cfg, int generations);

/// generation, mean_0..mean_{d-1}, cov_trace, best_f, mean_f, ess, entropy_proxy
void write_history_csv(std::ostream& out, const std::vector<EsGeneration>& history);

}  // namespace pictraj::es

#endif  // PICTRAJ_ERES_HPP
