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

#include "pictraj/eres.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace pictraj::es {

namespace {

void check_batch(const std::vector<Vector>& samples, std::span<const double> f_values,
                 const SearchDistribution& dist) {
  if (samples.empty() || samples.size() != f_values.size()) {
    throw ConfigError("es: samples and f_values must be non-empty and of equal length");
  }
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].size() != dist.dimension()) {
      throw ConfigError("es: sample dimension does not match the search distribution");
    }
    if (!std::isfinite(f_values[k])) {
      std::ostringstream msg;
      msg << "es: non-finite objective value at sample " << k;
      throw NumericalError(msg.str());
    }
  }
}

}  // namespace

SearchDistribution::SearchDistribution(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (mean_.size() == 0 || covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
    throw ConfigError("search distribution: mean/covariance dimensions disagree");
  }
  if (!mean_.allFinite() || !is_spd(covariance_)) {
    throw ConfigError("search distribution: covariance must be symmetric positive definite");
  }
}

void EsConfig::validate() const {
  if (!(lambda >= 0.0) || !(gamma >= 0.0) || !(lambda + gamma > 0.0)) {
    throw ConfigError("es: need lambda >= 0, gamma >= 0, lambda + gamma > 0");
  }
  if (population < 2) {
    throw ConfigError("es: population must be >= 2");
  }
}

WeightVector es_weights(const std::vector<Vector>& samples, std::span<const double> f_values,
                        const SearchDistribution& dist, const EsConfig& cfg) {
  cfg.validate();
  check_batch(samples, f_values, dist);
  const Eigen::LLT<Matrix> llt(dist.covariance());
  if (llt.info() != Eigen::Success) {
    throw NumericalError("es: singular search covariance");
  }
  const double total = cfg.lambda + cfg.gamma;
  std::vector<double> p(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Vector offset = samples[k] - dist.mean();
    const double mahalanobis = cfg.gamma > 0.0 ? offset.dot(llt.solve(offset)) : 0.0;
    p[k] = (f_values[k] - 0.5 * cfg.gamma * mahalanobis) / total;
  }
  return normalize_weights(p);
}

SearchDistribution es_update(const std::vector<Vector>& samples, std::span<const double> f_values,
                             const SearchDistribution& dist, const EsConfig& cfg) {
  const WeightVector w = es_weights(samples, f_values, dist, cfg);
  const Eigen::Index d = dist.dimension();
  Vector shift = Vector::Zero(d);
  Matrix second_moment = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double wk = w.weights(static_cast<Eigen::Index>(k), 0);
    const Vector offset = samples[k] - dist.mean();
    shift += wk * offset;
    second_moment += wk * offset * offset.transpose();
  }
  if (!shift.allFinite() || !second_moment.allFinite()) {
    throw NumericalError("es: non-finite covariance update");
  }
  return SearchDistribution(dist.mean() + shift, floor_spd(second_moment, kCovarianceFloor));
}

Vector es_sample(const SearchDistribution& dist, std::uint64_t seed, int generation, int k) {
  auto rng = substream(seed, static_cast<std::uint64_t>(generation), static_cast<std::uint64_t>(k));
  Vector z(dist.dimension());
  fill_standard_normal(rng, z);
  const Eigen::LLT<Matrix> llt(dist.covariance());
  return dist.mean() + llt.matrixL() * z;
}

std::vector<EsGeneration> es_run(const Objective& objective, const SearchDistribution& init,
                                 const EsConfig& cfg, int generations) {
  cfg.validate();
  if (generations < 0) {
    throw ConfigError("es: generations must be >= 0");
  }
  if (cfg.population < init.dimension() + 1) {
    log_warning("es: population smaller than dimension + 1; covariance estimates are rank deficient");
  }
  std::vector<EsGeneration> history;
  history.reserve(static_cast<std::size_t>(generations) + 1);
  SearchDistribution current = init;
  const auto k_count = static_cast<std::size_t>(cfg.population);
  for (int g = 0; g <= generations; ++g) {
    try {
      std::vector<Vector> samples(k_count);
      std::vector<double> f_values(k_count);
      for (std::size_t k = 0; k < k_count; ++k) {
        samples[k] = es_sample(current, cfg.seed, g, static_cast<int>(k));
      }
      parallel_for(k_count, cfg.threads, [&](std::size_t k) { f_values[k] = objective(samples[k]); });

      const WeightVector w = es_weights(samples, f_values, current, cfg);
      EsGeneration row{g, current, *std::min_element(f_values.begin(), f_values.end()), 0.0,
                       w.ess[0], w.ess[0] < 2.0};
      for (double f : f_values) {
        row.mean_f += f / static_cast<double>(k_count);
      }
      if (row.weight_collapse) {
        std::ostringstream msg;
        msg << "es: effective sample size " << row.ess << " < 2 at generation " << g;
        log_warning(msg.str());
      }
      history.push_back(row);
      if (g < generations) {
        current = es_update(samples, f_values, current, cfg);
      }
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "es generation " << g << ": " << e.what();
      throw NumericalError(msg.str());
    }
  }
  return history;
}

void write_history_csv(std::ostream& out, const std::vector<EsGeneration>& history) {
  if (history.empty()) {
    return;
  }
  const Eigen::Index d = history.front().distribution.dimension();
  out << "generation";
  for (Eigen::Index i = 0; i < d; ++i) {
    out << ",mean_" << i;
  }
  out << ",cov_trace,best_f,mean_f,ess,entropy_proxy\n";
  out << std::setprecision(17);
  for (const auto& row : history) {
    out << row.generation;
    for (Eigen::Index i = 0; i < d; ++i) {
      out << ',' << row.distribution.mean()[i];
    }
    out << ',' << row.distribution.covariance().trace() << ',' << row.best_f << ',' << row.mean_f << ','
        << row.ess << ',' << row.distribution.entropy_proxy() << '\n';
  }
}

}  // namespace pictraj::es
