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

#ifndef PICTRAJ_WEIGHTS_HPP
#define PICTRAJ_WEIGHTS_HPP

#include <span>

#include <json.hpp>

#include "pictraj/common.hpp"

namespace pictraj {

enum class WeightGrouping { kGlobal, kPerTimestep };

/// Normalized importance weights w ∝ exp(-P).
///
/// `weights` is K x G: one column per normalization group (G = 1 for global
/// weights, G = T for per-timestep weights). `raw` keeps the P values.
struct WeightVector {
  Matrix weights;
  Matrix raw;
  Vector ess;  ///< (sum w)^2 / sum w^2 per group
  WeightGrouping grouping = WeightGrouping::kGlobal;

  std::size_t samples() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t groups() const { return static_cast<std::size_t>(weights.cols()); }
  /// Weight column used for timestep t (column 0 for global weights).
  Eigen::Ref<const Vector> for_timestep(std::size_t t) const;
  /// Mean ESS across groups.
  double mean_ess() const { return ess.mean(); }
  double min_ess() const { return ess.minCoeff(); }
};

/// Effective sample size of a weight column.
double effective_sample_size(const Eigen::Ref<const Vector>& w);

/// Softmax of -P with min-shift. P may contain +inf (zero weight) but no NaN
/// or -inf; a column with every entry +inf is an error.
WeightVector normalize_weights(std::span<const double> p);

/// Per-column normalization of a K x T matrix of P values.
WeightVector normalize_weights(const Matrix& p, WeightGrouping grouping);

nlohmann::json to_json(const WeightVector& w);
WeightVector weights_from_json(const nlohmann::json& j);

}  // namespace pictraj

#endif  // PICTRAJ_WEIGHTS_HPP
