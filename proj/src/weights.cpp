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

#include "pictraj/weights.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pictraj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void normalize_column(const Eigen::Ref<const Vector>& p, Eigen::Ref<Vector> w, std::size_t group) {
  double min_p = kInf;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (std::isnan(p[k]) || p[k] == -kInf) {
      std::ostringstream msg;
      msg << "normalize_weights: non-finite P at sample " << k << ", group " << group;
      throw NumericalError(msg.str());
    }
    min_p = std::min(min_p, p[k]);
  }
  if (min_p == kInf) {
    std::ostringstream msg;
    msg << "normalize_weights: every P is +inf in group " << group;
    throw NumericalError(msg.str());
  }
  double sum = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    w[k] = std::exp(-(p[k] - min_p));
    sum += w[k];
  }
  w /= sum;
}

std::string grouping_name(WeightGrouping g) {
  return g == WeightGrouping::kGlobal ? "global" : "per-timestep";
}

}  // namespace

Eigen::Ref<const Vector> WeightVector::for_timestep(std::size_t t) const {
  if (grouping == WeightGrouping::kGlobal) {
    return weights.col(0);
  }
  if (t >= groups()) {
    throw ConfigError("weights: timestep out of range");
  }
  return weights.col(static_cast<Eigen::Index>(t));
}

double effective_sample_size(const Eigen::Ref<const Vector>& w) {
  const double sum = w.sum();
  const double sum_sq = w.squaredNorm();
  return sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
}

WeightVector normalize_weights(std::span<const double> p) {
  const Matrix column = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
  return normalize_weights(column, WeightGrouping::kGlobal);
}

WeightVector normalize_weights(const Matrix& p, WeightGrouping grouping) {
  if (p.rows() < 1 || p.cols() < 1) {
    throw ConfigError("normalize_weights: empty input");
  }
  if (grouping == WeightGrouping::kGlobal && p.cols() != 1) {
    throw ConfigError("normalize_weights: global grouping takes a single column");
  }
  WeightVector out;
  out.grouping = grouping;
  out.raw = p;
  out.weights.resize(p.rows(), p.cols());
  out.ess.resize(p.cols());
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    Vector w(p.rows());
    normalize_column(p.col(c), w, static_cast<std::size_t>(c));
    out.weights.col(c) = w;
    out.ess[c] = effective_sample_size(w);
  }
  return out;
}

nlohmann::json to_json(const WeightVector& w) {
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json raw = nlohmann::json::array();
  for (Eigen::Index c = 0; c < w.weights.cols(); ++c) {
    weights.push_back(std::vector<double>(w.weights.col(c).begin(), w.weights.col(c).end()));
    raw.push_back(std::vector<double>(w.raw.col(c).begin(), w.raw.col(c).end()));
  }
  return {{"grouping", grouping_name(w.grouping)},
          {"weights", weights},
          {"raw", raw},
          {"ess", std::vector<double>(w.ess.begin(), w.ess.end())}};
}

WeightVector weights_from_json(const nlohmann::json& j) {
  WeightVector w;
  const auto grouping = j.at("grouping").get<std::string>();
  if (grouping == "global") {
    w.grouping = WeightGrouping::kGlobal;
  } else if (grouping == "per-timestep") {
    w.grouping = WeightGrouping::kPerTimestep;
  } else {
    throw ConfigError("weights.grouping: unknown value '" + grouping + "'");
  }
  const auto columns = j.at("weights").get<std::vector<std::vector<double>>>();
  const auto raw = j.at("raw").get<std::vector<std::vector<double>>>();
  const auto ess = j.at("ess").get<std::vector<double>>();
  if (columns.empty() || raw.size() != columns.size() || ess.size() != columns.size()) {
    throw ConfigError("weights: inconsistent group counts");
  }
  const auto rows = static_cast<Eigen::Index>(columns.front().size());
  w.weights.resize(rows, static_cast<Eigen::Index>(columns.size()));
  w.raw.resize(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (static_cast<Eigen::Index>(columns[c].size()) != rows ||
        static_cast<Eigen::Index>(raw[c].size()) != rows) {
      throw ConfigError("weights: ragged columns");
    }
    for (Eigen::Index k = 0; k < rows; ++k) {
      w.weights(k, static_cast<Eigen::Index>(c)) = columns[c][static_cast<std::size_t>(k)];
      w.raw(k, static_cast<Eigen::Index>(c)) = raw[c][static_cast<std::size_t>(k)];
    }
  }
  w.ess = Eigen::Map<const Vector>(ess.data(), static_cast<Eigen::Index>(ess.size()));
  return w;
}

}  // namespace pictraj
