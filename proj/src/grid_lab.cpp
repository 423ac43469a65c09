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

#include "pictraj/grid_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pictraj::grid {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxPathAxes = 3;
constexpr int kMaxPathCells = 64;

void require_same_grid(const GridGeometry& a, const GridGeometry& b, const char* what) {
  if (!(a == b)) {
    throw ConfigError(std::string(what) + ": grid geometries differ");
  }
}

// Normalizes unnormalized log values in place so that sum(exp(v)) * volume = 1.
void normalize_log(std::vector<double>& v, double cell_volume) {
  for (double x : v) {
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
      throw DegenerateUpdateError("degenerate update: non-finite log-density");
    }
  }
  const double lse = log_sum_exp(v);
  if (!std::isfinite(lse)) {
    throw DegenerateUpdateError("degenerate update: no cell carries finite mass");
  }
  const double shift = lse + std::log(cell_volume);
  for (double& x : v) {
    x -= shift;
  }
}

// Weighted covariance of a and b under the cell masses of pi.
double covariance(const GriddedDistribution& pi, const std::vector<double>& a,
                  const std::vector<double>& b) {
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const double m = pi.mass(i);
    if (m > 0.0) {
      mean_a += m * a[i];
      mean_b += m * b[i];
    }
  }
  double cov = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const double m = pi.mass(i);
    if (m > 0.0) {
      cov += m * (a[i] - mean_a) * (b[i] - mean_b);
    }
  }
  return cov;
}

struct RateTerms {
  double alpha;
  double log_ratio;  // log((lambda + gamma) / lambda)
  std::vector<double> log_limit;
  std::vector<double> log_prior;
  std::vector<double> log_gap;  // log pi_inf - log pi_0
};

RateTerms rate_terms(const GriddedDistribution& pi_g, const GriddedDistribution& pi0,
                     const GridObjective& f, const SequenceParams& p, double g) {
  p.validate();
  if (!(p.gamma > 0.0) || !(p.lambda > 0.0)) {
    throw ConfigError("unsupported parameters: analytic rates need lambda > 0 and gamma > 0");
  }
  require_same_grid(pi_g.geometry(), pi0.geometry(), "analytic rate");
  require_same_grid(pi_g.geometry(), f.geometry(), "analytic rate");

  RateTerms terms;
  terms.alpha = std::pow(p.lambda / (p.lambda + p.gamma), g);
  terms.log_ratio = std::log1p(p.gamma / p.lambda);
  terms.log_limit = limit_distribution(f, p.gamma).log_density();
  terms.log_prior = pi0.log_density();
  terms.log_gap.resize(pi_g.size());
  for (std::size_t i = 0; i < pi_g.size(); ++i) {
    if (pi_g.mass(i) > 0.0 && !std::isfinite(terms.log_prior[i])) {
      throw ConfigError("analytic rate: pi_g has mass where pi0 has none");
    }
    terms.log_gap[i] = pi_g.mass(i) > 0.0 ? terms.log_limit[i] - terms.log_prior[i] : 0.0;
  }
  return terms;
}

}  // namespace

GridGeometry::GridGeometry(std::vector<double> lower, std::vector<double> upper, std::vector<int> shape)
    : lower_(std::move(lower)), upper_(std::move(upper)), shape_(std::move(shape)) {
  if (shape_.empty() || shape_.size() > 3) {
    throw ConfigError("grid: 1 to 3 axes supported");
  }
  if (lower_.size() != shape_.size() || upper_.size() != shape_.size()) {
    throw ConfigError("grid: lower/upper/shape lengths differ");
  }
  if (shape_.size() == 3 &&
      std::any_of(shape_.begin(), shape_.end(), [](int n) { return n > kMaxPathCells; })) {
    throw ConfigError("grid: 3-axis grids are limited to 64 cells per axis");
  }
  cell_count_ = 1;
  cell_volume_ = 1.0;
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    if (!(lower_[a] < upper_[a]) || !std::isfinite(lower_[a]) || !std::isfinite(upper_[a])) {
      throw ConfigError("grid: lower < upper must hold on every axis");
    }
    if (shape_[a] < 2) {
      throw ConfigError("grid: at least 2 cells per axis");
    }
    cell_count_ *= static_cast<std::size_t>(shape_[a]);
    cell_volume_ *= step(a);
  }
}

std::vector<double> GridGeometry::center(std::size_t flat_index) const {
  std::vector<double> x(shape_.size());
  for (std::size_t a = shape_.size(); a-- > 0;) {
    const auto n = static_cast<std::size_t>(shape_[a]);
    const std::size_t i = flat_index % n;
    flat_index /= n;
    x[a] = lower_[a] + (static_cast<double>(i) + 0.5) * step(a);
  }
  return x;
}

GridObjective::GridObjective(GridGeometry geometry, std::vector<double> values)
    : geometry_(std::move(geometry)), values_(std::move(values)) {
  if (values_.size() != geometry_.cell_count()) {
    throw ConfigError("objective: value count does not match grid");
  }
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
    throw ConfigError("objective: values must be finite");
  }
}

GridObjective GridObjective::from_function(const GridGeometry& geometry,
                                           const std::function<double(std::span<const double>)>& f) {
  std::vector<double> values(geometry.cell_count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto x = geometry.center(i);
    values[i] = f(x);
  }
  return GridObjective(geometry, std::move(values));
}

GriddedDistribution::GriddedDistribution(GridGeometry geometry, std::vector<double> log_density)
    : geometry_(std::move(geometry)), log_density_(std::move(log_density)) {}

GriddedDistribution GriddedDistribution::uniform(const GridGeometry& geometry) {
  return from_log_density(geometry, std::vector<double>(geometry.cell_count(), 0.0));
}

GriddedDistribution GriddedDistribution::from_density(const GridGeometry& geometry,
                                                      std::span<const double> density) {
  if (density.size() != geometry.cell_count()) {
    throw ConfigError("distribution: density size does not match grid");
  }
  std::vector<double> log_density(density.size());
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (!(density[i] >= 0.0) || !std::isfinite(density[i])) {
      throw ConfigError("distribution: density must be finite and non-negative");
    }
    log_density[i] = density[i] > 0.0 ? std::log(density[i]) : kNegInf;
  }
  return from_log_density(geometry, std::move(log_density));
}

GriddedDistribution GriddedDistribution::from_log_density(const GridGeometry& geometry,
                                                          std::vector<double> log_density) {
  if (log_density.size() != geometry.cell_count()) {
    throw ConfigError("distribution: log-density size does not match grid");
  }
  normalize_log(log_density, geometry.cell_volume());
  return GriddedDistribution(geometry, std::move(log_density));
}

double GriddedDistribution::density(std::size_t i) const { return std::exp(log_density_[i]); }

std::vector<double> GriddedDistribution::density() const {
  std::vector<double> out(log_density_.size());
  std::transform(log_density_.begin(), log_density_.end(), out.begin(),
                 [](double v) { return std::exp(v); });
  return out;
}

double GriddedDistribution::mass(std::size_t i) const {
  return std::exp(log_density_[i]) * geometry_.cell_volume();
}

void SequenceParams::validate() const {
  if (!(lambda >= 0.0) || !(gamma >= 0.0) || !(lambda + gamma > 0.0) || !std::isfinite(lambda) ||
      !std::isfinite(gamma)) {
    throw ConfigError("sequence params: need lambda >= 0, gamma >= 0, lambda + gamma > 0");
  }
  if (generations < 0) {
    throw ConfigError("sequence params: generations must be >= 0");
  }
}

GriddedDistribution sequence_step(const GriddedDistribution& pi, const GridObjective& f,
                                  const SequenceParams& p) {
  p.validate();
  require_same_grid(pi.geometry(), f.geometry(), "sequence_step");
  const double total = p.lambda + p.gamma;
  const double prior_power = p.lambda / total;
  std::vector<double> log_values(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const double prior = prior_power > 0.0 ? prior_power * pi.log_density()[i] : 0.0;
    log_values[i] = prior - f[i] / total;
  }
  return GriddedDistribution::from_log_density(pi.geometry(), std::move(log_values));
}

GriddedDistribution sequence_closed_form_at(const GriddedDistribution& pi0, const GridObjective& f,
                                            double lambda, double gamma, double g) {
  SequenceParams p{lambda, gamma, 0};
  p.validate();
  require_same_grid(pi0.geometry(), f.geometry(), "sequence_closed_form");
  if (!(g >= 0.0) || !std::isfinite(g)) {
    throw ConfigError("sequence_closed_form: generation index must be finite and >= 0");
  }
  if (g == 0.0) {
    return pi0;
  }
  double prior_power = 1.0;
  double objective_scale = 0.0;
  if (gamma > 0.0) {
    const double log_beta = std::log(lambda / (lambda + gamma));
    prior_power = std::exp(g * log_beta);
    objective_scale = -std::expm1(g * log_beta) / gamma;
  } else {
    objective_scale = g / lambda;
  }
  std::vector<double> log_values(pi0.size());
  for (std::size_t i = 0; i < pi0.size(); ++i) {
    const double prior = prior_power > 0.0 ? prior_power * pi0.log_density()[i] : 0.0;
    log_values[i] = prior - objective_scale * f[i];
  }
  return GriddedDistribution::from_log_density(pi0.geometry(), std::move(log_values));
}

GriddedDistribution sequence_closed_form(const GriddedDistribution& pi0, const GridObjective& f,
                                         const SequenceParams& p) {
  p.validate();
  return sequence_closed_form_at(pi0, f, p.lambda, p.gamma, static_cast<double>(p.generations));
}

GriddedDistribution limit_distribution(const GridObjective& f, double gamma) {
  if (!(gamma > 0.0)) {
    throw ConfigError("limit distribution requires gamma > 0");
  }
  std::vector<double> log_values(f.values().size());
  for (std::size_t i = 0; i < log_values.size(); ++i) {
    log_values[i] = -f[i] / gamma;
  }
  return GriddedDistribution::from_log_density(f.geometry(), std::move(log_values));
}

double expected_objective(const GriddedDistribution& pi, const GridObjective& f) {
  require_same_grid(pi.geometry(), f.geometry(), "expected_objective");
  double sum = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    sum += pi.mass(i) * f[i];
  }
  return sum;
}

double differential_entropy(const GriddedDistribution& pi) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const double m = pi.mass(i);
    if (m > 0.0) {
      sum -= m * pi.log_density()[i];
    }
  }
  return sum;
}

double kl_divergence(const GriddedDistribution& pi, const GriddedDistribution& rho) {
  require_same_grid(pi.geometry(), rho.geometry(), "kl_divergence");
  double sum = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const double m = pi.mass(i);
    if (m <= 0.0) {
      continue;
    }
    if (!std::isfinite(rho.log_density()[i])) {
      std::ostringstream msg;
      msg << "kl_divergence: support violation at cell " << i;
      throw ConfigError(msg.str());
    }
    sum += m * (pi.log_density()[i] - rho.log_density()[i]);
  }
  return std::max(sum, 0.0);
}

double total_variation(const GriddedDistribution& a, const GriddedDistribution& b) {
  require_same_grid(a.geometry(), b.geometry(), "total_variation");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::abs(a.mass(i) - b.mass(i));
  }
  return 0.5 * sum;
}

double analytic_rate_expected(const GriddedDistribution& pi_g, const GriddedDistribution& pi0,
                              const GridObjective& f, const SequenceParams& p, double g) {
  const RateTerms t = rate_terms(pi_g, pi0, f, p, g);
  return -p.gamma * t.alpha * t.log_ratio * covariance(pi_g, t.log_limit, t.log_gap);
}

double analytic_rate_entropy(const GriddedDistribution& pi_g, const GriddedDistribution& pi0,
                             const GridObjective& f, const SequenceParams& p, double g) {
  const RateTerms t = rate_terms(pi_g, pi0, f, p, g);
  std::vector<double> log_prior(t.log_prior);
  for (std::size_t i = 0; i < log_prior.size(); ++i) {
    if (pi_g.mass(i) <= 0.0) {
      log_prior[i] = 0.0;
    }
  }
  const double limit_term = covariance(pi_g, t.log_limit, t.log_gap);
  const double prior_term = covariance(pi_g, log_prior, t.log_gap);
  return -t.alpha * t.log_ratio * ((1.0 - t.alpha) * limit_term + t.alpha * prior_term);
}

GriddedDistribution erto_path_update(const GriddedDistribution& path_distribution,
                                     const GridObjective& path_cost, const SequenceParams& p) {
  const auto& shape = path_distribution.geometry().shape();
  if (static_cast<int>(shape.size()) > kMaxPathAxes ||
      std::any_of(shape.begin(), shape.end(), [](int n) { return n > kMaxPathCells; })) {
    throw ConfigError("erto_path_update: path grids are limited to 3 axes of 64 cells");
  }
  return sequence_step(path_distribution, path_cost, p);
}

nlohmann::json to_json(const GriddedDistribution& pi) {
  nlohmann::json log_density = nlohmann::json::array();
  for (double v : pi.log_density()) {
    if (std::isfinite(v)) {
      log_density.push_back(v);
    } else {
      log_density.push_back(nullptr);
    }
  }
  return {{"lower", pi.geometry().lower()},
          {"upper", pi.geometry().upper()},
          {"shape", pi.geometry().shape()},
          {"log_density", log_density}};
}

GriddedDistribution distribution_from_json(const nlohmann::json& j) {
  GridGeometry geometry(j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>(),
                        j.at("shape").get<std::vector<int>>());
  const auto& raw = j.at("log_density");
  if (!raw.is_array()) {
    throw ConfigError("log_density: expected an array");
  }
  std::vector<double> log_density;
  log_density.reserve(raw.size());
  for (const auto& v : raw) {
    log_density.push_back(v.is_null() ? kNegInf : v.get<double>());
  }
  // Stored densities are already normalized; keep them bit-exact unless the
  // file was edited by hand.
  GriddedDistribution normalized = GriddedDistribution::from_log_density(geometry, log_density);
  const double log_total = log_sum_exp(log_density) + std::log(geometry.cell_volume());
  if (std::abs(log_total) <= 1e-12) {
    return GriddedDistribution(geometry, std::move(log_density));
  }
  return normalized;
}

}  // namespace pictraj::grid
