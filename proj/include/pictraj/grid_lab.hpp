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

#ifndef PICTRAJ_GRID_LAB_HPP
#define PICTRAJ_GRID_LAB_HPP

/**
 * \file
 * \brief Search-distribution sequences realized on uniform grids.
 *
 * A GriddedDistribution is a piecewise-constant density over a box split into
 * equal cells. All updates work on log-densities with a max-shift before
 * normalization, so sequences with large exponents (g f for g in the
 * thousands) stay representable. Quadrature is the midpoint rule.
 */

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pictraj/common.hpp"

namespace pictraj::grid {

/// Box [lower, upper] split into shape[i] cells per axis, last axis fastest.
class GridGeometry {
 public:
  GridGeometry(std::vector<double> lower, std::vector<double> upper, std::vector<int> shape);

  std::size_t dims() const { return shape_.size(); }
  std::size_t cell_count() const { return cell_count_; }
  double cell_volume() const { return cell_volume_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<int>& shape() const { return shape_; }
  double step(std::size_t axis) const { return (upper_[axis] - lower_[axis]) / shape_[axis]; }

  /// Midpoint of cell `flat_index`.
  std::vector<double> center(std::size_t flat_index) const;

  bool operator==(const GridGeometry&) const = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<int> shape_;
  std::size_t cell_count_ = 0;
  double cell_volume_ = 0.0;
};

/// Objective values sampled at cell centers.
class GridObjective {
 public:
  GridObjective(GridGeometry geometry, std::vector<double> values);

  static GridObjective from_function(const GridGeometry& geometry,
                                     const std::function<double(std::span<const double>)>& f);

  const GridGeometry& geometry() const { return geometry_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

/// Normalized probability density over a grid, stored as log-density.
///
/// Cells with zero mass hold -inf. Every constructor normalizes so that the
/// midpoint Riemann sum of the density is one.
class GriddedDistribution {
 public:
  static GriddedDistribution uniform(const GridGeometry& geometry);
  /// Normalizes a non-negative, not identically zero density.
  static GriddedDistribution from_density(const GridGeometry& geometry, std::span<const double> density);
  /// Normalizes unnormalized log-density values; -inf marks empty cells.
  static GriddedDistribution from_log_density(const GridGeometry& geometry,
                                              std::vector<double> log_density);

  const GridGeometry& geometry() const { return geometry_; }
  std::size_t size() const { return log_density_.size(); }
  const std::vector<double>& log_density() const { return log_density_; }
  double density(std::size_t i) const;
  std::vector<double> density() const;
  /// Probability mass of cell i (density times cell volume).
  double mass(std::size_t i) const;

 private:
  friend GriddedDistribution distribution_from_json(const nlohmann::json& j);
  GriddedDistribution(GridGeometry geometry, std::vector<double> log_density);

  GridGeometry geometry_;
  std::vector<double> log_density_;
};

struct SequenceParams {
  double lambda = 1.0;  ///< trust-region weight
  double gamma = 0.0;   ///< entropy relaxation weight
  int generations = 0;

  void validate() const;
};

/// One update of the entropy-regularized sequence:
/// pi^{lambda/(lambda+gamma)} exp(-f/(lambda+gamma)), normalized.
GriddedDistribution sequence_step(const GriddedDistribution& pi, const GridObjective& f,
                                  const SequenceParams& p);

/// Generation p.generations of the sequence started at pi0, in closed form.
GriddedDistribution sequence_closed_form(const GriddedDistribution& pi0, const GridObjective& f,
                                         const SequenceParams& p);

/// Closed form at a real-valued generation index g >= 0.
GriddedDistribution sequence_closed_form_at(const GriddedDistribution& pi0, const GridObjective& f,
                                            double lambda, double gamma, double g);

/// The limit exp(-f/gamma), normalized. Requires gamma > 0.
GriddedDistribution limit_distribution(const GridObjective& f, double gamma);

double expected_objective(const GriddedDistribution& pi, const GridObjective& f);

/// Differential entropy with 0 log 0 := 0.
double differential_entropy(const GriddedDistribution& pi);

/// KL(pi || rho). Throws ConfigError when rho has no mass where pi does.
double kl_divergence(const GriddedDistribution& pi, const GriddedDistribution& rho);

double total_variation(const GriddedDistribution& a, const GriddedDistribution& b);

/// d/dg E_{pi_g}[f] for the relaxed sequence. Requires lambda > 0, gamma > 0.
double analytic_rate_expected(const GriddedDistribution& pi_g, const GriddedDistribution& pi0,
                              const GridObjective& f, const SequenceParams& p, double g);

/// d/dg H[pi_g] for the relaxed sequence. Requires lambda > 0, gamma > 0.
double analytic_rate_entropy(const GriddedDistribution& pi_g, const GriddedDistribution& pi0,
                             const GridObjective& f, const SequenceParams& p, double g);

/// Path-distribution update p_{g+1} ∝ p_g^{lambda/(lambda+gamma)} exp(-C/(lambda+gamma))
/// on a grid whose axes index the state at each timestep of a short chain.
/// Same operation as sequence_step; path grids are limited to 3 axes of 64 cells.
GriddedDistribution erto_path_update(const GriddedDistribution& path_distribution,
                                     const GridObjective& path_cost, const SequenceParams& p);

/// {"lower","upper","shape","log_density"}; empty cells serialize as null.
nlohmann::json to_json(const GriddedDistribution& pi);
GriddedDistribution distribution_from_json(const nlohmann::json& j);

}  // namespace pictraj::grid

#endif  // PICTRAJ_GRID_LAB_HPP
