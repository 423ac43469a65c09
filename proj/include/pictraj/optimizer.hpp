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

#ifndef PICTRAJ_OPTIMIZER_HPP
#define PICTRAJ_OPTIMIZER_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pictraj/dynamics.hpp"
#include "pictraj/pic_core.hpp"

namespace pictraj {

struct RunConfig {
  std::string system_id = "scalar-lqr";
  std::string cost_id = "default";  ///< the benchmark's own cost; the only id shipped
  PicConfig pic;
  int generations = 1;
  std::uint64_t seed = 0;
  std::optional<LinearGaussianPolicy> initial_policy;  ///< benchmark default when empty
  int log_every = 0;                                    ///< 0 disables progress lines
  int threads = 1;

  void validate() const;
};

struct GenerationRecord {
  int generation = 0;
  double mean_cost = 0.0;
  double min_cost = 0.0;
  double ess = 0.0;  ///< mean over timesteps for per-timestep weights
  bool weight_degenerate = false;  ///< ESS < 2 somewhere in this generation
  std::vector<double> entropy_proxy;  ///< 0.5 log det Sigma_t for t = 0..T-1
  double wall_time_s = 0.0;

  double min_entropy_proxy() const;
};

struct RunHistory {
  std::vector<GenerationRecord> rows;
};

struct RunResult {
  RunHistory history;
  LinearGaussianPolicy final_policy;
};

/// Raised when a run aborts; carries every completed generation.
class RunError : public Error {
 public:
  RunError(const std::string& message, RunHistory partial) : Error(message), partial_(std::move(partial)) {}
  const RunHistory& partial_history() const { return partial_; }

 private:
  RunHistory partial_;
};

/// Rollout seed used for generation g of a run seeded with `seed`.
std::uint64_t generation_seed(std::uint64_t seed, int generation);

/// One rollout -> weights -> fit cycle.
LinearGaussianPolicy pic_iteration(const Benchmark& bench, const LinearGaussianPolicy& policy, const PicConfig& cfg,
                                   std::uint64_t rollout_seed, int threads = 1);

/// G generations; row g evaluates policy g on its own batch before the update,
/// so the history has G + 1 rows and the last row scores the final policy.
RunResult run(const RunConfig& cfg);

struct Evaluation {
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
};

/// Monte Carlo estimate of E[R] on a fresh batch; no fitting.
Evaluation evaluate(const LinearGaussianPolicy& policy, const ControlAffineSystem& system, const CostFunction& cost,
                    int samples, std::uint64_t seed, const RolloutOptions& options = {});

/// generation, mean_cost, min_cost, ess, degenerate, min_entropy_proxy, entropy_t0..entropy_t{T-1}.
/// Wall time is left out so that equal seeds give byte-identical files.
void write_history_csv(std::ostream& out, const RunHistory& history);

}  // namespace pictraj

#endif  // PICTRAJ_OPTIMIZER_HPP
