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

#include "pictraj/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace pictraj {

namespace {

constexpr std::uint64_t kGenerationStream = 0x67656e6572ULL;

GenerationRecord score_generation(int g, const RolloutBatch& batch, const Vector& costs, const WeightVector& w,
                                  const LinearGaussianPolicy& policy) {
  GenerationRecord row;
  row.generation = g;
  row.mean_cost = costs.mean();
  row.min_cost = costs.minCoeff();
  row.ess = w.mean_ess();
  row.weight_degenerate = w.min_ess() < 2.0;
  row.entropy_proxy.reserve(static_cast<std::size_t>(policy.horizon()));
  for (int t = 0; t < batch.horizon(); ++t) {
    row.entropy_proxy.push_back(policy.entropy_proxy(t));
  }
  return row;
}

}  // namespace

void RunConfig::validate() const {
  pic.validate();
  if (generations < 1) {
    throw ConfigError("generations: must be >= 1");
  }
  if (cost_id != "default") {
    throw ConfigError("cost: unknown cost id '" + cost_id + "'");
  }
  if (threads < 1) {
    throw ConfigError("threads: must be >= 1");
  }
}

double GenerationRecord::min_entropy_proxy() const {
  return entropy_proxy.empty() ? 0.0 : *std::min_element(entropy_proxy.begin(), entropy_proxy.end());
}

std::uint64_t generation_seed(std::uint64_t seed, int generation) {
  return mix_seed(seed, kGenerationStream, static_cast<std::uint64_t>(generation));
}

LinearGaussianPolicy pic_iteration(const Benchmark& bench, const LinearGaussianPolicy& policy, const PicConfig& cfg,
                                   std::uint64_t rollout_seed, int threads) {
  const RolloutBatch batch = rollout(bench.system, policy, cfg.samples, rollout_seed, {false, threads});
  const WeightVector w = pic_weights(batch, bench.cost, cfg);
  return fit_policy(batch, w, policy, cfg);
}

RunResult run(const RunConfig& cfg) {
  cfg.validate();
  const Benchmark bench = make_benchmark(cfg.system_id);
  LinearGaussianPolicy policy = cfg.initial_policy.value_or(bench.initial_policy);
  if (policy.horizon() != bench.system.horizon) {
    throw ConfigError("initial_policy: horizon does not match system '" + cfg.system_id + "'");
  }

  RunHistory history;
  for (int g = 0; g <= cfg.generations; ++g) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const RolloutBatch batch =
          rollout(bench.system, policy, cfg.pic.samples, generation_seed(cfg.seed, g), {false, cfg.threads});
      const Vector costs = path_cost(batch, bench.cost);
      const WeightVector w = pic_weights(batch, bench.cost, cfg.pic);
      GenerationRecord row = score_generation(g, batch, costs, w, policy);
      if (row.weight_degenerate) {
        std::ostringstream msg;
        msg << "generation " << g << ": effective sample size " << w.min_ess() << " < 2";
        log_warning(msg.str());
      }
      if (g < cfg.generations) {
        policy = fit_policy(batch, w, policy, cfg.pic);
      }
      row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (cfg.log_every > 0 && g % cfg.log_every == 0) {
        std::cerr << "[pictraj] " << to_string(cfg.pic.method) << " generation " << g << " mean cost "
                  << row.mean_cost << " ess " << row.ess << '\n';
      }
      history.rows.push_back(std::move(row));
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "generation " << g << ": " << e.what();
      throw RunError(msg.str(), std::move(history));
    }
  }
  return {std::move(history), std::move(policy)};
}

Evaluation evaluate(const LinearGaussianPolicy& policy, const ControlAffineSystem& system, const CostFunction& cost,
                    int samples, std::uint64_t seed, const RolloutOptions& options) {
  const RolloutBatch batch = rollout(system, policy, samples, seed, options);
  const Vector costs = path_cost(batch, cost);
  Evaluation e;
  e.min = costs.minCoeff();
  if (e.min == costs.maxCoeff()) {
    e.mean = e.min;
    return e;
  }
  e.mean = costs.mean();
  const double n = static_cast<double>(costs.size());
  e.std = std::sqrt((costs.array() - e.mean).square().sum() / (n - 1.0));
  return e;
}

void write_history_csv(std::ostream& out, const RunHistory& history) {
  const std::size_t horizon = history.rows.empty() ? 0 : history.rows.front().entropy_proxy.size();
  out << "generation,mean_cost,min_cost,ess,degenerate,min_entropy_proxy";
  for (std::size_t t = 0; t < horizon; ++t) {
    out << ",entropy_t" << t;
  }
  out << '\n' << std::setprecision(17);
  for (const auto& row : history.rows) {
    out << row.generation << ',' << row.mean_cost << ',' << row.min_cost << ',' << row.ess << ','
        << (row.weight_degenerate ? 1 : 0) << ',' << row.min_entropy_proxy();
    for (double h : row.entropy_proxy) {
      out << ',' << h;
    }
    out << '\n';
  }
}

}  // namespace pictraj
