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

#ifndef PICTRAJ_CLI_HPP
#define PICTRAJ_CLI_HPP

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pictraj/eres.hpp"
#include "pictraj/grid_lab.hpp"
#include "pictraj/optimizer.hpp"

namespace pictraj::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Entry point behind the `pictraj` executable. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a over the compact, key-sorted serialization of `config`.
std::uint64_t config_hash(const nlohmann::json& config);
std::string hash_hex(std::uint64_t hash);

/// Loads a JSON document; ConfigError naming the file when missing or malformed.
nlohmann::json load_config(const std::string& path);

/// Named objectives shared by grid-verify and es-run:
/// sphere (sum x^2), quartic (sum x^4), scaled-quadratic (0.5 a sum x^2),
/// rastrigin, linear (sum x).
std::function<double(std::span<const double>)> named_objective(const std::string& name, double scale = 1.0);

struct GridExperiment {
  grid::GridGeometry geometry;
  grid::GriddedDistribution prior;
  grid::GridObjective objective;
  grid::SequenceParams params;
  double fd_step = 1e-3;
};

struct EsExperiment {
  std::string objective = "sphere";
  double scale = 1.0;
  es::SearchDistribution init;
  es::EsConfig config;
  int generations = 0;
};

struct PicExperiment {
  RunConfig run;
  int eval_samples = 1024;
};

/// Validate a config document against the target module; ConfigError
/// messages start with the offending field path.
GridExperiment parse_grid_experiment(const nlohmann::json& config);
EsExperiment parse_es_experiment(const nlohmann::json& config);
PicExperiment parse_pic_experiment(const nlohmann::json& config);

/// Rows of the grid-verify report for g = 0..generations.
struct GridReportRow {
  int g = 0;
  double expected = 0.0;
  double entropy = 0.0;
  double rate_analytic = 0.0;  ///< NaN when the relaxed-sequence rate is undefined
  double rate_fd = 0.0;
};
std::vector<GridReportRow> grid_report(const GridExperiment& experiment);
void write_grid_report_csv(std::ostream& out, const std::vector<GridReportRow>& rows);

/// Joined per-generation CSV for several runs sharing one seed.
void write_compare_csv(std::ostream& out, const std::vector<PicMethod>& methods,
                       const std::vector<RunHistory>& histories);

}  // namespace pictraj::cli

#endif  // PICTRAJ_CLI_HPP
