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

#ifndef PICTRAJ_COMMON_HPP
#define PICTRAJ_COMMON_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pictraj {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration or precondition violation detected before any compute.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An update whose result has no finite, positive mass.
class DegenerateUpdateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise unusable numbers produced during a computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Mixes (seed, stream, index) into a 64-bit value with SplitMix64 rounds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

/// Independent generator for sample `index` of `stream`. A pure function of
/// its arguments, which is what makes batched sampling order-independent.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Fills `out` with standard normal draws from `rng`.
void fill_standard_normal(std::mt19937_64& rng, Eigen::Ref<Vector> out);

/// log(sum(exp(values))) with max-shift; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);

/// Symmetrizes `m` and raises every eigenvalue to at least `floor`.
Matrix floor_spd(const Matrix& m, double floor);

/// True when `m` is square, symmetric within `tol` and Cholesky-factorizable.
bool is_spd(const Matrix& m, double tol = 1e-12);

/// 0.5 * log det of an SPD matrix.
double half_log_det(const Matrix& spd);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions from
/// workers are rethrown on the calling thread (first one wins).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Emits a diagnostic line on stderr unless quiet mode is on.
void log_warning(const std::string& message);

/// Suppresses (or re-enables) log_warning output process-wide.
void set_quiet(bool quiet);

}  // namespace pictraj

#endif  // PICTRAJ_COMMON_HPP
