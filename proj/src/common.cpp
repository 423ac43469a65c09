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

#include "pictraj/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace pictraj {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::atomic<bool> g_quiet{false};
std::mutex g_log_mutex;

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(mix_seed(seed, stream, index));
}

void fill_standard_normal(std::mt19937_64& rng, Eigen::Ref<Vector> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = normal(rng);
  }
}

double log_sum_exp(std::span<const double> values) {
  double max_value = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    max_value = std::max(max_value, v);
  }
  if (!std::isfinite(max_value)) {
    return max_value;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += std::exp(v - max_value);
  }
  return max_value + std::log(sum);
}

Matrix floor_spd(const Matrix& m, double floor) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed while flooring a covariance");
  }
  if (eig.eigenvalues().minCoeff() >= floor) {
    return sym;
  }
  // Rebuilding V diag(l) V' perturbs eigenvalues by a few ulps of the largest
  // one, so clamp slightly above the floor to keep the bound after the round trip.
  const double spread = std::max(std::abs(eig.eigenvalues().maxCoeff()), floor);
  const double margin = 8.0 * static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon() * spread;
  const Vector clamped = eig.eigenvalues().cwiseMax(floor + margin);
  Matrix out = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

bool is_spd(const Matrix& m, double tol) {
  if (m.rows() != m.cols() || m.size() == 0 || !m.allFinite()) {
    return false;
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) {
    return false;
  }
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

double half_log_det(const Matrix& spd) {
  Eigen::LLT<Matrix> llt(spd);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("log-determinant of a non-SPD matrix");
  }
  const Matrix& l = llt.matrixLLT();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    sum += std::log(l(i, i));
  }
  return sum;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) {
              first_error = std::current_exception();
            }
            next = n;
          }
        }
      });
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

void log_warning(const std::string& message) {
  if (g_quiet.load()) {
    return;
  }
  std::lock_guard lock(g_log_mutex);
  std::cerr << "[pictraj] warning: " << message << '\n';
}

void set_quiet(bool quiet) { g_quiet.store(quiet); }

}  // namespace pictraj
