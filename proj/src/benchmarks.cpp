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

// Shipped benchmark systems. Parameters are documented in README.md.

#include <cmath>
#include <numbers>

#include "pictraj/dynamics.hpp"

namespace pictraj {

namespace {

// x' = x + u, T = 10, x0 = 5, r_t = 0.5 (x^2 + u^2), r_T = 0.5 x^2.
Benchmark scalar_lqr() {
  LinearQuadraticProblem lq;
  lq.a = Matrix::Identity(1, 1);
  lq.b = Matrix::Identity(1, 1);
  lq.q = Matrix::Identity(1, 1);
  lq.r = Matrix::Identity(1, 1);
  lq.q_terminal = Matrix::Identity(1, 1);
  lq.horizon = 10;
  lq.initial_state = Vector::Constant(1, 5.0);
  return {"scalar-lqr", lq.system("scalar-lqr"), lq.cost(),
          LinearGaussianPolicy::isotropic(lq.horizon, 1, 1, 1.0), lq};
}

// Position/velocity with dt = 0.1, T = 20, x0 = (1, 0).
Benchmark double_integrator() {
  constexpr double dt = 0.1;
  LinearQuadraticProblem lq;
  lq.a = Matrix{{1.0, dt}, {0.0, 1.0}};
  lq.b = Matrix{{0.5 * dt * dt}, {dt}};
  lq.q = Matrix{{1.0, 0.0}, {0.0, 0.1}};
  lq.r = Matrix{{0.1}};
  lq.q_terminal = Matrix{{10.0, 0.0}, {0.0, 1.0}};
  lq.horizon = 20;
  lq.initial_state = Vector{{1.0, 0.0}};
  // Sigma = R^{-1}, so the LSOC weightings see the same control penalty.
  return {"double-integrator", lq.system("double-integrator"), lq.cost(),
          LinearGaussianPolicy::isotropic(lq.horizon, 2, 1, 10.0), lq};
}

// Damped pendulum, explicit Euler with dt = 0.02 s over 100 steps, starting
// at rest hanging down (theta = 0); the goal is upright (theta = pi).
Benchmark pendulum() {
  constexpr double dt = 0.02;
  constexpr double gravity = 9.81;
  constexpr double length = 1.0;
  constexpr double mass = 1.0;
  constexpr double damping = 0.1;
  constexpr double inertia = mass * length * length;
  constexpr double control_weight = 0.01;

  ControlAffineSystem sys;
  sys.name = "pendulum";
  sys.state_dim = 2;
  sys.control_dim = 1;
  sys.horizon = 100;
  sys.initial_state = Vector::Zero(2);
  sys.drift = [](const Vector& x) -> Vector {
    return Vector{{x[0] + dt * x[1],
                   x[1] + dt * (-(gravity / length) * std::sin(x[0]) - damping / inertia * x[1])}};
  };
  sys.input_map = [](const Vector&) -> Matrix { return Matrix{{0.0}, {dt / inertia}}; };

  const auto state_cost = [](const Vector& x) {
    const double angle_error = x[0] - std::numbers::pi;
    return 0.5 * (angle_error * angle_error + 0.1 * x[1] * x[1]);
  };
  CostFunction cost;
  cost.running = [state_cost](int, const Vector& x, const Vector& u) {
    return state_cost(x) + 0.5 * control_weight * u.squaredNorm();
  };
  cost.terminal = [](const Vector& x) {
    const double angle_error = x[0] - std::numbers::pi;
    return 0.5 * (100.0 * angle_error * angle_error + 10.0 * x[1] * x[1]);
  };
  cost.state_only_running = [state_cost](int, const Vector& x) { return state_cost(x); };
  return {"pendulum", sys, cost, LinearGaussianPolicy::isotropic(sys.horizon, 2, 1, 1.0 / control_weight),
          std::nullopt};
}

}  // namespace

std::vector<std::string> benchmark_ids() { return {"double-integrator", "pendulum", "scalar-lqr"}; }

Benchmark make_benchmark(const std::string& id) {
  if (id == "scalar-lqr") {
    return scalar_lqr();
  }
  if (id == "double-integrator") {
    return double_integrator();
  }
  if (id == "pendulum") {
    return pendulum();
  }
  throw ConfigError("unknown benchmark id '" + id + "'");
}

}  // namespace pictraj
