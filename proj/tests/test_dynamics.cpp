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

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pictraj/dynamics.hpp"

using namespace pictraj;

namespace {

LinearGaussianPolicy random_policy(std::mt19937_64& rng, int horizon, int n, int m) {
  std::normal_distribution<double> z;
  std::vector<Vector> ff;
  std::vector<Matrix> gain, cov;
  for (int t = 0; t < horizon; ++t) {
    Vector f(m);
    Matrix k(m, n), a(m, m);
    for (int i = 0; i < m; ++i) f[i] = z(rng);
    for (int i = 0; i < m * n; ++i) k(i % m, i / m) = 0.3 * z(rng);
    for (int i = 0; i < m * m; ++i) a(i % m, i / m) = z(rng);
    ff.push_back(f);
    gain.push_back(k);
    cov.push_back(a * a.transpose() + 0.5 * Matrix::Identity(m, m));
  }
  return {ff, gain, cov};
}

LinearQuadraticProblem random_lq(std::mt19937_64& rng, int n, int m, int horizon) {
  std::normal_distribution<double> z;
  LinearQuadraticProblem lq;
  lq.a = Matrix::Identity(n, n);
  lq.b = Matrix(n, m);
  for (int i = 0; i < n * n; ++i) lq.a(i % n, i / n) += 0.2 * z(rng);
  for (int i = 0; i < n * m; ++i) lq.b(i % n, i / n % m) = z(rng);
  Matrix sq(n, n), sr(m, m);
  for (int i = 0; i < n * n; ++i) sq(i % n, i / n) = z(rng);
  for (int i = 0; i < m * m; ++i) sr(i % m, i / m) = z(rng);
  lq.q = sq * sq.transpose();
  lq.r = sr * sr.transpose() + 0.1 * Matrix::Identity(m, m);
  lq.q_terminal = 2.0 * lq.q + Matrix::Identity(n, n);
  lq.horizon = horizon;
  lq.initial_state = Vector(n);
  for (int i = 0; i < n; ++i) lq.initial_state[i] = z(rng);
  return lq;
}

}  // namespace

TEST_CASE("policies validate covariance and shape") {
  CHECK_THROWS_AS(LinearGaussianPolicy({}, {}, {}), ConfigError);
  CHECK_THROWS_AS(LinearGaussianPolicy({Vector::Zero(1)}, {Matrix::Zero(1, 2)}, {Matrix::Constant(1, 1, -1.0)}),
                  ConfigError);
  CHECK_THROWS_AS(LinearGaussianPolicy({Vector::Zero(1)}, {Matrix::Zero(2, 2)}, {Matrix::Identity(1, 1)}),
                  ConfigError);
  auto p = LinearGaussianPolicy::isotropic(3, 2, 1, 4.0);
  CHECK(p.horizon() == 3);
  CHECK(p.entropy_proxy(1) == doctest::Approx(0.5 * std::log(4.0)));
}

TEST_CASE("rollouts obey the dynamics and control relations exactly") {
  std::mt19937_64 rng(1);
  for (const auto& id : benchmark_ids()) {
    const Benchmark b = make_benchmark(id);
    const auto policy = random_policy(rng, b.system.horizon, b.system.state_dim, b.system.control_dim);
    const auto batch = rollout(b.system, policy, 16, 3);
    for (int k = 0; k < batch.samples(); ++k) {
      CHECK(batch.state(k, 0) == b.system.initial_state);
      for (int t = 0; t < batch.horizon(); ++t) {
        REQUIRE(batch.control(k, t) == policy.mean(t, batch.state(k, t)) + batch.noise(k, t));
        REQUIRE(batch.state(k, t + 1) == b.system.step(batch.state(k, t), batch.control(k, t)));
      }
    }
  }
}

TEST_CASE("rollouts are bit-identical across thread counts") {
  const Benchmark b = make_benchmark("pendulum");
  const auto a = rollout(b.system, b.initial_policy, 64, 99, {false, 1});
  const auto c = rollout(b.system, b.initial_policy, 64, 99, {false, 8});
  for (int k = 0; k < 64; ++k) {
    CHECK(a.states[k] == c.states[k]);
    CHECK(a.controls[k] == c.controls[k]);
    CHECK(a.noises[k] == c.noises[k]);
  }
  const auto d = rollout(b.system, b.initial_policy, 64, 100);
  CHECK(d.noises[0] != a.noises[0]);
}

TEST_CASE("sampled noise has the policy covariance") {
  Matrix cov{{2.0, 0.6}, {0.6, 1.0}};
  LinearQuadraticProblem lq{Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                            Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1, Vector::Zero(2)};
  LinearGaussianPolicy policy({Vector::Zero(2)}, {Matrix::Zero(2, 2)}, {cov});
  const auto batch = rollout(lq.system(), policy, 20000, 5);
  Vector mean = Vector::Zero(2);
  Matrix second = Matrix::Zero(2, 2);
  for (int k = 0; k < batch.samples(); ++k) {
    mean += batch.noise(k, 0) / batch.samples();
    second += batch.noise(k, 0) * batch.noise(k, 0).transpose() / batch.samples();
  }
  CHECK(mean.cwiseAbs().maxCoeff() < 0.05);
  CHECK((second - cov).cwiseAbs().maxCoeff() < 0.08);
  const auto quiet = rollout(lq.system(), policy, 4, 5, {true, 1});
  CHECK(quiet.noises[2].isZero(0.0));
}

TEST_CASE("costs and noise penalties follow their definitions") {
  const Benchmark b = make_benchmark("double-integrator");
  const auto batch = rollout(b.system, b.initial_policy, 8, 2);
  const Matrix c = per_step_costs(batch, b.cost);
  REQUIRE(c.cols() == b.system.horizon + 1);
  const auto& lq = *b.linear_quadratic;
  for (int k = 0; k < 8; ++k) {
    double total = 0.0;
    for (int t = 0; t < batch.horizon(); ++t) {
      const Vector x = batch.state(k, t), u = batch.control(k, t);
      const double expect = 0.5 * (x.dot(lq.q * x) + u.dot(lq.r * u));
      CHECK(c(k, t) == doctest::Approx(expect).epsilon(1e-14));
      total += expect;
    }
    const Vector xt = batch.state(k, batch.horizon());
    CHECK(c(k, batch.horizon()) == doctest::Approx(0.5 * xt.dot(lq.q_terminal * xt)).epsilon(1e-14));
    total += 0.5 * xt.dot(lq.q_terminal * xt);
    CHECK(path_cost(batch, b.cost)[k] == doctest::Approx(total).epsilon(1e-13));
  }
  const Matrix np = noise_penalties(batch);
  const double du = batch.noise(3, 4)[0];
  CHECK(np(3, 4) == doctest::Approx(0.5 * du * du / 10.0).epsilon(1e-14));
  CostFunction incomplete;
  CHECK_THROWS_AS(per_step_costs(batch, incomplete), ConfigError);
}

TEST_CASE("diverging rollouts name the first failing trajectory") {
  ControlAffineSystem sys{"blowup", 1, 1, 5,
                          [](const Vector& x) -> Vector { return x.array().square() * 1e200; },
                          [](const Vector&) -> Matrix { return Matrix::Identity(1, 1); }, Vector::Constant(1, 2.0)};
  try {
    rollout(sys, LinearGaussianPolicy::isotropic(5, 1, 1, 1.0), 4, 1);
    FAIL("expected a NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("k=0") != std::string::npos);
  }
}

TEST_CASE("Riccati solution equals the dense least-squares optimum") {
  for (const auto& id : {"scalar-lqr", "double-integrator"}) {
    const auto lq = *make_benchmark(id).linear_quadratic;
    const double riccati = lqr_reference(lq).optimal_cost;
    CHECK(riccati == doctest::Approx(oracle::dense_lq_optimum(lq)).epsilon(1e-10));
  }
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto lq = random_lq(rng, 1 + trial % 3, 1 + trial % 2, 2 + trial);
    CHECK(lqr_reference(lq).optimal_cost == doctest::Approx(oracle::dense_lq_optimum(lq)).epsilon(1e-9));
  }
}

TEST_CASE("one-step scalar LQR has the textbook solution") {
  // min 0.5 (q x0^2 + r u^2 + qT (x0 + u)^2)  =>  u = -qT x0 / (r + qT)
  LinearQuadraticProblem lq{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 2.0),
                            Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 5.0), 1, Vector::Constant(1, 4.0)};
  const auto sol = lqr_reference(lq);
  CHECK(sol.gains[0](0, 0) == doctest::Approx(-5.0 / 8.0));
  const double u = -5.0 * 4.0 / 8.0;
  CHECK(sol.optimal_cost == doctest::Approx(0.5 * (2.0 * 16.0 + 3.0 * u * u + 5.0 * (4.0 + u) * (4.0 + u))));
  lq.r = Matrix::Constant(1, 1, 0.0);
  CHECK_THROWS_AS(lqr_reference(lq), ConfigError);
}

TEST_CASE("noise-free rollout of the Riccati policy attains the optimal cost") {
  const Benchmark b = make_benchmark("double-integrator");
  const auto sol = lqr_reference(*b.linear_quadratic);
  std::vector<Matrix> cov(sol.gains.size(), Matrix::Identity(1, 1));
  LinearGaussianPolicy policy(sol.feedforward, sol.gains, cov);
  const auto batch = rollout(b.system, policy, 1, 0, {true, 1});
  CHECK(path_cost(batch, b.cost)[0] == doctest::Approx(sol.optimal_cost).epsilon(1e-12));
}

TEST_CASE("shipped benchmarks have documented shapes") {
  CHECK_THROWS_AS(make_benchmark("cartpole"), ConfigError);
  const auto di = make_benchmark("double-integrator");
  CHECK(di.system.state_dim == 2);
  CHECK(di.system.horizon == 20);
  const auto pend = make_benchmark("pendulum");
  CHECK(pend.system.state_dim == 2);
  CHECK(pend.cost.state_only_running.has_value());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const Matrix bx = pend.system.input_map(Vector{{u(rng), u(rng)}});
    CHECK(Eigen::FullPivLU<Matrix>(bx).rank() == pend.system.control_dim);
  }
  const auto s = make_benchmark("scalar-lqr");
  CHECK(s.system.horizon == 10);
  CHECK(s.system.initial_state[0] == 5.0);
}

TEST_CASE("policy JSON round trip is exact") {
  std::mt19937_64 rng(4);
  const auto p = random_policy(rng, 4, 3, 2);
  CHECK(policy_from_json(to_json(p)) == p);
  auto j = to_json(p);
  j["steps"][1]["covariance"] = {{1.0, 0.0}, {0.0, -1.0}};
  CHECK_THROWS_AS(policy_from_json(j), ConfigError);
}

TEST_CASE("trace output has one line per trajectory") {
  const Benchmark b = make_benchmark("scalar-lqr");
  const auto batch = rollout(b.system, b.initial_policy, 5, 1);
  std::ostringstream out;
  write_trace(out, batch);
  std::istringstream in(out.str());
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["k"] == count);
    ++count;
  }
  CHECK(count == 5);
}

TEST_CASE("linear rollouts follow the Gaussian propagation of mean and covariance") {
  Matrix a{{1.0, 0.1}, {-0.2, 0.95}};
  Matrix bm{{0.0}, {0.5}};
  LinearQuadraticProblem lq{a, bm, Matrix::Identity(2, 2), Matrix::Identity(1, 1), Matrix::Identity(2, 2), 8,
                            Vector{{1.0, -0.5}}};
  std::vector<Vector> ff;
  std::vector<Matrix> gain, cov;
  for (int t = 0; t < 8; ++t) {
    ff.push_back(Vector::Constant(1, 0.3 * t - 1.0));
    gain.push_back(Matrix::Zero(1, 2));
    cov.push_back(Matrix::Constant(1, 1, 0.2 + 0.1 * t));
  }
  const LinearGaussianPolicy policy(ff, gain, cov);
  const int samples = 4000;
  const auto batch = rollout(lq.system(), policy, samples, 11);
  Vector mean = lq.initial_state;
  Matrix p = Matrix::Zero(2, 2);
  for (int t = 0; t < 8; ++t) {
    mean = a * mean + bm * ff[t];
    p = a * p * a.transpose() + bm * cov[t] * bm.transpose();
    Vector empirical = Vector::Zero(2);
    for (int k = 0; k < samples; ++k) empirical += batch.state(k, t + 1) / samples;
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(empirical[i] - mean[i]) <= 3.0 * std::sqrt(p(i, i) / samples) + 1e-12);
    }
  }
}

TEST_CASE("consistency holds on random linear and nonlinear systems") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 4, m = 1 + trial % 3, horizon = 3 + trial % 5;
    Matrix a(n, n), bm(n, m);
    for (int i = 0; i < n * n; ++i) a(i % n, i / n) = 0.4 * z(rng);
    for (int i = 0; i < n * m; ++i) bm(i % n, i / n % m) = z(rng);
    const bool bent = trial % 2 == 1;
    ControlAffineSystem sys{"random", n, m, horizon,
                            [a, bent](const Vector& x) -> Vector {
                              return bent ? Vector((a * x).array().tanh()) : Vector(a * x);
                            },
                            [bm, bent](const Vector& x) -> Matrix { return bent ? Matrix(bm * std::cos(x[0])) : bm; },
                            Vector::Constant(n, 0.5)};
    const auto policy = random_policy(rng, horizon, n, m);
    const auto batch = rollout(sys, policy, 6, rng());
    for (int k = 0; k < batch.samples(); ++k) {
      for (int t = 0; t < horizon; ++t) {
        REQUIRE(batch.control(k, t) == policy.mean(t, batch.state(k, t)) + batch.noise(k, t));
        REQUIRE(batch.state(k, t + 1) == sys.step(batch.state(k, t), batch.control(k, t)));
      }
    }
  }
}

TEST_CASE("path cost with constant rates counts the steps") {
  const Benchmark b = make_benchmark("scalar-lqr");
  REQUIRE(b.system.horizon == 10);
  const auto batch = rollout(b.system, b.initial_policy, 7, 3);
  CostFunction zero{[](int, const Vector&, const Vector&) { return 0.0; }, [](const Vector&) { return 0.0; }, {}};
  CostFunction unit{[](int, const Vector&, const Vector&) { return 1.0; }, [](const Vector&) { return 1.0; }, {}};
  CHECK(path_cost(batch, zero).isZero(0.0));
  CHECK((path_cost(batch, unit).array() == 11.0).all());
}

TEST_CASE("Riccati gains in degenerate cases") {
  // min 0.5 ((x + u)^2 + u^2)  =>  u = -x / 2
  LinearQuadraticProblem lq{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 0.0),
                            Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0), 1, Vector::Constant(1, 3.0)};
  CHECK(lqr_reference(lq).gains[0](0, 0) == doctest::Approx(-0.5).epsilon(1e-15));

  auto di = *make_benchmark("double-integrator").linear_quadratic;
  di.q.setZero();
  di.q_terminal.setZero();
  const auto free = lqr_reference(di);
  for (int t = 0; t < di.horizon; ++t) {
    CHECK(free.gains[t].isZero(0.0));
    CHECK(free.feedforward[t].isZero(0.0));
  }
  CHECK(free.optimal_cost == 0.0);
}

TEST_CASE("Riccati cost agrees with a brute-force search over open-loop controls") {
  // Exhaustive 5-point grids per step; each round recentres on the best sequence and shrinks the spacing.
  auto lq = *make_benchmark("double-integrator").linear_quadratic;
  lq.horizon = 4;
  const double optimum = lqr_reference(lq).optimal_cost;
  const auto open_loop = [&](const std::vector<double>& u) {
    Vector x = lq.initial_state;
    double total = 0.0;
    for (int t = 0; t < lq.horizon; ++t) {
      const Vector ut = Vector::Constant(1, u[t]);
      total += 0.5 * (x.dot(lq.q * x) + ut.dot(lq.r * ut));
      x = lq.a * x + lq.b * ut;
    }
    return total + 0.5 * x.dot(lq.q_terminal * x);
  };
  std::vector<double> centre(4, 0.0);
  double spacing = 1.0, best = open_loop(centre);
  for (int round = 0; round < 60; ++round) {
    std::vector<double> winner = centre, u(4);
    for (int code = 0; code < 625; ++code) {
      for (int t = 0, c = code; t < 4; ++t, c /= 5) u[t] = centre[t] + spacing * (c % 5 - 2);
      const double v = open_loop(u);
      if (v < best) best = v, winner = u;
    }
    CHECK(best >= optimum - 1e-12 * std::abs(optimum));
    if (winner == centre) spacing *= 0.5;
    centre = winner;
  }
  CHECK(best == doctest::Approx(optimum).epsilon(1e-9));
}
