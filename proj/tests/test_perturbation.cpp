#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "salab/perturbation.hpp"

using namespace salab;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }

MarkovKernel ou_kernel(const VectorField& f, double eps, double tau = 1.0) {
  return MarkovKernel(TimeTauMap(f, tau, 1e-12), eps);
}
}  // namespace

TEST_CASE("kernel rejects nonpositive noise") {
  const auto f = make_system("ou1d");
  CHECK_THROWS_AS(ou_kernel(f, 0.0), InputError);
  CHECK_THROWS_AS(ou_kernel(f, -0.1), InputError);
}

TEST_CASE("chains are reproducible and seed-sensitive") {
  const auto f = make_system("ou1d");
  const auto k = ou_kernel(f, 0.1);
  const auto a = run_chain(k, v1(1.0), 50, 7);
  const auto b = run_chain(k, v1(1.0), 50, 7);
  const auto c = run_chain(k, v1(1.0), 50, 8);
  REQUIRE(a.states.size() == 50);
  for (int i = 0; i < 50; ++i) CHECK((a.states[i] - b.states[i]).norm() == 0.0);
  CHECK((a.states[0] - c.states[0]).norm() > 0.0);
}

TEST_CASE("one-step mean and variance of the AR(1) chain") {
  // x' = e^{-tau} x + eps xi
  const auto f = make_system("ou1d");
  const double eps = 0.05, tau = 1.0;
  const auto k = ou_kernel(f, eps, tau);
  const double r = std::exp(-tau);
  Rng rng(11);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  const Vec x = v1(0.7);
  for (int i = 0; i < n; ++i) {
    const double y = kernel_step(k, x, rng)[0];
    s1 += y;
    s2 += y * y;
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean - r * 0.7) < 4.0 * eps / std::sqrt(double(n)));
  CHECK(std::abs(var - eps * eps) < 0.02 * eps * eps);
}

TEST_CASE("lag-1 autocorrelation of the stationary AR(1) chain") {
  const auto f = make_system("ou1d");
  const double tau = 1.0;
  const auto k = ou_kernel(f, 0.1, tau);
  const auto ch = run_chain(k, v1(0.0), 200000, 13);
  double s1 = 0, s2 = 0, sc = 0;
  const int n = static_cast<int>(ch.states.size()) - 1;
  for (int i = 1000; i < n; ++i) {
    const double x = ch.states[i][0], y = ch.states[i + 1][0];
    s1 += x;
    s2 += x * x;
    sc += x * y;
  }
  const int m = n - 1000;
  const double mean = s1 / m;
  const double var = s2 / m - mean * mean;
  const double cov = sc / m - mean * mean;
  CHECK(std::abs(cov / var - std::exp(-tau)) < 0.01);
}

TEST_CASE("stationary measure of the AR(1) chain matches the closed form") {
  const auto f = make_system("ou1d");
  const double a = 1.0, tau = 1.0, eps = 0.1;
  const auto k = ou_kernel(f, eps, tau);
  const double sd = oracle::ou_stationary_std(a, tau, eps);

  Box b;
  b.lo = v1(-8.0 * sd);
  b.hi = v1(8.0 * sd);
  const auto grid = std::make_shared<GridPartition>(b, 128);
  const auto mu = estimate_stationary(k, v1(0.0), 1000, 400000, grid, 3, 8, 0);

  double m1 = 0.0, m2 = 0.0;
  for (long c = 0; c < grid->n_cells(); ++c) {
    const double x = grid->cell_center(c)[0];
    m1 += mu.masses()[c] * x;
    m2 += mu.masses()[c] * x * x;
  }
  const double var = m2 - m1 * m1;
  CHECK(std::abs(std::sqrt(var) - sd) / sd < 0.03);
  CHECK(std::abs(m1) < 0.05 * sd);
}

TEST_CASE("stationary estimate is thread-count independent") {
  const auto f = make_system("ou1d");
  const auto k = ou_kernel(f, 0.1);
  Box b;
  b.lo = v1(-2.0);
  b.hi = v1(2.0);
  const auto grid = std::make_shared<GridPartition>(b, 32);
  const auto mu1 = estimate_stationary(k, v1(0.0), 200, 20000, grid, 5, 8, 1);
  const auto mu4 = estimate_stationary(k, v1(0.0), 200, 20000, grid, 5, 8, 4);
  CHECK((mu1.masses() - mu4.masses()).norm() == 0.0);
}

TEST_CASE("stationarity defect accepts the true stationary law") {
  const auto f = make_system("ou1d");
  const auto k = ou_kernel(f, 0.1);
  Box b;
  b.lo = v1(-2.0);
  b.hi = v1(2.0);
  const auto grid = std::make_shared<GridPartition>(b, 64);
  const auto mu = estimate_stationary(k, v1(0.0), 2000, 400000, grid, 9, 8, 0);
  const auto rep = check_stationarity(k, mu, 200000, 17);
  CHECK_FALSE(rep.insufficient_data);
  CHECK(rep.pass);
  CHECK(rep.defect <= 3.0 * rep.floor);
}

TEST_CASE("stationarity defect rejects a far-from-stationary law") {
  const auto f = make_system("ou1d");
  const auto k = ou_kernel(f, 0.05);
  Box b;
  b.lo = v1(-2.0);
  b.hi = v1(2.0);
  const auto grid = std::make_shared<GridPartition>(b, 64);
  // point mass far from the fixed point: one kernel step moves it a lot
  EmpiricalMeasure mu(grid, 8);
  Rng rng(19);
  for (int i = 0; i < 100000; ++i)
    mu.add_sample(v1(1.5 + 0.01 * rng.normal()), i % 8);
  mu.finalize();
  const auto rep = check_stationarity(k, mu, 100000, 23);
  CHECK_FALSE(rep.pass);
  CHECK(rep.defect > 10.0 * rep.floor);
}

TEST_CASE("zero test points flags insufficient data") {
  const auto f = make_system("ou1d");
  const auto k = ou_kernel(f, 0.1);
  Box b;
  b.lo = v1(-2.0);
  b.hi = v1(2.0);
  const auto grid = std::make_shared<GridPartition>(b, 16);
  EmpiricalMeasure mu(grid);
  mu.add_sample(v1(0.0));
  mu.finalize();
  const auto rep = check_stationarity(k, mu, 0, 1);
  CHECK(rep.insufficient_data);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("two-stage composition agrees with direct simulation") {
  const auto f = make_system("ou1d");
  const auto k = ou_kernel(f, 0.1);
  Box b;
  b.lo = v1(-2.0);
  b.hi = v1(2.0);
  const auto grid = std::make_shared<GridPartition>(b, 32);
  const auto rep = chapman_kolmogorov_check(k, v1(0.5), 2, 5, 200000, grid, 29, 0);
  CHECK_FALSE(rep.insufficient_data);
  CHECK(rep.pass);
}

TEST_CASE("degenerate split times are rejected") {
  const auto f = make_system("ou1d");
  const auto k = ou_kernel(f, 0.1);
  Box b;
  b.lo = v1(-2.0);
  b.hi = v1(2.0);
  const auto grid = std::make_shared<GridPartition>(b, 16);
  CHECK_THROWS_AS(chapman_kolmogorov_check(k, v1(0.0), 0, 5, 100, grid, 1),
                  InputError);
  CHECK_THROWS_AS(chapman_kolmogorov_check(k, v1(0.0), 5, 5, 100, grid, 1),
                  InputError);
}

TEST_CASE("hitting probability near the stable point is order one") {
  // for ou1d the singularity is the attracting fixed point: the chain
  // concentrates near it, so the hit probability is large, not small
  const auto f = make_system("ou1d");
  const double eps = 0.1;
  const auto k = ou_kernel(f, eps);
  const auto est = singularity_avoidance(k, v1(1.0), 0.5, 10, 20000, 31, 0);
  CHECK(est.radius == doctest::Approx(std::sqrt(eps)));
  CHECK(est.probability > 0.5);
}

TEST_CASE("avoidance probability decreases with the noise amplitude on lorenz") {
  const auto lf = make_system("lorenz");
  Vec x0(3);
  x0 << 1, 1, 20;
  const Vec base = TimeTauMap(lf, 1.5, 1e-6).iterate(x0, 10);
  double prev = 1.0;
  for (double eps : {0.4, 0.1}) {
    MarkovKernel k(TimeTauMap(lf, 1.5, 1e-6), eps);
    const auto est = singularity_avoidance(k, base, 0.5, 7, 4000, 37, 0);
    CHECK(est.probability <= prev + 0.05);
    prev = est.probability;
  }
}

TEST_CASE("chain length window endpoints") {
  const auto [lo, hi] = chain_length_window(0.05);
  const double l = std::log(1.0 / 0.05);
  CHECK(lo == static_cast<long>(std::ceil(l * l)));
  CHECK(hi == static_cast<long>(std::ceil(l * l * l * l)));
  CHECK(lo < hi);
}

TEST_CASE("boundary policies confine the chain") {
  const auto f = make_system("ou1d");
  for (const char* name : {"reflect", "resample", "clamp"}) {
    MarkovKernel k(TimeTauMap(f, 1.0, 1e-12), 5.0,
                   boundary_policy_from_string(name));
    const auto ch = run_chain(k, v1(0.0), 2000, 41);
    for (const auto& x : ch.states) CHECK(f.trapping_region.contains(x));
  }
  CHECK_THROWS_AS(boundary_policy_from_string("bounce"), InputError);
}

TEST_CASE("stability study on the AR(1) family converges to the point mass") {
  const auto f = make_system("ou1d");
  Box b;
  b.lo = v1(-2.0);
  b.hi = v1(2.0);
  const auto grid = std::make_shared<GridPartition>(b, 64);
  // deterministic invariant measure = point mass at the origin
  const auto srb = srb_estimate(f, v1(0.5), 20.0, 100.0, 0.5, grid, 1e-10, 8);
  StabilityConfig cfg;
  cfg.tau = 1.0;
  cfg.tol = 1e-10;
  cfg.burn_in = 500;
  cfg.n_samples = 100000;
  cfg.seed = 43;
  const auto table = stability_study(f, {0.4, 0.2, 0.1, 0.05}, v1(0.5), srb, cfg);
  REQUIRE(table.rows.size() == 4);
  CHECK(table.monotone);
  for (size_t i = 1; i < table.rows.size(); ++i)
    CHECK(table.rows[i].distance <=
          table.rows[i - 1].distance + table.rows[i].floor + table.rows[i - 1].floor);
  CHECK(table.rows.back().distance < table.rows.front().distance);
}

TEST_CASE("stability study rejects non-descending noise lists") {
  const auto f = make_system("ou1d");
  Box b;
  b.lo = v1(-2.0);
  b.hi = v1(2.0);
  const auto grid = std::make_shared<GridPartition>(b, 16);
  const auto srb = srb_estimate(f, v1(0.5), 5.0, 20.0, 0.5, grid, 1e-10, 4);
  StabilityConfig cfg;
  CHECK_THROWS_AS(stability_study(f, {0.1, 0.2, 0.3, 0.4}, v1(0.5), srb, cfg),
                  InputError);
  CHECK_THROWS_AS(stability_study(f, {0.2, 0.1}, v1(0.5), srb, cfg), InputError);
}
