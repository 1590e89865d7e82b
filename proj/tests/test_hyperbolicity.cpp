#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "salab/hyperbolicity.hpp"

using namespace salab;

namespace {
Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}
}  // namespace

TEST_CASE("linear3d exponents are the diagonal entries") {
  const auto f = make_system("linear3d", {{"a", -1.0}, {"b", -2.0}, {"c", -3.0}});
  const auto rep = lyapunov_spectrum(f, v3(1, 1, 1), 1.0, 200.0, 0.5, 1e-10);
  CHECK(std::abs(rep.exponents[0] - (-1.0)) < 1e-8);
  CHECK(std::abs(rep.exponents[1] - (-2.0)) < 1e-8);
  CHECK(std::abs(rep.exponents[2] - (-3.0)) < 1e-8);
  CHECK(std::abs(rep.divergence_average - (-6.0)) < 1e-10);
}

TEST_CASE("exponent sum tracks the divergence average") {
  const auto f = make_system("lorenz");
  const auto rep = lyapunov_spectrum(f, v3(1, 1, 20), 50.0, 400.0, 0.5, 1e-8);
  const double sum = rep.exponents.sum();
  CHECK(std::abs(sum - rep.divergence_average) < 0.05 * std::abs(sum));
  // one exponent near zero (flow direction)
  CHECK(rep.exponents.cwiseAbs().minCoeff() < 0.05);
}

TEST_CASE("lorenz top exponent matches the single-vector oracle") {
  const auto f = make_system("lorenz");
  const auto rep = lyapunov_spectrum(f, v3(1, 1, 20), 50.0, 1000.0, 0.5, 1e-8);
  const double ref =
      oracle::benettin_top_exponent(f, v3(1, 1, 20), 50.0, 1000.0, 1e-3, 0.5);
  CHECK(std::abs(rep.exponents[0] - ref) < 0.05);
}

TEST_CASE("splitting of a diagonal system is exact") {
  // one stable and two non-stable directions; the splitting is axis-aligned
  const auto f = make_system("linear3d", {{"a", -3.0}, {"b", 0.5}, {"c", 1.0}});
  Trajectory orbit = sample_orbit(f, v3(1e-3, 1e-3, 1e-3), 0.0, 0.05, 400, 1e-10);
  const auto split = estimate_splitting(f, orbit, 1, 1e-10);
  const int mid = (split.valid_start + split.valid_end) / 2;
  const Vec es = split.stable_frames[mid].col(0);
  CHECK(std::abs(std::abs(es[0]) - 1.0) < 1e-8);
  const Mat& ec = split.central_frames[mid];
  CHECK(ec.row(0).norm() < 1e-8);  // E^c is the y-z plane
  CHECK(std::abs(split.min_angle - M_PI / 2) < 1e-4);
  CHECK(splitting_invariance_defect(split) < 1e-8);
}

TEST_CASE("lorenz splitting is invariant and transversal") {
  const auto f = make_system("lorenz");
  const Vec x0 = flow_map(f, v3(1, 1, 20), 50.0, 1e-9);
  Trajectory orbit = sample_orbit(f, x0, 0.0, 0.25, 1200, 1e-9);
  const auto split = estimate_splitting(f, orbit, 1, 1e-9);
  CHECK(split.min_angle > 0.05);
  CHECK(splitting_invariance_defect(split) < 1e-3);
}

TEST_CASE("diagonal system rates are exact") {
  const double a = -3.0, b = 0.5, c = 1.0;
  const auto f = make_system("linear3d", {{"a", a}, {"b", b}, {"c", c}});
  Trajectory orbit = sample_orbit(f, v3(1e-3, 1e-3, 1e-3), 0.0, 0.05, 400, 1e-10);
  const auto split = estimate_splitting(f, orbit, 1, 1e-10);
  const auto diag = check_sectional_conditions(f, split, 3.0, 16, 0.0);
  CHECK(std::abs(diag.contraction_rate - a) < 1e-6);
  CHECK(std::abs(diag.domination_rate - (a - std::min(b, c))) < 1e-6);
  CHECK(std::abs(diag.sectional_rate - (b + c)) < 1e-6);
  CHECK(diag.conclusive);
  CHECK(diag.fit_residuals.maxCoeff() < 1e-8);
}

TEST_CASE("saddle focus conorm growth on the unstable plane") {
  // spiral expansion at rate mu on the unstable plane, flow direction neutral
  const auto f = make_system("saddle_focus3d");
  Trajectory orbit = sample_orbit(f, v3(0.1, 1e-3, 0), 0.0, 0.05, 400, 1e-10);
  const auto split = estimate_splitting(f, orbit, 1, 1e-10);
  const auto diag = check_sectional_conditions(f, split, 3.0, 16, 0.0);
  CHECK(std::abs(diag.contraction_rate - (-2.0)) < 1e-5);
  CHECK(std::abs(diag.sectional_rate - 0.6) < 1e-5);  // 2*mu
}

TEST_CASE("flow direction is carried by the derivative") {
  const auto f = make_system("lorenz");
  const Vec x0 = flow_map(f, v3(1, 1, 20), 50.0, 1e-9);
  Trajectory orbit = sample_orbit(f, x0, 0.0, 0.25, 100, 1e-9);
  CHECK(flow_direction_invariance_defect(f, orbit, 1e-9) < 1e-5);
}

TEST_CASE("2-plane minimum formula vs direct minimization") {
  Rng rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    const int m = (trial % 2 == 0) ? 3 : 4;
    const int k = (trial % 2 == 0) ? 2 : 3;
    Mat A(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) A(i, j) = rng.normal();
    Mat C(m, k);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < k; ++j) C(i, j) = rng.normal();
    Eigen::HouseholderQR<Mat> qr(C);
    const Mat Q = qr.householderQ() * Mat::Identity(m, k);
    const double fast = min_two_plane_determinant(A, Q);
    const double slow = oracle::brute_force_min_two_plane(A, Q, 1000, rng);
    CHECK(std::abs(fast - slow) < 1e-6 * (1.0 + slow));
  }
}

TEST_CASE("two-dimensional central bundle: unique 2-plane") {
  Mat A(3, 3);
  A << 2, 0, 0, 0, 3, 0, 0, 0, 5;
  Mat C(3, 2);
  C << 1, 0, 0, 1, 0, 0;
  // only L = span(e1,e2); |det| = 6
  CHECK(min_two_plane_determinant(A, C) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("leading stretch factors of a diagonal map") {
  const double c = 1.0, tau = 1.5;
  const auto f = make_system("linear3d", {{"a", -1.0}, {"b", -2.0}, {"c", c}});
  const TimeTauMap F(f, tau, 1e-11);
  const auto ls = leading_stretch_factors(F, v3(1e-6, 1e-6, 1e-6), 5, 10);
  REQUIRE(ls.factors.size() == 5);
  for (double g : ls.factors)
    CHECK(g == doctest::Approx(std::exp(c * tau)).epsilon(1e-6));
  CHECK(std::abs(std::abs(ls.directions[0][2]) - 1.0) < 1e-6);
}

TEST_CASE("slope fit recovers an exact line") {
  std::vector<double> t = {0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double ti : t) y.push_back(3.0 - 0.7 * ti);
  auto [slope, rms] = fit_slope(t, y);
  CHECK(slope == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(rms < 1e-12);
}

TEST_CASE("too-short averaging window is rejected") {
  const auto f = make_system("lorenz");
  CHECK_THROWS_AS(lyapunov_spectrum(f, v3(1, 1, 20), 1.0, 10.0, 0.5, 1e-8),
                  InputError);
}
