#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "salab/systems.hpp"

using namespace salab;

namespace {
Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}
}  // namespace

TEST_CASE("lorenz field vanishes at the origin") {
  const auto f = make_system("lorenz");
  CHECK(f.eval(Vec::Zero(3)).norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("lorenz field vanishes at C+ (hand-solved fixed point)") {
  const auto f = make_system("lorenz");
  const double beta = 8.0 / 3.0, rho = 28.0;
  const double q = std::sqrt(beta * (rho - 1.0));
  CHECK(f.eval(v3(q, q, rho - 1.0)).norm() < 1e-12);
}

TEST_CASE("linear3d is the diagonal field") {
  const auto f = make_system("linear3d", {{"a", -1.0}, {"b", -2.0}, {"c", 0.5}});
  const Vec r = f.eval(v3(1, 1, 1));
  CHECK(r[0] == doctest::Approx(-1.0));
  CHECK(r[1] == doctest::Approx(-2.0));
  CHECK(r[2] == doctest::Approx(0.5));
  CHECK(f.jacobian(v3(3, -4, 9)).diagonal().isApprox(r));
}

TEST_CASE("lorenz Jacobian at origin (hand-differentiated)") {
  const auto f = make_system("lorenz");
  const Mat J = f.jacobian(Vec::Zero(3));
  Mat ref(3, 3);
  ref << -10, 10, 0, 28, -1, 0, 0, 0, -8.0 / 3.0;
  CHECK((J - ref).norm() < 1e-14);
}

TEST_CASE("analytic Jacobians match central finite differences") {
  Rng rng(7);
  const double h = 1e-5;
  for (const auto& d : list_systems()) {
    const auto f = make_system(d.name);
    CHECK_MESSAGE(jacobian_fd_defect(f, 100, h, rng) <= 10.0 * h * h, d.name);
  }
}

TEST_CASE("a corrupted Jacobian is caught by the finite-difference check") {
  auto f = make_system("lorenz");
  auto good = f.jac_into;
  f.jac_into = [good](const Vec& x, Mat& J) {
    good(x, J);
    J(1, 0) += 0.5;  // injected fault
  };
  Rng rng(7);
  CHECK(jacobian_fd_defect(f, 100, 1e-5, rng) > 10.0 * 1e-10);
}

TEST_CASE("declared singularities are zeros of the field") {
  for (const auto& d : list_systems()) {
    const auto f = make_system(d.name);
    CHECK(static_cast<int>(f.singularities.size()) == d.n_singularities);
    for (const auto& s : f.singularities) CHECK(f.eval(s).norm() <= 1e-12);
  }
}

TEST_CASE("lorenz divergence is the constant -(sigma+1+beta)") {
  const auto f = make_system("lorenz");
  const double expected = -(10.0 + 1.0 + 8.0 / 3.0);
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vec x = rng.uniform_in_box(f.trapping_region);
    CHECK(std::abs(f.divergence(x) - expected) < 1e-12);
  }
}

TEST_CASE("catalog descriptors") {
  const auto systems = list_systems();
  bool has_lorenz = false, has_ou = false;
  for (const auto& d : systems) {
    if (d.name == "lorenz") {
      has_lorenz = true;
      CHECK(d.dimension == 3);
      for (const auto& p : d.parameters) {
        if (p.name == "sigma") CHECK(p.default_value == doctest::Approx(10.0));
        if (p.name == "rho") CHECK(p.default_value == doctest::Approx(28.0));
        if (p.name == "beta") CHECK(p.default_value == doctest::Approx(8.0 / 3.0));
      }
    }
    if (d.name == "ou1d") {
      has_ou = true;
      CHECK(d.dimension == 1);
      CHECK(d.n_singularities == 1);
    }
  }
  CHECK(has_lorenz);
  CHECK(has_ou);
}

TEST_CASE("dimension mismatch is an input error") {
  const auto f = make_system("lorenz");
  CHECK_THROWS_AS(f.eval(Vec::Zero(2)), InputError);
  CHECK_THROWS_AS(f.jacobian(Vec::Zero(4)), InputError);
}

TEST_CASE("unknown system and unknown parameter are rejected") {
  CHECK_THROWS_AS(make_system("roessler"), InputError);
  CHECK_THROWS_AS(make_system("lorenz", {{"kappa", 1.0}}), InputError);
}

TEST_CASE("inward transversality holds for absorbing catalog boxes") {
  Rng rng(3);
  const auto ou = make_system("ou1d");
  CHECK(inward_fraction(ou, 10000, rng) >= 0.99);
  const auto lin = make_system("linear3d");  // all-contracting defaults
  CHECK(inward_fraction(lin, 10000, rng) >= 0.99);
}
