#include "doctest.h"

#include <cmath>

#include "bregmm/regularizer.hpp"
#include "bregmm/rng.hpp"

using namespace bregmm;

TEST_SUITE("regularizer") {

TEST_CASE("geman-mcclure potential, weight and second derivative") {
  // theta(t) = t^2/(2 delta^2 + t^2)
  CHECK(gm_potential(1.0, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(gm_potential(1.0, 0.0) == 0.0);
  // omega = 4 delta^2/(2 delta^2 + t^2)^2, theta'(t) = omega t
  CHECK(gm_weight(1.0, 0.0) == doctest::Approx(1.0));
  const double h = 1e-6, t = 0.7, delta = 0.5;
  const double fd1 = (gm_potential(delta, t + h) - gm_potential(delta, t - h)) / (2.0 * h);
  CHECK(gm_weight(delta, t) * t == doctest::Approx(fd1).epsilon(1e-8));
  const double fd2 =
      (gm_potential(delta, t + h) - 2.0 * gm_potential(delta, t) + gm_potential(delta, t - h)) /
      (h * h);
  CHECK(gm_second_derivative(delta, t) == doctest::Approx(fd2).epsilon(1e-3));
}

TEST_CASE("forward differences and their adjoint") {
  GradientOperator gop(3, 2);
  Eigen::VectorXd x(6);
  x << 1, 2, 4, 8, 16, 32;  // row-major 3x2
  Eigen::VectorXd dh, dv;
  gop.apply(x, dh, dv);
  // horizontal: x[iy,ix+1]-x[iy,ix], zero at the last column
  CHECK(dh[0] == 1.0);
  CHECK(dh[1] == 2.0);
  CHECK(dh[2] == 0.0);
  CHECK(dh[3] == 8.0);
  CHECK(dh[4] == 16.0);
  CHECK(dh[5] == 0.0);
  // vertical: x[iy+1,ix]-x[iy,ix], zero at the last row
  CHECK(dv[0] == 7.0);
  CHECK(dv[1] == 14.0);
  CHECK(dv[2] == 28.0);
  CHECK(dv[3] == 0.0);

  // <Dx,(u,v)> = <x,D^T(u,v)> for random inputs
  auto g = rng::stream(3);
  Eigen::VectorXd u(6), v(6), xr(6);
  for (int i = 0; i < 6; ++i) {
    u[i] = rng::uniform(g, -1.0, 1.0);
    v[i] = rng::uniform(g, -1.0, 1.0);
    xr[i] = rng::uniform(g, -1.0, 1.0);
  }
  Eigen::VectorXd dhx, dvx;
  gop.apply(xr, dhx, dvx);
  const double lhs = dhx.dot(u) + dvx.dot(v);
  const double rhs = xr.dot(gop.adjoint(u, v));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
}

TEST_CASE("value and gradient against finite differences") {
  RegularizerParams params{0.7, 0.5, 0.01};
  GradientOperator gop(4, 3);
  auto g = rng::stream(5);
  Eigen::VectorXd x(12);
  for (int i = 0; i < 12; ++i) x[i] = rng::uniform(g, 0.0, 3.0);
  const Eigen::VectorXd grad = reg_gradient(params, gop, x);
  for (int i = 0; i < 12; ++i) {
    const double h = 1e-6;
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (reg_value(params, gop, xp) - reg_value(params, gop, xm)) / (2.0 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("lipschitz constant is the analytic bound") {
  RegularizerParams params{1.0, 1.0, 0.01};
  GradientOperator gop(8, 8);
  // lambda/delta^2 * ||D||^2-bound + epsilon = 8 + 0.01
  CHECK(reg_lipschitz(params, gop) == doctest::Approx(8.01).epsilon(1e-15));
}

TEST_CASE("descent lemma holds with the analytic constant") {
  RegularizerParams params{1.3, 0.4, 0.05};
  GradientOperator gop(6, 6);
  const double lip = reg_lipschitz(params, gop);
  auto g = rng::stream(8);
  Eigen::VectorXd x(36), z(36);
  for (int t = 0; t < 200; ++t) {
    for (int i = 0; i < 36; ++i) x[i] = rng::uniform(g, -2.0, 4.0);
    for (int i = 0; i < 36; ++i) z[i] = rng::uniform(g, -2.0, 4.0);
    const double lhs = reg_value(params, gop, x) - reg_value(params, gop, z) -
                       reg_gradient(params, gop, z).dot(x - z);
    CHECK(std::abs(lhs) <= 0.5 * lip * (x - z).squaredNorm() + 1e-12);
  }
}

TEST_CASE("gradient variation is lipschitz with the analytic constant") {
  RegularizerParams params{0.9, 0.6, 0.02};
  GradientOperator gop(5, 7);
  const double lip = reg_lipschitz(params, gop);
  auto g = rng::stream(9);
  Eigen::VectorXd x(35), z(35);
  for (int t = 0; t < 200; ++t) {
    for (int i = 0; i < 35; ++i) x[i] = rng::uniform(g, -2.0, 4.0);
    for (int i = 0; i < 35; ++i) z[i] = rng::uniform(g, -2.0, 4.0);
    const double lhs = (reg_gradient(params, gop, x) - reg_gradient(params, gop, z)).norm();
    CHECK(lhs <= lip * (x - z).norm() * (1.0 + 1e-12) + 1e-12);
  }
}

TEST_CASE("parameter validation") {
  GradientOperator gop(2, 2);
  CHECK_THROWS(validate(RegularizerParams{-1.0, 0.5, 0.01}));
  CHECK_THROWS(validate(RegularizerParams{0.0, 0.5, 0.01}));  // strictly positive
  CHECK_THROWS(validate(RegularizerParams{1.0, 0.0, 0.01}));
  CHECK_THROWS(validate(RegularizerParams{1.0, 0.5, -0.1}));
  CHECK_THROWS(validate(RegularizerParams{1.0, 0.5, 0.0}));
  CHECK_NOTHROW(validate(RegularizerParams{0.2, 0.5, 0.05}));
  (void)gop;
}

}  // TEST_SUITE
