#include "doctest.h"

#include <cmath>
#include <limits>

#include "bregmm/majorants.hpp"
#include "bregmm/rng.hpp"

using namespace bregmm;

namespace {

// Scalar model: H = [2], y = 3, b = 1; zeta = 0.5, rho = 0.5.
struct ScalarFixture {
  SparseNonnegOperator op{1, 1, {{0, 0, 2.0}}};
  PoissonModel model{op, Eigen::VectorXd::Constant(1, 3.0),
                     Eigen::VectorXd::Constant(1, 1.0)};
};

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

SparseNonnegOperator bench_op(std::uint64_t seed) {
  auto g = rng::stream(seed);
  std::vector<Triplet> trips;
  for (int m = 0; m < 12; ++m) {
    int nnz = 0;
    while (nnz < 3) {
      for (int n = 0; n < 16; ++n) {
        if (rng::uniform01(g) < 0.25) {
          trips.push_back({m, n, rng::uniform(g, 0.5, 2.0)});
          ++nnz;
        }
      }
    }
  }
  return SparseNonnegOperator(12, 16, trips);
}

PoissonModel bench_model(const SparseNonnegOperator& op, std::uint64_t seed) {
  auto g = rng::stream(seed);
  Eigen::VectorXd y(op.rows()), b(op.rows());
  for (int m = 0; m < op.rows(); ++m) {
    y[m] = std::floor(rng::uniform(g, 0.0, 9.0));
    b[m] = rng::uniform(g, 0.5, 1.5);
  }
  return PoissonModel(op, y, b);
}

}  // namespace

TEST_SUITE("majorants") {

TEST_CASE("coefficients on the scalar model") {
  ScalarFixture f;
  const Eigen::VectorXd z = scalar(1.0);
  // a1 = y H (z + zeta b)/(Hz + b) = 3*2*1.5/3 = 3
  CHECK(coeff_maj1(f.model, z)[0] == doctest::Approx(3.0).epsilon(1e-15));
  // mu = rho collapses a4 to a1 here (zeta_m b_m = rho for a single row)
  CHECK(coeff_maj4(f.model, z, f.model.rho)[0] == doctest::Approx(3.0).epsilon(1e-15));
  // a6 = z q = z H y/(Hz+b) = 2
  CHECK(coeff_maj6(f.model, z)[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(coeff_maj4(f.model, z, 0.0)[0] ==
        doctest::Approx(coeff_maj6(f.model, z)[0]).epsilon(1e-15));
  // a2 counts y over the column support
  const SparseNonnegOperator two_rows(2, 1, {{0, 0, 1.0}});
  Eigen::VectorXd y2(2);
  y2 << 3.0, 5.0;
  CHECK(coeff_maj2(two_rows, y2)[0] == 3.0);
}

TEST_CASE("curvature closed form") {
  // xi = -tau is the 1/(eta-tau)^2 limit
  CHECK(curvature_c_tau(-0.5, 2.0, 0.5) == doctest::Approx(1.0 / 2.25).epsilon(1e-12));
  // generic point, frozen from the log1p form (verified by quadrature)
  CHECK(curvature_c_tau(1.0, 2.0, 0.5) ==
        doctest::Approx(0.17168638271995135).epsilon(1e-14));
  // the series and log branches stay continuous across the switch: the value
  // itself moves by about (4/3)|dxi|/beta relatively, so nearby evaluations
  // straddling the branch point must agree to that order and keep the
  // monotone ordering
  const double tau = 0.3, eta = 1.1, beta = eta - tau;
  const double at_switch = curvature_c_tau(-tau + 1e-5 * beta, eta, tau);
  const double below = curvature_c_tau(-tau + 0.99e-5 * beta, eta, tau);
  const double above = curvature_c_tau(-tau + 1.01e-5 * beta, eta, tau);
  CHECK(below == doctest::Approx(at_switch).epsilon(5e-7));
  CHECK(above == doctest::Approx(at_switch).epsilon(5e-7));
  CHECK(below > at_switch);
  CHECK(at_switch > above);
  // decreasing in xi
  CHECK(curvature_c_tau(0.0, 2.0, 0.5) > curvature_c_tau(0.5, 2.0, 0.5));
  // domain: eta > tau > 0 and xi + eta > 0
  CHECK_THROWS(curvature_c_tau(0.0, 0.5, 0.5));
  CHECK_THROWS(curvature_c_tau(-3.0, 2.0, 0.5));
}

TEST_CASE("maj3 potential hand values and smoothness at the knee") {
  // z = 0, rho = 1, xi = 1 (quadratic side): 1/2 - 1 = -1/2
  CHECK(varphi_maj3(0.0, 1.0, 1.0) == doctest::Approx(-0.5).epsilon(1e-15));
  // z = 1, rho = 1, xi = 0 (log side): -ln(1/2)
  CHECK(varphi_maj3(1.0, 1.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // value and first derivative glue at xi = z
  const double z = 0.7, rho = 0.4;
  CHECK(varphi_maj3(z, rho, z) == doctest::Approx(0.0));
  const double h = 1e-7;
  CHECK(varphi_maj3_deriv(z, rho, z + h) ==
        doctest::Approx(varphi_maj3_deriv(z, rho, z - h)).epsilon(1e-6));
  CHECK(varphi_maj3_deriv(z, rho, z) == doctest::Approx(-1.0 / (z + rho)).epsilon(1e-15));
}

TEST_CASE("bregman distance of the log generator") {
  const auto h = make_separable_legendre(SeparableLegendre::Form::LogShift, 0.0,
                                         Eigen::VectorXd::Constant(1, 1.0));
  // D(2,1) for -ln x: 1 - ln 2
  CHECK(bregman_distance(h, scalar(2.0), scalar(1.0)) ==
        doctest::Approx(0.3068528194400547).epsilon(1e-14));
  CHECK(bregman_distance(h, scalar(1.0), scalar(1.0)) == 0.0);
  CHECK(bregman_distance(h, scalar(0.5), scalar(2.0)) > 0.0);
}

TEST_CASE("generator domains") {
  const auto log0 = make_separable_legendre(SeparableLegendre::Form::LogShift, 0.0,
                                            Eigen::VectorXd::Constant(2, 1.0));
  Eigen::VectorXd x(2);
  x << 1.0, -0.5;
  CHECK(!log0.contains(x));
  x << 1.0, 0.5;
  CHECK(log0.contains(x));
  const auto quad = make_separable_legendre(SeparableLegendre::Form::Quadratic, 0.0,
                                            Eigen::VectorXd::Constant(2, 1.0));
  x << -5.0, 7.0;
  CHECK(quad.contains(x));
  // zero coefficients make the coordinate inert: no domain constraint
  Eigen::VectorXd c(2);
  c << 0.0, 1.0;
  const auto partial = make_separable_legendre(SeparableLegendre::Form::LogShift, 0.0, c);
  x << -2.0, 1.0;
  CHECK(partial.contains(x));
  CHECK(partial.gradient(x)[0] == 0.0);
  CHECK_THROWS(make_separable_legendre(SeparableLegendre::Form::LogShift, 0.0,
                                       Eigen::VectorXd::Constant(1, -1.0)));
}

TEST_CASE("majorization and tangency on the bench model, all nine families") {
  const auto op = bench_op(21);
  const auto model = bench_model(op, 22);
  const int dim = op.cols();
  const auto ell = [&](const Eigen::VectorXd& v) { return ell_value(model, v); };
  const auto grad = [&](const Eigen::VectorXd& v) { return ell_gradient(model, v); };
  for (int k = 0; k < 9; ++k) {
    MajorantSpec spec{static_cast<MajorantKind>(k), -1.0, -1.0};
    CAPTURE(majorant_name(spec.kind));
    const Box box = domain_box(spec, model.rho, 3.0);
    const auto report = majorization_check(
        ell, grad, [&](const Eigen::VectorXd& z) { return make_generator(model, spec, z); },
        box, dim, 500, 23);
    CHECK(report.min_gap >= -1e-8);
    CHECK(report.max_tangency <= 1e-12);
  }
}

TEST_CASE("fault injection: halved coefficients break majorization") {
  const auto op = bench_op(21);
  const auto model = bench_model(op, 22);
  MajorantSpec spec{MajorantKind::Maj1, -1.0, -1.0};
  const Box box = domain_box(spec, model.rho, 3.0);
  const auto report = majorization_check(
      [&](const Eigen::VectorXd& v) { return ell_value(model, v); },
      [&](const Eigen::VectorXd& v) { return ell_gradient(model, v); },
      [&](const Eigen::VectorXd& z) {
        return MajorantGenerator(make_separable_legendre(
            SeparableLegendre::Form::LogShift, model.rho,
            (0.5 * coeff_maj1(model, z)).eval()));
      },
      box, op.cols(), 500, 23);
  CHECK(report.min_gap < -1e-8);
}

TEST_CASE("order relations sampled on the bench model") {
  const auto op = bench_op(31);
  const auto model = bench_model(op, 32);
  const int dim = op.cols();
  const double rho = model.rho;
  auto g = rng::stream(33);

  const auto sample_min = [&](MajorantKind tight, MajorantKind loose, double lo,
                              double mu_tight) {
    const Box box{lo + 1e-3, 3.0};
    double worst = std::numeric_limits<double>::infinity();
    Eigen::VectorXd z(dim);
    for (int i = 0; i < 20; ++i) {
      for (int n = 0; n < dim; ++n) z[n] = rng::uniform(g, box.lo, box.hi);
      const auto ht = make_generator(model, MajorantSpec{tight, mu_tight, -1.0}, z);
      const auto hl = make_generator(model, MajorantSpec{loose, -1.0, -1.0}, z);
      worst = std::min(worst, order_check(ht, hl, box, dim, 50, 34 + i));
    }
    return worst;
  };

  CHECK(sample_min(MajorantKind::Maj4, MajorantKind::Maj1, -rho, rho) >= -1e-9);
  CHECK(sample_min(MajorantKind::Maj1, MajorantKind::Maj2, -rho, -1.0) >= -1e-9);
  CHECK(sample_min(MajorantKind::Maj1, MajorantKind::Maj3, -rho, -1.0) >= -1e-9);
  CHECK(sample_min(MajorantKind::Maj1, MajorantKind::Maj5, 0.0, -1.0) >= -1e-9);
  CHECK(sample_min(MajorantKind::Maj6, MajorantKind::Maj5, 0.0, -1.0) >= -1e-9);
  CHECK(sample_min(MajorantKind::Maj7, MajorantKind::Maj8, -0.5 * rho, -1.0) >= -1e-9);
}

TEST_CASE("h3 against h7 on flat background: anchored order only") {
  const auto op = bench_op(51);
  const auto model = bench_model(op, 52);
  const int dim = op.cols();
  const double rho = model.rho;
  // zeta_m b_m = rho on every row
  const PoissonModel flat(op, model.y, (rho * op.row_sums()).eval());
  const double tau = MajorantSpec{MajorantKind::Maj7, -1.0, -1.0}.resolved_tau(rho);
  const Box box{-tau + 1e-3, 3.0};

  auto g = rng::stream(53);
  Eigen::VectorXd z(dim);
  for (int i = 0; i < 20; ++i) {
    for (int n = 0; n < dim; ++n) z[n] = rng::uniform(g, box.lo, box.hi);
    const auto h3 = make_generator(flat, MajorantSpec{MajorantKind::Maj3, -1.0, -1.0}, z);
    const auto h7 = make_generator(flat, MajorantSpec{MajorantKind::Maj7, -1.0, -1.0}, z);
    CHECK(order_check_anchored(h3, h7, z, box, 100, 54 + static_cast<std::uint64_t>(i)) >= -1e-9);
  }

  // Anchoring is essential, not cosmetic: the quadratic's weight is frozen at
  // z, so with z far from the barrier a pair of nearby points next to -tau
  // puts the piecewise log distance far above the quadratic one.
  z.setConstant(2.9);
  const auto h3 = make_generator(flat, MajorantSpec{MajorantKind::Maj3, -1.0, -1.0}, z);
  const auto h7 = make_generator(flat, MajorantSpec{MajorantKind::Maj7, -1.0, -1.0}, z);
  const Eigen::VectorXd xe = Eigen::VectorXd::Constant(dim, -tau + 1e-3);
  const Eigen::VectorXd ye = Eigen::VectorXd::Constant(dim, -tau + 2e-3);
  CHECK(h7.bregman(xe, ye) - h3.bregman(xe, ye) < 0.0);
  CHECK(h7.bregman(xe, z) - h3.bregman(xe, z) >= 0.0);
}

TEST_CASE("hessian characterization certificate for maj1") {
  const auto op = bench_op(41);
  const auto model = bench_model(op, 42);
  const int dim = op.cols();
  MajorantSpec spec{MajorantKind::Maj1, -1.0, -1.0};
  const Box box = domain_box(spec, model.rho, 3.0);
  auto g = rng::stream(43);
  Eigen::VectorXd x(dim), z(dim);
  for (int t = 0; t < 25; ++t) {
    for (int n = 0; n < dim; ++n) x[n] = rng::uniform(g, box.lo, box.hi);
    for (int n = 0; n < dim; ++n) z[n] = rng::uniform(g, box.lo, box.hi);
    const auto h = make_generator(model, spec, z);
    const double cert = hessian_characterization_check(
        [&](const Eigen::VectorXd& v, const Eigen::VectorXd& d) {
          return ell_dir_curvature(model, v, d);
        },
        h, x, z);
    CHECK(cert >= -1e-10 * (1.0 + std::abs(cert)));
  }
}

TEST_CASE("gauss-legendre weights integrate polynomials on [0,1]") {
  std::vector<double> nodes, weights;
  gauss_legendre_01(8, nodes, weights);
  double s0 = 0.0, s3 = 0.0, s7 = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    s0 += weights[i];
    s3 += weights[i] * std::pow(nodes[i], 3);
    s7 += weights[i] * std::pow(nodes[i], 7);
  }
  CHECK(s0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s3 == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(s7 == doctest::Approx(0.125).epsilon(1e-13));
}

}  // TEST_SUITE
