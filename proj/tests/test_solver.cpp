#include "doctest.h"

#include <cmath>
#include <limits>

#include "bregmm/rng.hpp"
#include "bregmm/solver.hpp"

using namespace bregmm;

namespace {

// Scalar model: H = [2], y = 3, b = 1.
struct ScalarFixture {
  SparseNonnegOperator op{1, 1, {{0, 0, 2.0}}};
  PoissonModel model{op, Eigen::VectorXd::Constant(1, 3.0),
                     Eigen::VectorXd::Constant(1, 1.0)};
  Objective objective{&model, 1, 1, {}};
};

// Tiny 3x3 image with a 6-row strip-like operator, enough structure for
// run-level properties without any tomography plumbing.
struct TinyFixture {
  SparseNonnegOperator op;
  PoissonModel model;
  Objective objective;

  TinyFixture()
      : op(6, 9,
           {{0, 0, 1.0}, {0, 1, 1.0}, {0, 2, 1.0}, {1, 3, 1.0}, {1, 4, 1.0},
            {1, 5, 1.0}, {2, 6, 1.0}, {2, 7, 1.0}, {2, 8, 1.0}, {3, 0, 1.0},
            {3, 3, 1.0}, {3, 6, 1.0}, {4, 1, 1.0}, {4, 4, 1.0}, {4, 7, 1.0},
            {5, 2, 1.0}, {5, 5, 1.0}, {5, 8, 1.0}}),
        model(op, counts(), Eigen::VectorXd::Constant(6, 0.5)),
        objective{&model, 3, 3, {}} {}

  static Eigen::VectorXd counts() {
    Eigen::VectorXd y(6);
    y << 7, 12, 4, 9, 8, 6;
    return y;
  }
};

Eigen::VectorXd scalarVec(double v) { return Eigen::VectorXd::Constant(1, v); }

SolverConfig base_config(MajorantKind kind) {
  SolverConfig config;
  config.majorant.kind = kind;
  config.reg = RegularizerParams{0.2, 0.5, 0.05};
  config.max_iters = 400;
  config.step_tol = 0.0;
  config.record_iterates = true;
  return config;
}

// Surrogate value Q(x, z) - f(z) for a separable generator; enough to verify
// minimizers by brute force.
double surrogate_gap(const Objective& objective, const SolverConfig& config,
                     const MajorantGenerator& h, double m_r, const Eigen::VectorXd& z,
                     const Eigen::VectorXd& x) {
  const Eigen::VectorXd grad = objective_gradient(objective, config.reg, z);
  return grad.dot(x - z) + h.bregman(x, z) + 0.5 * m_r * (x - z).squaredNorm();
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("closed-form step matches the quadratic root on one pixel") {
  ScalarFixture f;
  SolverConfig config;
  config.majorant.kind = MajorantKind::Maj6;
  config.reg = RegularizerParams{1e-300, 0.5, 0.01};  // effectively pure ridge
  config.m_r = 0.02;
  config.epsilon0 = 0.01;

  // z = 1: q = 2, a = z q = 2, grad f = colsum - q + eps z = 0.01,
  // d = grad + a/z - m_r z = 1.99, root of 0.02 u^2 + 1.99 u - 2 = 0.
  const Eigen::VectorXd x1 = vbmm_step(f.objective, config, scalarVec(1.0));
  CHECK(x1[0] == doctest::Approx(0.995073652523154).epsilon(1e-14));
}

TEST_CASE("step minimizes the surrogate (grid check, all solver families)") {
  ScalarFixture f;
  for (MajorantKind kind : {MajorantKind::Maj1, MajorantKind::Maj4, MajorantKind::Maj5,
                            MajorantKind::Maj6, MajorantKind::Maj8}) {
    CAPTURE(majorant_name(kind));
    SolverConfig config;
    config.majorant.kind = kind;
    config.reg = RegularizerParams{1e-300, 0.5, 0.01};
    config.m_r = 0.5;
    config.epsilon0 = 1e-4;
    const Eigen::VectorXd z = scalarVec(1.3);
    const Eigen::VectorXd xs = vbmm_step(f.objective, config, z);
    const auto h = make_generator(f.model, config.majorant, z);
    const double at_step = surrogate_gap(f.objective, config, h, config.m_r, z, xs);
    for (double u = 1e-4; u < 4.0; u += 1e-4) {
      const double val = surrogate_gap(f.objective, config, h, config.m_r, z, scalarVec(u));
      CHECK(at_step <= val + 1e-7);
    }
  }
}

TEST_CASE("plug-back optimality of the coordinate solve") {
  TinyFixture f;
  for (MajorantKind kind : {MajorantKind::Maj1, MajorantKind::Maj4, MajorantKind::Maj5,
                            MajorantKind::Maj6, MajorantKind::Maj8}) {
    CAPTURE(majorant_name(kind));
    SolverConfig config;
    config.majorant.kind = kind;
    config.reg = RegularizerParams{0.2, 0.5, 0.05};  // L_R = 6.45
    config.epsilon0 = 1e-3;
    config.m_r = 8.0;
    auto g = rng::stream(77);
    Eigen::VectorXd z(9);
    for (int t = 0; t < 10; ++t) {
      for (int n = 0; n < 9; ++n) z[n] = rng::uniform(g, 0.05, 2.5);
      const Eigen::VectorXd xs = vbmm_step(f.objective, config, z);
      const auto h = make_generator(f.model, config.majorant, z);
      const Eigen::VectorXd grad_f = objective_gradient(f.objective, config.reg, z);
      const Eigen::VectorXd dh = h.gradient(xs) - h.gradient(z);
      for (int n = 0; n < 9; ++n) {
        const double opt = grad_f[n] + dh[n] + config.m_r * (xs[n] - z[n]);
        if (xs[n] > config.epsilon0 + 1e-12) {
          CHECK(std::abs(opt) <= 1e-8 * (1.0 + std::abs(grad_f[n])));
        } else {
          CHECK(opt >= -1e-8 * (1.0 + std::abs(grad_f[n])));  // clamped: ascent direction
        }
      }
    }
  }
}

TEST_CASE("monotone descent and sufficient decrease on a run") {
  TinyFixture f;
  for (MajorantKind kind : {MajorantKind::Maj1, MajorantKind::Maj4, MajorantKind::Maj5,
                            MajorantKind::Maj6, MajorantKind::Maj8}) {
    CAPTURE(majorant_name(kind));
    SolverConfig config = base_config(kind);
    const Eigen::VectorXd x0 = warm_start(f.objective, config);
    const RunResult run = vbmm_run(f.objective, config, x0);
    REQUIRE(run.history.rows.size() == 401);
    for (std::size_t k = 0; k + 1 < run.history.rows.size(); ++k) {
      const auto& row = run.history.rows[k];
      const auto& next = run.history.rows[k + 1];
      CHECK(next.objective <= row.objective + 1e-9 * (1.0 + std::abs(row.objective)));
      CHECK(row.suff_decrease_slack >= -1e-9 * (1.0 + std::abs(row.objective)));
    }
    // last row carries no transition
    CHECK(std::isnan(run.history.rows.back().step_norm));
    CHECK(std::isnan(run.history.rows.back().residual_w));
    CHECK(std::isnan(run.history.rows.back().suff_decrease_slack));
  }
}

TEST_CASE("trace columns are consistent with the recorded iterates") {
  TinyFixture f;
  SolverConfig config = base_config(MajorantKind::Maj1);
  config.max_iters = 30;
  const Eigen::VectorXd x0 = warm_start(f.objective, config);
  const RunResult run = vbmm_run(f.objective, config, x0);
  const auto& hist = run.history;
  REQUIRE(hist.iterates.size() == hist.rows.size());
  const double gamma = hist.gamma;
  for (std::size_t k = 0; k + 1 < hist.rows.size(); ++k) {
    const Eigen::VectorXd& xk = hist.iterates[k];
    const Eigen::VectorXd& xn = hist.iterates[k + 1];
    const double fk = objective_value(f.objective, config.reg, xk);
    const double fn = objective_value(f.objective, config.reg, xn);
    CHECK(hist.rows[k].objective == doctest::Approx(fk).epsilon(1e-12));
    CHECK(hist.rows[k].step_norm == doctest::Approx((xn - xk).norm()).epsilon(1e-12));
    CHECK(hist.rows[k].residual_w ==
          doctest::Approx(residual_w(f.objective, config, xk, xn)).epsilon(1e-9));
    const double slack = fk - fn - 0.5 * gamma * (xn - xk).squaredNorm();
    CHECK(hist.rows[k].suff_decrease_slack == doctest::Approx(slack).epsilon(1e-9));
  }
  CHECK(hist.rows.back().objective ==
        doctest::Approx(objective_value(f.objective, config.reg, run.x)).epsilon(1e-12));
}

TEST_CASE("per-iteration operator call accounting") {
  TinyFixture f;
  const struct {
    MajorantKind kind;
    std::int64_t fwd;
    std::int64_t adj;
  } expected[] = {{MajorantKind::Maj1, 1, 2},
                  {MajorantKind::Maj4, 1, 1},
                  {MajorantKind::Maj5, 1, 2},
                  {MajorantKind::Maj6, 1, 1},
                  {MajorantKind::Maj8, 1, 2}};
  for (const auto& e : expected) {
    CAPTURE(majorant_name(e.kind));
    SolverConfig config = base_config(e.kind);
    config.max_iters = 25;
    config.record_iterates = false;
    f.op.reset_call_counters();
    const RunResult run = vbmm_run(f.objective, config, warm_start(f.objective, config));
    const auto& rows = run.history.rows;
    REQUIRE(rows.size() == 26);
    // setup eval plus one eval per iteration, all fused
    CHECK(rows.back().fwd_calls - rows.front().fwd_calls == 25 * e.fwd);
    CHECK(rows.back().adj_calls - rows.front().adj_calls == 25 * e.adj);
    CHECK(rows.front().fwd_calls == e.fwd);
    CHECK(rows.front().adj_calls == e.adj);
    CHECK(static_cast<std::int64_t>(f.op.forward_calls()) == rows.back().fwd_calls);
    CHECK(static_cast<std::int64_t>(f.op.adjoint_calls()) == rows.back().adj_calls);
  }
}

TEST_CASE("stopping rules") {
  TinyFixture f;
  SolverConfig config = base_config(MajorantKind::Maj6);

  SUBCASE("step tolerance") {
    config.max_iters = 100000;
    config.step_tol = 1e-10;
    const RunResult run = vbmm_run(f.objective, config, warm_start(f.objective, config));
    CHECK(run.history.stop == StopReason::StepTol);
    CHECK(run.history.iterations() < 100000);
  }
  SUBCASE("iteration budget") {
    config.max_iters = 7;
    const RunResult run = vbmm_run(f.objective, config, warm_start(f.objective, config));
    CHECK(run.history.stop == StopReason::MaxIters);
    CHECK(run.history.iterations() == 7);
  }
  SUBCASE("wall budget") {
    config.max_iters = 400;
    config.wall_budget_s = 1e-9;
    const RunResult run = vbmm_run(f.objective, config, warm_start(f.objective, config));
    CHECK(run.history.stop == StopReason::WallBudget);
    CHECK(run.history.iterations() >= 1);
  }
}

TEST_CASE("defaults: m_r from the regularizer bound, family epsilon0") {
  TinyFixture f;
  SolverConfig config;
  config.reg = RegularizerParams{0.2, 0.5, 0.05};
  const GradientOperator gop(3, 3);
  const double lr = reg_lipschitz(config.reg, gop);

  config.majorant.kind = MajorantKind::Maj6;
  CHECK(default_epsilon0(config, 0.4) == doctest::Approx(0.01));
  config.majorant.kind = MajorantKind::Maj5;
  CHECK(default_epsilon0(config, 0.4) == doctest::Approx(0.01));
  config.majorant.kind = MajorantKind::Maj1;
  CHECK(default_epsilon0(config, 0.4) == 0.0);
  config.majorant.kind = MajorantKind::Maj8;
  CHECK(default_epsilon0(config, 0.4) == 0.0);
  config.majorant.kind = MajorantKind::Maj4;  // mu = rho by default: log-shift
  CHECK(default_epsilon0(config, 0.4) == 0.0);
  config.majorant.mu = 0.0;                   // mu = 0 degenerates to log-0
  CHECK(default_epsilon0(config, 0.4) == doctest::Approx(0.01));

  config.majorant = MajorantSpec{MajorantKind::Maj6, -1.0, -1.0};
  config.max_iters = 3;
  const RunResult run = vbmm_run(f.objective, config, warm_start(f.objective, config));
  CHECK(run.history.gamma == doctest::Approx(1.01 * lr - lr));

  SolverConfig bad = config;
  bad.m_r = 0.5 * lr;  // must exceed L_R
  CHECK_THROWS(vbmm_run(f.objective, bad, warm_start(f.objective, bad)));
}

TEST_CASE("warm start level and floors") {
  TinyFixture f;
  SolverConfig config;
  config.reg = RegularizerParams{0.2, 0.5, 0.05};
  config.majorant.kind = MajorantKind::Maj1;
  // mean(y - b) = (46 - 3)/6, mean colsum = 2
  const Eigen::VectorXd x0 = warm_start(f.objective, config);
  CHECK(x0.size() == 9);
  CHECK(x0[0] == doctest::Approx((46.0 - 3.0) / 6.0 / 2.0).epsilon(1e-12));
  CHECK(x0.minCoeff() == x0.maxCoeff());
  // log-0 families keep the start strictly positive under the default floor,
  // and reject an explicit zero floor outright
  config.majorant.kind = MajorantKind::Maj6;
  config.epsilon0 = -1.0;
  CHECK(warm_start(f.objective, config).minCoeff() >= 1e-3);
  config.epsilon0 = 0.0;
  CHECK_THROWS(warm_start(f.objective, config));
}

TEST_CASE("masked objective: variables embed into the image for the regularizer") {
  TinyFixture f;
  // keep a 5-pixel plus-shape
  SparseNonnegOperator::Restricted r =
      f.op.restrict_columns({0, 1, 0, 1, 1, 1, 0, 1, 0});
  Eigen::VectorXd yk(r.rows_kept.size()), bk(r.rows_kept.size());
  for (std::size_t i = 0; i < r.rows_kept.size(); ++i) {
    yk[static_cast<Eigen::Index>(i)] = f.model.y[r.rows_kept[i]];
    bk[static_cast<Eigen::Index>(i)] = f.model.b[r.rows_kept[i]];
  }
  PoissonModel sub(r.op, yk, bk);
  Objective masked{&sub, 3, 3, {1, 3, 4, 5, 7}};
  CHECK(masked.dim() == 5);

  Eigen::VectorXd xv(5);
  xv << 1, 2, 3, 4, 5;
  const Eigen::VectorXd img = masked.embed(xv);
  CHECK(img.size() == 9);
  CHECK(img[0] == 0.0);
  CHECK(img[1] == 1.0);
  CHECK(img[4] == 3.0);
  CHECK(img[8] == 0.0);
  CHECK(masked.restrict(img).isApprox(xv));

  SolverConfig config;
  config.reg = RegularizerParams{0.2, 0.5, 0.05};
  config.majorant.kind = MajorantKind::Maj6;
  config.max_iters = 50;
  const RunResult run = vbmm_run(masked, config, warm_start(masked, config));
  CHECK(run.x.size() == 5);
  CHECK(run.x.minCoeff() >= 0.01);  // log-0 default floor
  // value agrees with the regularizer evaluated on the embedded image
  const GradientOperator gop(3, 3);
  const double direct = kl_value(sub, run.x) + reg_value(config.reg, gop, masked.embed(run.x));
  CHECK(objective_value(masked, config.reg, run.x) == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("mlem: monotone likelihood, zero-count pixels, exact-fit fixed point") {
  TinyFixture f;

  SUBCASE("kl decreases and zero-measurement columns go to zero") {
    Eigen::VectorXd y = TinyFixture::counts();
    y[0] = 0.0;  // rows 0 and 3 share pixel 0
    y[3] = 0.0;
    PoissonModel model(f.op, y, Eigen::VectorXd::Constant(6, 0.25));
    const RunResult run =
        mlem_run(model, Eigen::VectorXd::Constant(9, 1.0), 300, false);
    const auto& rows = run.history.rows;
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
      CHECK(rows[k + 1].objective <= rows[k].objective + 1e-10 * (1.0 + std::abs(rows[k].objective)));
    }
    CHECK(run.x[0] <= 1e-12);  // pixel 0 is covered by rows 0 and 3 only
  }

  SUBCASE("exact-fit data is a fixed point as b -> 0") {
    Eigen::VectorXd xbar(9);
    xbar << 2, 1, 3, 4, 2, 1, 5, 2, 3;
    const Eigen::VectorXd y = f.op.forward(xbar);  // integers, all >= 1
    PoissonModel model(f.op, y, Eigen::VectorXd::Constant(6, 1e-13));
    const RunResult run = mlem_run(model, xbar, 1, false);
    CHECK((run.x - xbar).norm() <= 1e-12 * xbar.norm());
  }

  SUBCASE("input validation") {
    CHECK_THROWS(mlem_run(f.model, Eigen::VectorXd::Zero(9), 5, false));      // x0 not > 0
    CHECK_THROWS(mlem_run(f.model, Eigen::VectorXd::Constant(4, 1.0), 5, false));
  }
}

TEST_CASE("infeasible start is rejected") {
  TinyFixture f;
  SolverConfig config = base_config(MajorantKind::Maj6);
  CHECK_THROWS(vbmm_run(f.objective, config, Eigen::VectorXd::Zero(9)));
}

}  // TEST_SUITE
