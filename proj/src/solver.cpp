#include "bregmm/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bregmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Family { LogShift, LogZero, Quadratic };

// Which closed form a majorant uses, its shift, and whether its coefficient
// rule needs the second backprojection r = H^T(y .* zeta_b ./ (Hz+b)).
struct StepPlan {
  MajorantKind kind;
  Family family = Family::LogZero;
  double sigma = 0.0;
  double tau = 0.0;  // Maj8 only
  bool needs_r = false;
};

StepPlan step_plan(const MajorantSpec& spec, double rho) {
  StepPlan plan;
  plan.kind = spec.kind;
  switch (spec.kind) {
    case MajorantKind::Maj1:
      plan.family = Family::LogShift;
      plan.sigma = rho;
      plan.needs_r = true;
      return plan;
    case MajorantKind::Maj4: {
      const double mu = spec.resolved_mu(rho);
      plan.family = mu == 0.0 ? Family::LogZero : Family::LogShift;
      plan.sigma = mu;
      return plan;
    }
    case MajorantKind::Maj5:
      plan.family = Family::LogZero;
      plan.needs_r = true;
      return plan;
    case MajorantKind::Maj6:
      plan.family = Family::LogZero;
      return plan;
    case MajorantKind::Maj8:
      plan.family = Family::Quadratic;
      plan.tau = spec.resolved_tau(rho);
      plan.needs_r = true;
      return plan;
    default:
      throw std::invalid_argument(
          "vbmm solver: majorant must be one of maj1/maj4/maj5/maj6/maj8");
  }
}

// Everything the loop needs about one iterate, produced by exactly one
// forward and one or two adjoint applications.
struct Eval {
  double objective = 0.0;
  Eigen::VectorXd grad_f;  // kl_gradient + restricted reg_gradient
  Eigen::VectorXd q;       // H^T(y ./ (Hx+b))
  Eigen::VectorXd r;       // H^T(y .* zeta_b ./ (Hx+b)) when the plan needs it
};

Eval evaluate(const Objective& objective, const RegularizerParams& reg,
              const GradientOperator& gop, const StepPlan& plan,
              const Eigen::VectorXd& x) {
  const PoissonModel& model = *objective.model;
  Eigen::VectorXd hx;
  model.op->apply_forward(x, hx);
  Eigen::VectorXd u(hx.size());
  double kl = 0.0;
  for (Eigen::Index m = 0; m < hx.size(); ++m) {
    const double rate = hx[m] + model.b[m];
    if (!(rate > 0.0)) {
      throw std::domain_error("vbmm: H x + b not strictly positive");
    }
    kl += hx[m] - model.y[m] * std::log(rate);
    u[m] = model.y[m] / rate;
  }
  Eval ev;
  model.op->apply_adjoint(u, ev.q);
  if (plan.needs_r) {
    model.op->apply_adjoint(u.cwiseProduct(model.zeta_b).eval(), ev.r);
  }
  const Eigen::VectorXd xe = objective.embed(x);
  ev.objective = kl + reg_value(reg, gop, xe);
  ev.grad_f = model.op->col_sums() - ev.q + objective.restrict(reg_gradient(reg, gop, xe));
  return ev;
}

// a(z) for the solver families, from the backprojections of the z-eval.
Eigen::VectorXd step_coefficients(const StepPlan& plan, const PoissonModel& model,
                                  const Eigen::VectorXd& z, const Eval& ev) {
  switch (plan.kind) {
    case MajorantKind::Maj1:
    case MajorantKind::Maj5:
      return z.cwiseProduct(ev.q) + ev.r;
    case MajorantKind::Maj4:
      return (z.array() + plan.sigma).matrix().cwiseProduct(ev.q);
    case MajorantKind::Maj6:
      return z.cwiseProduct(ev.q);
    case MajorantKind::Maj8: {
      Eigen::VectorXd a = z.cwiseProduct(ev.q) + ev.r;
      for (Eigen::Index n = 0; n < a.size(); ++n) {
        a[n] *= curvature_c_tau(z[n], model.rho, plan.tau);
      }
      return a;
    }
    default:
      throw std::logic_error("step_coefficients: unsupported majorant");
  }
}

// Positive root of the coordinatewise surrogate optimality condition,
// written to avoid cancellation when the linear term dominates.
double solve_coordinate(Family family, double m_r, double sigma, double a, double g,
                        double z) {
  switch (family) {
    case Family::LogShift: {
      const double d = g + a / (z + sigma) - m_r * z;
      const double t = d - m_r * sigma;
      const double root = std::sqrt(t * t + 4.0 * m_r * a);
      const double sum = d + m_r * sigma;
      if (sum > 0.0) return 2.0 * (a - sigma * d) / (root + sum);
      return (root - sum) / (2.0 * m_r);
    }
    case Family::LogZero: {
      const double d = g + a / z - m_r * z;
      const double root = std::sqrt(d * d + 4.0 * m_r * a);
      if (d > 0.0) return 2.0 * a / (root + d);
      return (root - d) / (2.0 * m_r);
    }
    case Family::Quadratic:
      return z - g / (a + m_r);
  }
  return 0.0;
}

Eigen::VectorXd take_step(const StepPlan& plan, double m_r, double eps0,
                          const Eigen::VectorXd& z, const Eval& ev,
                          const Eigen::VectorXd& a) {
  Eigen::VectorXd x(z.size());
  for (Eigen::Index n = 0; n < z.size(); ++n) {
    const double u = solve_coordinate(plan.family, m_r, plan.sigma, a[n], ev.grad_f[n], z[n]);
    if (!std::isfinite(u)) {
      throw std::runtime_error("vbmm: non-finite update component " + std::to_string(n));
    }
    x[n] = std::max(u, eps0);
  }
  return x;
}

// grad h_z(v) for the plan's generator with coefficients a.
double grad_h(const StepPlan& plan, double a, double v) {
  switch (plan.family) {
    case Family::LogShift:
      return a == 0.0 ? 0.0 : -a / (v + plan.sigma);
    case Family::LogZero:
      return a == 0.0 ? 0.0 : -a / v;
    case Family::Quadratic:
      return a * v;
  }
  return 0.0;
}

struct ResolvedConfig {
  StepPlan plan;
  double m_r = 0.0;
  double gamma = 0.0;
  double eps0 = 0.0;
};

ResolvedConfig resolve(const Objective& objective, const SolverConfig& config,
                       const GradientOperator& gop) {
  if (objective.model == nullptr) {
    throw std::invalid_argument("vbmm: objective has no model");
  }
  if (objective.model->op->cols() != objective.dim()) {
    throw std::invalid_argument("vbmm: operator columns do not match solver variables");
  }
  validate(config.reg);
  ResolvedConfig rc;
  rc.plan = step_plan(config.majorant, objective.model->rho);
  const double l_r = reg_lipschitz(config.reg, gop);
  rc.m_r = config.m_r > 0.0 ? config.m_r : 1.01 * l_r;
  if (!(rc.m_r > l_r)) {
    throw std::invalid_argument("vbmm: M_R must strictly exceed the regularizer bound " +
                                std::to_string(l_r));
  }
  rc.gamma = rc.m_r - l_r;
  rc.eps0 = config.epsilon0 < 0.0 ? default_epsilon0(config, objective.model->rho)
                                  : config.epsilon0;
  const bool log0 = rc.plan.family == Family::LogZero;
  if (log0 && !(rc.eps0 > 0.0)) {
    throw std::invalid_argument("vbmm: log-0 majorants need epsilon0 > 0");
  }
  if (rc.eps0 < 0.0 || !std::isfinite(rc.eps0)) {
    throw std::invalid_argument("vbmm: epsilon0 must be finite and >= 0");
  }
  return rc;
}

void check_feasible(const Eigen::VectorXd& x, double eps0, const char* who) {
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (!std::isfinite(x[n]) || x[n] < eps0) {
      throw std::invalid_argument(std::string(who) + ": point leaves [epsilon0, inf)");
    }
  }
}

}  // namespace

const char* stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::MaxIters: return "max_iters";
    case StopReason::StepTol: return "step_tol";
    case StopReason::WallBudget: return "wall_budget";
  }
  return "?";
}

int Objective::dim() const {
  return var_to_pixel.empty() ? width * height : static_cast<int>(var_to_pixel.size());
}

Eigen::VectorXd Objective::embed(const Eigen::VectorXd& x_vars) const {
  if (var_to_pixel.empty()) return x_vars;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width) * height);
  for (std::size_t j = 0; j < var_to_pixel.size(); ++j) {
    out[var_to_pixel[j]] = x_vars[static_cast<Eigen::Index>(j)];
  }
  return out;
}

Eigen::VectorXd Objective::restrict(const Eigen::VectorXd& x_pixels) const {
  if (var_to_pixel.empty()) return x_pixels;
  Eigen::VectorXd out(static_cast<Eigen::Index>(var_to_pixel.size()));
  for (std::size_t j = 0; j < var_to_pixel.size(); ++j) {
    out[static_cast<Eigen::Index>(j)] = x_pixels[var_to_pixel[j]];
  }
  return out;
}

double objective_value(const Objective& objective, const RegularizerParams& reg,
                       const Eigen::VectorXd& x) {
  const GradientOperator gop(objective.width, objective.height);
  return kl_value(*objective.model, x) + reg_value(reg, gop, objective.embed(x));
}

Eigen::VectorXd objective_gradient(const Objective& objective, const RegularizerParams& reg,
                                   const Eigen::VectorXd& x) {
  const GradientOperator gop(objective.width, objective.height);
  return kl_gradient(*objective.model, x) +
         objective.restrict(reg_gradient(reg, gop, objective.embed(x)));
}

double default_epsilon0(const SolverConfig& config, double rho) {
  switch (config.majorant.kind) {
    case MajorantKind::Maj5:
    case MajorantKind::Maj6:
      return 0.01;
    case MajorantKind::Maj4:
      return config.majorant.resolved_mu(rho) == 0.0 ? 0.01 : 0.0;
    default:
      return 0.0;
  }
}

Eigen::VectorXd warm_start(const Objective& objective, const SolverConfig& config) {
  const PoissonModel& model = *objective.model;
  const GradientOperator gop(objective.width, objective.height);
  const ResolvedConfig rc = resolve(objective, config, gop);
  const double excess = std::max((model.y - model.b).mean(), 1e-12);
  double level = excess / model.op->col_sums().mean();
  level = std::max(level, rc.eps0);
  if (rc.plan.family == Family::LogZero) level = std::max(level, 1e-3);
  return Eigen::VectorXd::Constant(objective.dim(), level);
}

Eigen::VectorXd vbmm_step(const Objective& objective, const SolverConfig& config,
                          const Eigen::VectorXd& z) {
  const GradientOperator gop(objective.width, objective.height);
  const ResolvedConfig rc = resolve(objective, config, gop);
  check_feasible(z, rc.eps0, "vbmm_step");
  const Eval ev = evaluate(objective, config.reg, gop, rc.plan, z);
  const Eigen::VectorXd a = step_coefficients(rc.plan, *objective.model, z, ev);
  return take_step(rc.plan, rc.m_r, rc.eps0, z, ev, a);
}

RunResult vbmm_run(const Objective& objective, const SolverConfig& config,
                   const Eigen::VectorXd& x0) {
  if (config.max_iters < 0) {
    throw std::invalid_argument("vbmm_run: max_iters must be >= 0");
  }
  const GradientOperator gop(objective.width, objective.height);
  const ResolvedConfig rc = resolve(objective, config, gop);
  check_feasible(x0, rc.eps0, "vbmm_run");

  const PoissonModel& model = *objective.model;
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const std::uint64_t fwd0 = model.op->forward_calls();
  const std::uint64_t adj0 = model.op->adjoint_calls();
  const auto run_fwd = [&] {
    return static_cast<std::int64_t>(model.op->forward_calls() - fwd0);
  };
  const auto run_adj = [&] {
    return static_cast<std::int64_t>(model.op->adjoint_calls() - adj0);
  };

  IterateHistory hist;
  hist.gamma = rc.gamma;

  Eigen::VectorXd x = x0;
  Eval ev = evaluate(objective, config.reg, gop, rc.plan, x);
  hist.rows.push_back({0, ev.objective, kNaN, kNaN, kNaN, elapsed(), run_fwd(), run_adj()});
  if (config.record_iterates) hist.iterates.push_back(x);

  hist.stop = StopReason::MaxIters;
  for (int k = 0; k < config.max_iters; ++k) {
    try {
      const Eigen::VectorXd a = step_coefficients(rc.plan, model, x, ev);
      const Eigen::VectorXd x_next = take_step(rc.plan, rc.m_r, rc.eps0, x, ev, a);
      const double step = (x_next - x).norm();
      const double rel = step / (1.0 + x.norm());
      const Eval ev_next = evaluate(objective, config.reg, gop, rc.plan, x_next);

      // w^{k+1} from quantities already at hand: both gradients and the
      // closed-form generator gradient change.
      double w2 = 0.0;
      for (Eigen::Index n = 0; n < x.size(); ++n) {
        const double dh = grad_h(rc.plan, a[n], x_next[n]) - grad_h(rc.plan, a[n], x[n]);
        const double w = ev_next.grad_f[n] - ev.grad_f[n] - dh - rc.m_r * (x_next[n] - x[n]);
        w2 += w * w;
      }

      IterateRecord& row = hist.rows.back();
      row.step_norm = step;
      row.residual_w = std::sqrt(w2);
      row.suff_decrease_slack =
          ev.objective - ev_next.objective - 0.5 * rc.gamma * step * step;

      hist.rows.push_back({k + 1, ev_next.objective, kNaN, kNaN, kNaN, elapsed(),
                           run_fwd(), run_adj()});
      x = x_next;
      ev = ev_next;
      if (config.record_iterates) hist.iterates.push_back(x);

      if (config.step_tol > 0.0 && rel < config.step_tol) {
        hist.stop = StopReason::StepTol;
        break;
      }
      if (config.wall_budget_s > 0.0 && elapsed() > config.wall_budget_s) {
        hist.stop = StopReason::WallBudget;
        break;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("vbmm_run: iteration " + std::to_string(k + 1) + ": " +
                               e.what());
    }
  }
  return {std::move(x), std::move(hist)};
}

double residual_w(const Objective& objective, const SolverConfig& config,
                  const Eigen::VectorXd& x_prev, const Eigen::VectorXd& x_next) {
  const GradientOperator gop(objective.width, objective.height);
  const ResolvedConfig rc = resolve(objective, config, gop);
  check_feasible(x_prev, rc.eps0, "residual_w");
  check_feasible(x_next, rc.eps0, "residual_w");
  const Eval ev_prev = evaluate(objective, config.reg, gop, rc.plan, x_prev);
  const Eval ev_next = evaluate(objective, config.reg, gop, rc.plan, x_next);
  const Eigen::VectorXd a = step_coefficients(rc.plan, *objective.model, x_prev, ev_prev);
  double w2 = 0.0;
  for (Eigen::Index n = 0; n < x_prev.size(); ++n) {
    const double dh = grad_h(rc.plan, a[n], x_next[n]) - grad_h(rc.plan, a[n], x_prev[n]);
    const double w =
        ev_next.grad_f[n] - ev_prev.grad_f[n] - dh - rc.m_r * (x_next[n] - x_prev[n]);
    w2 += w * w;
  }
  return std::sqrt(w2);
}

RunResult mlem_run(const PoissonModel& model, const Eigen::VectorXd& x0, int iters,
                   bool record_iterates) {
  if (iters < 0) throw std::invalid_argument("mlem_run: iters must be >= 0");
  if (x0.size() != model.op->cols()) {
    throw std::invalid_argument("mlem_run: x0 size does not match operator columns");
  }
  for (Eigen::Index n = 0; n < x0.size(); ++n) {
    if (!(x0[n] > 0.0)) {
      throw std::invalid_argument(
          "mlem_run: x0 must be strictly positive (the multiplicative update cannot "
          "leave 0)");
    }
  }
  const Eigen::VectorXd& colsum = model.op->col_sums();
  for (Eigen::Index n = 0; n < colsum.size(); ++n) {
    if (!(colsum[n] > 0.0)) {
      throw std::invalid_argument("mlem_run: operator has an empty column");
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const std::uint64_t fwd0 = model.op->forward_calls();
  const std::uint64_t adj0 = model.op->adjoint_calls();

  IterateHistory hist;
  Eigen::VectorXd x = x0;
  for (int k = 0; k <= iters; ++k) {
    Eigen::VectorXd hx;
    model.op->apply_forward(x, hx);
    Eigen::VectorXd u(hx.size());
    double kl = 0.0;
    for (Eigen::Index m = 0; m < hx.size(); ++m) {
      const double rate = hx[m] + model.b[m];
      if (!(rate > 0.0)) throw std::domain_error("mlem_run: H x + b not positive");
      kl += hx[m] - model.y[m] * std::log(rate);
      u[m] = model.y[m] / rate;
    }
    hist.rows.push_back({k, kl, kNaN, kNaN, kNaN, elapsed(),
                         static_cast<std::int64_t>(model.op->forward_calls() - fwd0),
                         static_cast<std::int64_t>(model.op->adjoint_calls() - adj0)});
    if (record_iterates) hist.iterates.push_back(x);
    if (k == iters) break;
    const Eigen::VectorXd back = model.op->adjoint(u);
    Eigen::VectorXd x_next = x.cwiseQuotient(colsum).cwiseProduct(back);
    hist.rows.back().step_norm = (x_next - x).norm();
    x = std::move(x_next);
  }
  hist.stop = StopReason::MaxIters;
  hist.gamma = 0.0;
  return {std::move(x), std::move(hist)};
}

}  // namespace bregmm
