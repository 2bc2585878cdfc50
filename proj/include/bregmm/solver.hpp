#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bregmm/majorants.hpp"
#include "bregmm/model.hpp"
#include "bregmm/regularizer.hpp"

namespace bregmm {

enum class StopReason { MaxIters, StepTol, WallBudget };

const char* stop_reason_name(StopReason reason);

struct SolverConfig {
  // Only the families with closed-form surrogate minimizers are accepted:
  // Maj1, Maj4 (log-shift), Maj5, Maj6 (log-0), Maj8 (quadratic).
  MajorantSpec majorant;
  RegularizerParams reg;
  // Quadratic weight on the surrogate; must exceed the regularizer's
  // gradient Lipschitz constant. Nonpositive means "1.01 * L_R".
  double m_r = 0.0;
  // Nonnegativity floor: iterates are projected onto [epsilon0, inf)^N.
  // Negative means the family default: 0 for log-shift/quadratic, 0.01 for
  // the log-0 families (Maj5, Maj6, and Maj4 with mu = 0) whose generators
  // blow up at 0.
  double epsilon0 = -1.0;
  int max_iters = 1000;
  double step_tol = 1e-8;     // on ||x^{k+1} - x^k|| / (1 + ||x^k||); <= 0 disables
  double wall_budget_s = 0.0; // <= 0 disables
  std::uint64_t seed = 0;
  bool record_iterates = false;
};

// Row k describes iterate x^k together with its outgoing transition:
// the step to x^{k+1}, the stationarity residual ||w^{k+1}|| of that step,
// and the decrease achieved by it. The transition fields are NaN on the
// last row (no successor exists yet); wall time and the cumulative
// operator-call counts are snapshotted when x^k itself was evaluated.
struct IterateRecord {
  int iter = 0;
  double objective = 0.0;            // F(x^k)
  double step_norm = 0.0;            // ||x^{k+1} - x^k||
  double residual_w = 0.0;           // ||w^{k+1}||
  double suff_decrease_slack = 0.0;  // F(x^k) - F(x^{k+1}) - (gamma/2)||step||^2
  double wall_time_s = 0.0;
  std::int64_t fwd_calls = 0;        // cumulative within the run, setup included
  std::int64_t adj_calls = 0;
};

struct IterateHistory {
  std::vector<IterateRecord> rows;       // K+1 rows: initial point plus one per iteration
  std::vector<Eigen::VectorXd> iterates; // populated when record_iterates is set
  StopReason stop = StopReason::MaxIters;
  double gamma = 0.0;                    // M_R - L_R

  int iterations() const { return static_cast<int>(rows.size()) - 1; }
};

struct RunResult {
  Eigen::VectorXd x;
  IterateHistory history;
};

// Data side of the composite objective F = KL + R + indicator([eps0, inf)^N)
// over the in-mask pixels. `var_to_pixel` maps solver variables to pixel
// indices in the width x height image; empty means the identity (all pixels
// active). The model's operator must act on the solver variables, i.e. have
// one column per kept pixel. Regularizer parameters travel in SolverConfig.
struct Objective {
  const PoissonModel* model = nullptr;
  int width = 0;
  int height = 0;
  std::vector<int> var_to_pixel;

  int dim() const;
  Eigen::VectorXd embed(const Eigen::VectorXd& x_vars) const;  // zeros elsewhere
  Eigen::VectorXd restrict(const Eigen::VectorXd& x_pixels) const;
};

// F(x) and grad F(x) = kl_gradient + reg_gradient on the solver variables
// (the regularizer sees the embedded image). Not call-count fused; the run
// loop uses its own shared evaluations.
double objective_value(const Objective& objective, const RegularizerParams& reg,
                       const Eigen::VectorXd& x);
Eigen::VectorXd objective_gradient(const Objective& objective, const RegularizerParams& reg,
                                   const Eigen::VectorXd& x);

double default_epsilon0(const SolverConfig& config, double rho);

// Uniform positive start matched to the data scale:
// mean(y - b), clipped at a small positive value, over the mean column sum;
// floored at epsilon0 (and at 1e-3 for the log-0 families).
Eigen::VectorXd warm_start(const Objective& objective, const SolverConfig& config);

// One exact surrogate minimization from base point z (z >= eps0, inside the
// family domain): closed-form coordinatewise solve, then projection onto
// [eps0, inf)^N. Does not evaluate the objective at the result; costs one
// fused coefficient/gradient pass (1 forward + 1 or 2 adjoints).
Eigen::VectorXd vbmm_step(const Objective& objective, const SolverConfig& config,
                          const Eigen::VectorXd& z);

RunResult vbmm_run(const Objective& objective, const SolverConfig& config,
                   const Eigen::VectorXd& x0);

// ||grad f(x_next) - [grad f(x_prev) + grad h_{x_prev}(x_next)
//                     - grad h_{x_prev}(x_prev) + M_R (x_next - x_prev)]||,
// the norm of the Frechet subgradient certificate at x_next.
double residual_w(const Objective& objective, const SolverConfig& config,
                  const Eigen::VectorXd& x_prev, const Eigen::VectorXd& x_next);

// Classical ML-EM on the same model (no regularizer, no floor):
//   x+ = (x ./ H^T 1) .* H^T (y ./ (Hx + b)).
// Requires x0 > 0 and positive column sums. Trace rows carry the KL
// objective; transition fields are NaN except the step norm.
RunResult mlem_run(const PoissonModel& model, const Eigen::VectorXd& x0, int iters,
                   bool record_iterates = false);

}  // namespace bregmm
