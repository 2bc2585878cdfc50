#pragma once

#include <Eigen/Core>

#include "bregmm/sparse_op.hpp"

namespace bregmm {

// Poisson measurement model y_m ~ Poisson(H_m x + b_m).
//
// Bundles the operator with counts y, background b, and the derived
// constants zeta_m = 1/sum_n H_{m,n} and rho = min_m zeta_m b_m. The data
// fidelity and its log part are
//   L(x)   = -sum_m (y_m ln(H_m x + b_m) - H_m x)      (KL fidelity)
//   ell(x) = -sum_m  y_m ln(H_m x + b_m) = L(x) - sum_m H_m x.
// Both are finite on (-rho, +inf)^N since H_m x + b_m >= row_sum_m *
// (min_n x_n + zeta_m b_m) > 0 there.
struct PoissonModel {
  const SparseNonnegOperator* op = nullptr;  // non-owning
  Eigen::VectorXd y;       // counts, integer-valued, >= 0
  Eigen::VectorXd b;       // background, > 0
  Eigen::VectorXd zeta;    // 1 / row sums
  Eigen::VectorXd zeta_b;  // zeta_m * b_m
  double rho = 0.0;        // min_m zeta_m b_m

  PoissonModel(const SparseNonnegOperator& H, Eigen::VectorXd counts,
               Eigen::VectorXd background);
};

// L(x). One forward application. Throws std::domain_error if some
// H_m x + b_m <= 0.
double kl_value(const PoissonModel& model, const Eigen::VectorXd& x);

// grad L(x) = H^T (1 - y ./ (Hx+b)). Exactly one forward + one adjoint.
Eigen::VectorXd kl_gradient(const PoissonModel& model, const Eigen::VectorXd& x);

// L_L = ||H||^2 max_m y_m/b_m^2, operator norm by power iteration on H^T H
// (deterministic start, tolerance 1e-6, 200 iteration cap).
double kl_lipschitz(const PoissonModel& model);

// ell(x) and its gradient -H^T (y ./ (Hx+b)); the majorization checks are
// stated for the log part.
double ell_value(const PoissonModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd ell_gradient(const PoissonModel& model, const Eigen::VectorXd& x);

// d^T grad^2 ell(v) d = sum_m y_m (H_m d)^2 / (H_m v + b_m)^2. Same Hessian
// as L (they differ by a linear term).
double ell_dir_curvature(const PoissonModel& model, const Eigen::VectorXd& v,
                         const Eigen::VectorXd& d);

}  // namespace bregmm
