#pragma once

#include <Eigen/Core>

namespace bregmm {

// R(x) = lambda sum_n theta(||[Dx]_n||) + (epsilon/2) ||x||^2 with the
// Geman-McClure potential theta(t) = t^2 / (2 delta^2 + t^2).
struct RegularizerParams {
  double lambda = 1.0;   // > 0
  double delta = 0.5;    // > 0
  double epsilon = 1e-3; // > 0
};

void validate(const RegularizerParams& params);

// 2D discrete gradient: [Dx]_n = (x_{n+right} - x_n, x_{n+down} - x_n),
// with zero differences past the last column/row. ||D||^2 <= 8.
class GradientOperator {
 public:
  GradientOperator(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& dh, Eigen::VectorXd& dv) const;
  // D^T [dh; dv] (negative divergence).
  Eigen::VectorXd adjoint(const Eigen::VectorXd& dh, const Eigen::VectorXd& dv) const;

 private:
  int width_ = 0;
  int height_ = 0;
};

// theta(t), omega(t) = theta'(t)/t (evaluated in closed form, smooth at 0),
// and theta''(t). omega in (0, 1/delta^2], theta'' in [-1/(4 delta^2), 1/delta^2].
double gm_potential(double delta, double t);
double gm_weight(double delta, double t);
double gm_second_derivative(double delta, double t);

double reg_value(const RegularizerParams& params, const GradientOperator& gop,
                 const Eigen::VectorXd& x);

// grad R(x) = lambda D^T Diag(omega(||[Dx]_n||) I_2) Dx + epsilon x.
Eigen::VectorXd reg_gradient(const RegularizerParams& params, const GradientOperator& gop,
                             const Eigen::VectorXd& x);

// L_R = (lambda/delta^2) ||D||^2 + epsilon with the analytic bound
// ||D||^2 <= 8 (deterministic; a valid upper bound is all M_R needs).
double reg_lipschitz(const RegularizerParams& params, const GradientOperator& gop);

}  // namespace bregmm
