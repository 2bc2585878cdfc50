#include "bregmm/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bregmm {

PoissonModel::PoissonModel(const SparseNonnegOperator& H, Eigen::VectorXd counts,
                           Eigen::VectorXd background)
    : op(&H), y(std::move(counts)), b(std::move(background)) {
  const int M = H.rows();
  if (y.size() != M || b.size() != M) {
    throw std::invalid_argument("PoissonModel: counts/background length must equal rows");
  }
  for (int m = 0; m < M; ++m) {
    if (!std::isfinite(y[m]) || y[m] < 0.0 || y[m] != std::floor(y[m])) {
      throw std::invalid_argument("PoissonModel: counts must be nonnegative integers (bin " +
                                  std::to_string(m) + ")");
    }
    if (!std::isfinite(b[m]) || b[m] <= 0.0) {
      throw std::invalid_argument("PoissonModel: background must be strictly positive (bin " +
                                  std::to_string(m) + ")");
    }
    if (!(H.row_sums()[m] > 0.0)) {
      throw std::invalid_argument("PoissonModel: operator row " + std::to_string(m) +
                                  " is empty");
    }
  }
  zeta = H.row_sums().cwiseInverse();
  zeta_b = zeta.cwiseProduct(b);
  rho = zeta_b.minCoeff();
}

namespace {

// Hx + b with a hard domain check; shared by all evaluations.
Eigen::VectorXd mean_rates(const PoissonModel& model, const Eigen::VectorXd& x) {
  Eigen::VectorXd q = model.op->forward(x) + model.b;
  for (Eigen::Index m = 0; m < q.size(); ++m) {
    if (!(q[m] > 0.0)) {
      throw std::domain_error("PoissonModel: H x + b is not strictly positive (bin " +
                              std::to_string(m) + ")");
    }
  }
  return q;
}

}  // namespace

double kl_value(const PoissonModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd q = mean_rates(model, x);
  double v = 0.0;
  for (Eigen::Index m = 0; m < q.size(); ++m) {
    v += (q[m] - model.b[m]) - model.y[m] * std::log(q[m]);
  }
  return v;
}

Eigen::VectorXd kl_gradient(const PoissonModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd q = mean_rates(model, x);
  return model.op->adjoint(Eigen::VectorXd::Ones(q.size()) -
                           model.y.cwiseQuotient(q).eval());
}

double kl_lipschitz(const PoissonModel& model) {
  // ||H||^2 by power iteration on H^T H; the all-ones start cannot be
  // orthogonal to the (nonnegative) leading eigenvector.
  const int N = model.op->cols();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(N) / std::sqrt(static_cast<double>(N));
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = model.op->adjoint(model.op->forward(v));
    const double nw = w.norm();
    if (nw == 0.0) {
      lambda = 0.0;
      break;
    }
    const double prev = lambda;
    lambda = nw;
    v = w / nw;
    if (it > 0 && std::abs(lambda - prev) <= 1e-6 * lambda) break;
  }
  double ratio = 0.0;
  for (Eigen::Index m = 0; m < model.y.size(); ++m) {
    ratio = std::max(ratio, model.y[m] / (model.b[m] * model.b[m]));
  }
  return lambda * ratio;
}

double ell_value(const PoissonModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd q = mean_rates(model, x);
  double v = 0.0;
  for (Eigen::Index m = 0; m < q.size(); ++m) {
    v -= model.y[m] * std::log(q[m]);
  }
  return v;
}

Eigen::VectorXd ell_gradient(const PoissonModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd q = mean_rates(model, x);
  return -model.op->adjoint(model.y.cwiseQuotient(q).eval());
}

double ell_dir_curvature(const PoissonModel& model, const Eigen::VectorXd& v,
                         const Eigen::VectorXd& d) {
  const Eigen::VectorXd q = mean_rates(model, v);
  const Eigen::VectorXd hd = model.op->forward(d);
  double s = 0.0;
  for (Eigen::Index m = 0; m < q.size(); ++m) {
    const double r = hd[m] / q[m];
    s += model.y[m] * r * r;
  }
  return s;
}

}  // namespace bregmm
