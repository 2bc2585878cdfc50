#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "bregmm/model.hpp"

namespace bregmm {

// The nine separable Bregman majorant families for the Poisson log part ell.
// Generators at base point z:
//   Maj1  -sum a1_n(z) ln(x_n + rho)          a1_n = sum_m y_m H_mn (z_n + zeta_m b_m)/(H_m z + b_m)
//   Maj2  -sum a2_n    ln(x_n + rho)          a2_n = sum_m y_m 1{H_mn != 0}
//   Maj3   sum a1_n(z) phi_n(x_n)             piecewise quadratic/log potential
//   Maj4  -sum a4_n(z) ln(x_n + mu)           a4_n = sum_m y_m H_mn (z_n + mu)/(H_m z + b_m)
//   Maj5  -sum a1_n(z) ln(x_n)
//   Maj6  -sum a6_n(z) ln(x_n)                a6_n = sum_m y_m H_mn z_n/(H_m z + b_m)
//   Maj7   sum a7_n(z) x_n^2 / 2              a7_n = sum_m y_m H_mn (z_n + zeta_m b_m)/(H_m z + b_m) c_tau(z_n, zeta_m b_m)
//   Maj8   sum a8_n(z) x_n^2 / 2              a8_n = a1_n(z) c_tau(z_n, rho)
//   Maj9   sum a9_n(z) x_n^2 / 2              a9_n = sum_m y_m (H_mn/zeta_m) c_tau(H_m z, b_m)
enum class MajorantKind { Maj1, Maj2, Maj3, Maj4, Maj5, Maj6, Maj7, Maj8, Maj9 };

const char* majorant_name(MajorantKind kind);

struct MajorantSpec {
  MajorantKind kind = MajorantKind::Maj6;
  // Maj4 shift in [0, rho]; negative means "use rho" (the tightest case).
  double mu = -1.0;
  // Maj7/8/9 curvature parameter in (0, rho); negative means "use rho/2".
  double tau = -1.0;

  double resolved_mu(double rho) const;
  double resolved_tau(double rho) const;
};

// Separable Legendre generator of one of the two closed forms used by the
// solver: h(x) = -sum_n a_n ln(x_n + shift) on (-shift, inf)^N, or
// h(x) = (1/2) sum_n a_n x_n^2 on R^N. Coefficients must be nonnegative and
// finite; strictly positive coefficients give the strictly convex (Legendre)
// case, zeros make the corresponding coordinate inert.
struct SeparableLegendre {
  enum class Form { LogShift, Quadratic };

  Form form = Form::Quadratic;
  double shift = 0.0;  // sigma >= 0, LogShift only
  Eigen::VectorXd coeff;

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x) const;  // interior of dom h
  double second_derivative(int n, double v) const;
};

SeparableLegendre make_separable_legendre(SeparableLegendre::Form form, double shift,
                                          Eigen::VectorXd coeff);

// Maj3 generator h(x) = sum_n a_n phi_n(x_n): not of either standard form,
// used for order/majorization checks only (never by the PET solver).
struct Maj3Generator {
  Eigen::VectorXd coeff;  // a1_n(z)
  Eigen::VectorXd z;
  double rho = 0.0;

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x) const;
  double second_derivative(int n, double v) const;
};

// phi_n for Maj3: quadratic above z_n, logarithmic below, C^1 glued at z_n
// with phi_n(z_n) = 0 and phi_n'(z_n) = -1/(z_n + rho). Domain xi > -rho.
double varphi_maj3(double z_n, double rho, double xi);
double varphi_maj3_deriv(double z_n, double rho, double xi);

// D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>.
double bregman_distance(const SeparableLegendre& h, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y);
double bregman_distance(const Maj3Generator& h, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y);

// Quadratic majorant curvature (eta > tau > 0, xi >= -tau):
//   c_tau(xi, eta) = -(2/(xi+tau)) ( ln((eta-tau)/(xi+eta))/(xi+tau) + 1/(xi+eta) )
//                  = 2 integral_0^1 (1-t) / ((1-t)xi - t tau + eta)^2 dt,
// extended by continuity to 1/(eta-tau)^2 at xi = -tau. Near the singular
// point (|xi+tau| <= 1e-5 (eta-tau)) the series expansion of the integral
// form is used; elsewhere a log1p rewrite of the closed form.
double curvature_c_tau(double xi, double eta, double tau);

// Coefficient rules. Model-level variants take z inside the family domain;
// all return componentwise nonnegative vectors.
Eigen::VectorXd coeff_maj1(const PoissonModel& model, const Eigen::VectorXd& z);
Eigen::VectorXd coeff_maj2(const PoissonModel& model);
Eigen::VectorXd coeff_maj2(const SparseNonnegOperator& op, const Eigen::VectorXd& y);
Eigen::VectorXd coeff_maj4(const PoissonModel& model, const Eigen::VectorXd& z, double mu);
Eigen::VectorXd coeff_maj6(const PoissonModel& model, const Eigen::VectorXd& z);
Eigen::VectorXd coeff_maj7(const PoissonModel& model, const Eigen::VectorXd& z, double tau);
Eigen::VectorXd coeff_maj8(const PoissonModel& model, const Eigen::VectorXd& z, double tau);
Eigen::VectorXd coeff_maj9(const PoissonModel& model, const Eigen::VectorXd& z, double tau);

// Uniform wrapper over the two generator representations, for checks.
class MajorantGenerator {
 public:
  explicit MajorantGenerator(SeparableLegendre g) : g_(std::move(g)) {}
  explicit MajorantGenerator(Maj3Generator g) : g_(std::move(g)) {}

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x) const;
  double second_derivative(int n, double v) const;
  double bregman(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  const SeparableLegendre* as_separable() const {
    return std::get_if<SeparableLegendre>(&g_);
  }

 private:
  std::variant<SeparableLegendre, Maj3Generator> g_;
};

// Generator h_z of the requested family at base point z.
MajorantGenerator make_generator(const PoissonModel& model, const MajorantSpec& spec,
                                 const Eigen::VectorXd& z);

// Componentwise box used by the sampling checks.
struct Box {
  double lo = 0.0;
  double hi = 1.0;
};

// Box staying `margin` inside the majorant family's domain, capped at hi.
Box domain_box(const MajorantSpec& spec, double rho, double hi, double margin = 1e-3);

// min over `samples` uniform (x, y) pairs in `box` of D_{loose} - D_{tight};
// nonnegative when tight precedes loose in the tightness order.
double order_check(const MajorantGenerator& tight, const MajorantGenerator& loose,
                   const Box& box, int dim, int samples, std::uint64_t seed);

// Same minimum with the second argument pinned to the generators' base point:
// min over `samples` uniform x of D_{loose}(x, z) - D_{tight}(x, z). Orders
// that freeze one side's curvature at z (the piecewise family against a
// quadratic) only hold in this anchored sense; free (x, y) pairs would probe
// distances the relation never claims.
double order_check_anchored(const MajorantGenerator& tight, const MajorantGenerator& loose,
                            const Eigen::VectorXd& z, const Box& box, int samples,
                            std::uint64_t seed);

// Sampled majorization gap of Q_f(x, z) = f(z) + <grad f(z), x-z> + D_{h_z}(x, z)
// over f. Gaps and tangency errors are normalized by 1 + |f(.)|.
struct MajorizationReport {
  double min_gap = 0.0;        // min (Q_f(x,z) - f(x)) / (1 + |f(x)|)
  double max_tangency = 0.0;   // max |Q_f(z,z) - f(z)| / (1 + |f(z)|)
};

MajorizationReport majorization_check(
    const std::function<double(const Eigen::VectorXd&)>& f_value,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f_gradient,
    const std::function<MajorantGenerator(const Eigen::VectorXd&)>& generator_at,
    const Box& box, int dim, int samples, std::uint64_t seed);

// (x-z)^T C_{h-f}(x,z) (x-z) with C_g(x,z) = int_0^1 (1-t) grad^2 g((1-t)z + tx) dt,
// by Gauss-Legendre quadrature; >= 0 exactly when h majorizes f curvature-wise
// along the segment. f enters through its directional curvature d^T grad^2 f(v) d.
using DirCurvature = std::function<double(const Eigen::VectorXd& v, const Eigen::VectorXd& d)>;

double hessian_characterization_check(const DirCurvature& f_curv, const MajorantGenerator& h,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                                      int quad_points = 64);

// Gauss-Legendre nodes/weights on [0, 1] (weights sum to 1).
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace bregmm
