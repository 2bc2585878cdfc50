#include "bregmm/majorants.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bregmm/rng.hpp"

namespace bregmm {

const char* majorant_name(MajorantKind kind) {
  switch (kind) {
    case MajorantKind::Maj1: return "maj1";
    case MajorantKind::Maj2: return "maj2";
    case MajorantKind::Maj3: return "maj3";
    case MajorantKind::Maj4: return "maj4";
    case MajorantKind::Maj5: return "maj5";
    case MajorantKind::Maj6: return "maj6";
    case MajorantKind::Maj7: return "maj7";
    case MajorantKind::Maj8: return "maj8";
    case MajorantKind::Maj9: return "maj9";
  }
  return "?";
}

double MajorantSpec::resolved_mu(double rho) const {
  if (kind != MajorantKind::Maj4) {
    throw std::logic_error("MajorantSpec: mu only applies to Maj4");
  }
  const double m = mu < 0.0 ? rho : mu;
  if (!std::isfinite(m) || m > rho) {
    throw std::invalid_argument("MajorantSpec: mu must lie in [0, rho]");
  }
  return m;
}

double MajorantSpec::resolved_tau(double rho) const {
  if (kind != MajorantKind::Maj7 && kind != MajorantKind::Maj8 &&
      kind != MajorantKind::Maj9) {
    throw std::logic_error("MajorantSpec: tau only applies to Maj7/Maj8/Maj9");
  }
  const double t = tau < 0.0 ? 0.5 * rho : tau;
  if (!std::isfinite(t) || t <= 0.0 || t >= rho) {
    throw std::invalid_argument("MajorantSpec: tau must lie in (0, rho)");
  }
  return t;
}

// ---------------------------------------------------------------------------
// Generators

SeparableLegendre make_separable_legendre(SeparableLegendre::Form form, double shift,
                                          Eigen::VectorXd coeff) {
  if (!std::isfinite(shift) || shift < 0.0) {
    throw std::invalid_argument("SeparableLegendre: shift must be finite and >= 0");
  }
  if (form == SeparableLegendre::Form::Quadratic && shift != 0.0) {
    throw std::invalid_argument("SeparableLegendre: quadratic form takes no shift");
  }
  for (Eigen::Index n = 0; n < coeff.size(); ++n) {
    if (!std::isfinite(coeff[n]) || coeff[n] < 0.0) {
      throw std::invalid_argument(
          "SeparableLegendre: coefficients must be finite and >= 0");
    }
  }
  return SeparableLegendre{form, shift, std::move(coeff)};
}

double SeparableLegendre::value(const Eigen::VectorXd& x) const {
  if (x.size() != coeff.size()) {
    throw std::invalid_argument("SeparableLegendre: dimension mismatch");
  }
  double v = 0.0;
  if (form == Form::Quadratic) {
    for (Eigen::Index n = 0; n < x.size(); ++n) v += coeff[n] * x[n] * x[n];
    return 0.5 * v;
  }
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (coeff[n] == 0.0) continue;  // inert coordinate
    const double t = x[n] + shift;
    if (!(t > 0.0)) {
      throw std::domain_error("SeparableLegendre: point outside dom h");
    }
    v -= coeff[n] * std::log(t);
  }
  return v;
}

Eigen::VectorXd SeparableLegendre::gradient(const Eigen::VectorXd& x) const {
  if (x.size() != coeff.size()) {
    throw std::invalid_argument("SeparableLegendre: dimension mismatch");
  }
  Eigen::VectorXd g(x.size());
  if (form == Form::Quadratic) {
    g = coeff.cwiseProduct(x);
    return g;
  }
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (coeff[n] == 0.0) {
      g[n] = 0.0;
      continue;
    }
    const double t = x[n] + shift;
    if (!(t > 0.0)) {
      throw std::domain_error("SeparableLegendre: point outside dom h");
    }
    g[n] = -coeff[n] / t;
  }
  return g;
}

bool SeparableLegendre::contains(const Eigen::VectorXd& x) const {
  if (form == Form::Quadratic) return true;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (coeff[n] > 0.0 && !(x[n] + shift > 0.0)) return false;
  }
  return true;
}

double SeparableLegendre::second_derivative(int n, double v) const {
  const double a = coeff[n];
  if (form == Form::Quadratic) return a;
  if (a == 0.0) return 0.0;
  const double t = v + shift;
  return a / (t * t);
}

double varphi_maj3(double z_n, double rho, double xi) {
  const double zr = z_n + rho;
  if (xi >= z_n) {
    const double t = xi - z_n;
    return t * t / (2.0 * zr * zr) - t / zr;
  }
  const double xr = xi + rho;
  if (!(xr > 0.0)) {
    throw std::domain_error("varphi_maj3: xi outside (-rho, inf)");
  }
  return -std::log(xr / zr);
}

double varphi_maj3_deriv(double z_n, double rho, double xi) {
  const double zr = z_n + rho;
  if (xi >= z_n) return (xi - z_n) / (zr * zr) - 1.0 / zr;
  const double xr = xi + rho;
  if (!(xr > 0.0)) {
    throw std::domain_error("varphi_maj3: xi outside (-rho, inf)");
  }
  return -1.0 / xr;
}

double Maj3Generator::value(const Eigen::VectorXd& x) const {
  if (x.size() != coeff.size()) {
    throw std::invalid_argument("Maj3Generator: dimension mismatch");
  }
  double v = 0.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (coeff[n] == 0.0) continue;
    v += coeff[n] * varphi_maj3(z[n], rho, x[n]);
  }
  return v;
}

Eigen::VectorXd Maj3Generator::gradient(const Eigen::VectorXd& x) const {
  if (x.size() != coeff.size()) {
    throw std::invalid_argument("Maj3Generator: dimension mismatch");
  }
  Eigen::VectorXd g(x.size());
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    g[n] = coeff[n] == 0.0 ? 0.0 : coeff[n] * varphi_maj3_deriv(z[n], rho, x[n]);
  }
  return g;
}

bool Maj3Generator::contains(const Eigen::VectorXd& x) const {
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (coeff[n] > 0.0 && !(x[n] + rho > 0.0)) return false;
  }
  return true;
}

double Maj3Generator::second_derivative(int n, double v) const {
  const double a = coeff[n];
  if (a == 0.0) return 0.0;
  // phi'' is 1/(z_n+rho)^2 on the quadratic branch, 1/(v+rho)^2 below; the
  // two agree at the glue point, so phi is C^2.
  const double t = v >= z[n] ? z[n] + rho : v + rho;
  return a / (t * t);
}

// ---------------------------------------------------------------------------
// Bregman distances

double bregman_distance(const SeparableLegendre& h, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y) {
  if (x.size() != h.coeff.size() || y.size() != h.coeff.size()) {
    throw std::invalid_argument("bregman_distance: dimension mismatch");
  }
  double d = 0.0;
  if (h.form == SeparableLegendre::Form::Quadratic) {
    for (Eigen::Index n = 0; n < x.size(); ++n) {
      const double t = x[n] - y[n];
      d += h.coeff[n] * t * t;
    }
    return 0.5 * d;
  }
  // Per coordinate w - log1p(w) with w = (x-y)/(y+shift): each term is
  // nonnegative, so the sum cannot go negative by cancellation.
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (h.coeff[n] == 0.0) continue;
    const double yn = y[n] + h.shift;
    if (!(yn > 0.0) || !(x[n] + h.shift > 0.0)) {
      throw std::domain_error("bregman_distance: point outside dom h");
    }
    const double w = (x[n] - y[n]) / yn;
    d += h.coeff[n] * (w - std::log1p(w));
  }
  return d;
}

double bregman_distance(const Maj3Generator& h, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y) {
  if (x.size() != h.coeff.size() || y.size() != h.coeff.size()) {
    throw std::invalid_argument("bregman_distance: dimension mismatch");
  }
  double d = 0.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    if (h.coeff[n] == 0.0) continue;
    const double vx = varphi_maj3(h.z[n], h.rho, x[n]);
    const double vy = varphi_maj3(h.z[n], h.rho, y[n]);
    const double gy = varphi_maj3_deriv(h.z[n], h.rho, y[n]);
    d += h.coeff[n] * (vx - vy - gy * (x[n] - y[n]));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Quadratic curvature factor

double curvature_c_tau(double xi, double eta, double tau) {
  if (!(tau > 0.0) || !(eta > tau)) {
    throw std::domain_error("curvature_c_tau: need eta > tau > 0");
  }
  const double s = xi + tau;      // distance to the left domain edge
  const double beta = eta - tau;  // value of the integrand denominator at t=1
  if (!(s + beta > 0.0)) {
    throw std::domain_error("curvature_c_tau: need xi + eta > 0");
  }
  if (std::abs(s) <= 1e-5 * beta) {
    // Series of 2 int_0^1 u/(us+beta)^2 du about s=0; eight terms leave a
    // relative error ~ (1e-5)^8, far below the switchover noise.
    double sum = 0.0;
    double spow = 1.0;
    double bpow = beta * beta;
    double sign = 1.0;
    for (int j = 0; j < 8; ++j) {
      sum += sign * 2.0 * (j + 1.0) / (j + 2.0) * spow / bpow;
      spow *= s;
      bpow *= beta;
      sign = -sign;
    }
    return sum;
  }
  const double w = s / beta;
  return 2.0 / (s * s) * (std::log1p(w) - w / (1.0 + w));
}

// ---------------------------------------------------------------------------
// Coefficient rules

namespace {

// y ./ (Hz + b) with the usual domain check; one forward application.
Eigen::VectorXd count_ratios(const PoissonModel& model, const Eigen::VectorXd& z) {
  Eigen::VectorXd q = model.op->forward(z) + model.b;
  for (Eigen::Index m = 0; m < q.size(); ++m) {
    if (!(q[m] > 0.0)) {
      throw std::domain_error("majorant coefficients: H z + b not positive");
    }
  }
  return model.y.cwiseQuotient(q);
}

}  // namespace

Eigen::VectorXd coeff_maj1(const PoissonModel& model, const Eigen::VectorXd& z) {
  const Eigen::VectorXd u = count_ratios(model, z);
  const Eigen::VectorXd q = model.op->adjoint(u);
  const Eigen::VectorXd r = model.op->adjoint(u.cwiseProduct(model.zeta_b).eval());
  return z.cwiseProduct(q) + r;
}

Eigen::VectorXd coeff_maj2(const SparseNonnegOperator& op, const Eigen::VectorXd& y) {
  if (y.size() != op.rows()) {
    throw std::invalid_argument("coeff_maj2: counts length must equal rows");
  }
  Eigen::VectorXd a = Eigen::VectorXd::Zero(op.cols());
  for (int m = 0; m < op.rows(); ++m) {
    for (const auto& e : op.row(m)) a[e.col] += y[m];
  }
  return a;
}

Eigen::VectorXd coeff_maj2(const PoissonModel& model) {
  return coeff_maj2(*model.op, model.y);
}

Eigen::VectorXd coeff_maj4(const PoissonModel& model, const Eigen::VectorXd& z,
                           double mu) {
  if (!std::isfinite(mu) || mu < 0.0 || mu > model.rho) {
    throw std::invalid_argument("coeff_maj4: mu must lie in [0, rho]");
  }
  const Eigen::VectorXd q = model.op->adjoint(count_ratios(model, z));
  return (z.array() + mu).matrix().cwiseProduct(q);
}

Eigen::VectorXd coeff_maj6(const PoissonModel& model, const Eigen::VectorXd& z) {
  const Eigen::VectorXd q = model.op->adjoint(count_ratios(model, z));
  return z.cwiseProduct(q);
}

Eigen::VectorXd coeff_maj7(const PoissonModel& model, const Eigen::VectorXd& z,
                           double tau) {
  if (!(tau > 0.0) || !(tau < model.rho)) {
    throw std::invalid_argument("coeff_maj7: tau must lie in (0, rho)");
  }
  // c depends on (n, m) jointly, so this one is a genuine row sweep.
  const Eigen::VectorXd u = count_ratios(model, z);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(model.op->cols());
  for (int m = 0; m < model.op->rows(); ++m) {
    if (u[m] == 0.0) continue;
    const double zb = model.zeta_b[m];
    for (const auto& e : model.op->row(m)) {
      a[e.col] += u[m] * e.value * (z[e.col] + zb) * curvature_c_tau(z[e.col], zb, tau);
    }
  }
  return a;
}

Eigen::VectorXd coeff_maj8(const PoissonModel& model, const Eigen::VectorXd& z,
                           double tau) {
  if (!(tau > 0.0) || !(tau < model.rho)) {
    throw std::invalid_argument("coeff_maj8: tau must lie in (0, rho)");
  }
  Eigen::VectorXd a = coeff_maj1(model, z);
  for (Eigen::Index n = 0; n < a.size(); ++n) {
    a[n] *= curvature_c_tau(z[n], model.rho, tau);
  }
  return a;
}

Eigen::VectorXd coeff_maj9(const PoissonModel& model, const Eigen::VectorXd& z,
                           double tau) {
  if (!(tau > 0.0) || !(tau < model.rho)) {
    throw std::invalid_argument("coeff_maj9: tau must lie in (0, rho)");
  }
  Eigen::VectorXd hz = model.op->forward(z);
  Eigen::VectorXd u(hz.size());
  for (Eigen::Index m = 0; m < hz.size(); ++m) {
    // eta = b_m here, so this family additionally needs tau < min_m b_m;
    // with unit-weight projector rows (row sums >= 1) that follows from
    // tau < rho.
    u[m] = model.y[m] / model.zeta[m] * curvature_c_tau(hz[m], model.b[m], tau);
  }
  return model.op->adjoint(u);
}

// ---------------------------------------------------------------------------
// Wrapper and factory

double MajorantGenerator::value(const Eigen::VectorXd& x) const {
  return std::visit([&](const auto& g) { return g.value(x); }, g_);
}

Eigen::VectorXd MajorantGenerator::gradient(const Eigen::VectorXd& x) const {
  return std::visit([&](const auto& g) { return g.gradient(x); }, g_);
}

bool MajorantGenerator::contains(const Eigen::VectorXd& x) const {
  return std::visit([&](const auto& g) { return g.contains(x); }, g_);
}

double MajorantGenerator::second_derivative(int n, double v) const {
  return std::visit([&](const auto& g) { return g.second_derivative(n, v); }, g_);
}

double MajorantGenerator::bregman(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  return std::visit([&](const auto& g) { return bregman_distance(g, x, y); }, g_);
}

MajorantGenerator make_generator(const PoissonModel& model, const MajorantSpec& spec,
                                 const Eigen::VectorXd& z) {
  using Form = SeparableLegendre::Form;
  switch (spec.kind) {
    case MajorantKind::Maj1:
      return MajorantGenerator(
          make_separable_legendre(Form::LogShift, model.rho, coeff_maj1(model, z)));
    case MajorantKind::Maj2:
      return MajorantGenerator(
          make_separable_legendre(Form::LogShift, model.rho, coeff_maj2(model)));
    case MajorantKind::Maj3:
      return MajorantGenerator(Maj3Generator{coeff_maj1(model, z), z, model.rho});
    case MajorantKind::Maj4: {
      const double mu = spec.resolved_mu(model.rho);
      return MajorantGenerator(
          make_separable_legendre(Form::LogShift, mu, coeff_maj4(model, z, mu)));
    }
    case MajorantKind::Maj5:
      return MajorantGenerator(
          make_separable_legendre(Form::LogShift, 0.0, coeff_maj1(model, z)));
    case MajorantKind::Maj6:
      return MajorantGenerator(
          make_separable_legendre(Form::LogShift, 0.0, coeff_maj6(model, z)));
    case MajorantKind::Maj7:
      return MajorantGenerator(make_separable_legendre(
          Form::Quadratic, 0.0, coeff_maj7(model, z, spec.resolved_tau(model.rho))));
    case MajorantKind::Maj8:
      return MajorantGenerator(make_separable_legendre(
          Form::Quadratic, 0.0, coeff_maj8(model, z, spec.resolved_tau(model.rho))));
    case MajorantKind::Maj9:
      return MajorantGenerator(make_separable_legendre(
          Form::Quadratic, 0.0, coeff_maj9(model, z, spec.resolved_tau(model.rho))));
  }
  throw std::logic_error("make_generator: unknown majorant kind");
}

Box domain_box(const MajorantSpec& spec, double rho, double hi, double margin) {
  double edge = 0.0;  // left end of the family domain (-edge, inf)
  switch (spec.kind) {
    case MajorantKind::Maj1:
    case MajorantKind::Maj2:
    case MajorantKind::Maj3:
      edge = rho;
      break;
    case MajorantKind::Maj4:
      edge = spec.resolved_mu(rho);
      break;
    case MajorantKind::Maj5:
    case MajorantKind::Maj6:
      edge = 0.0;
      break;
    case MajorantKind::Maj7:
    case MajorantKind::Maj8:
      edge = spec.resolved_tau(rho);
      break;
    case MajorantKind::Maj9:
      // The row-level curvature argument is H_m x, so the componentwise safe
      // region is the nonnegative orthant (H_m x >= 0 > -tau), not x_n > -tau.
      edge = 0.0;
      break;
  }
  Box box;
  box.lo = -edge + margin;
  box.hi = hi;
  if (!(box.lo < box.hi)) {
    throw std::invalid_argument("domain_box: empty box");
  }
  return box;
}

// ---------------------------------------------------------------------------
// Sampled checks

double order_check(const MajorantGenerator& tight, const MajorantGenerator& loose,
                   const Box& box, int dim, int samples, std::uint64_t seed) {
  auto g = rng::stream(seed);
  Eigen::VectorXd x(dim), y(dim);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    for (int n = 0; n < dim; ++n) x[n] = rng::uniform(g, box.lo, box.hi);
    for (int n = 0; n < dim; ++n) y[n] = rng::uniform(g, box.lo, box.hi);
    worst = std::min(worst, loose.bregman(x, y) - tight.bregman(x, y));
  }
  return worst;
}

double order_check_anchored(const MajorantGenerator& tight, const MajorantGenerator& loose,
                            const Eigen::VectorXd& z, const Box& box, int samples,
                            std::uint64_t seed) {
  auto g = rng::stream(seed);
  const int dim = static_cast<int>(z.size());
  Eigen::VectorXd x(dim);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    for (int n = 0; n < dim; ++n) x[n] = rng::uniform(g, box.lo, box.hi);
    worst = std::min(worst, loose.bregman(x, z) - tight.bregman(x, z));
  }
  return worst;
}

MajorizationReport majorization_check(
    const std::function<double(const Eigen::VectorXd&)>& f_value,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f_gradient,
    const std::function<MajorantGenerator(const Eigen::VectorXd&)>& generator_at,
    const Box& box, int dim, int samples, std::uint64_t seed) {
  auto g = rng::stream(seed);
  Eigen::VectorXd z(dim), x(dim);
  MajorizationReport report;
  report.min_gap = std::numeric_limits<double>::infinity();
  report.max_tangency = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (int n = 0; n < dim; ++n) z[n] = rng::uniform(g, box.lo, box.hi);
    for (int n = 0; n < dim; ++n) x[n] = rng::uniform(g, box.lo, box.hi);
    const MajorantGenerator gen = generator_at(z);
    const double fz = f_value(z);
    const Eigen::VectorXd gz = f_gradient(z);
    const double qx = fz + gz.dot(x - z) + gen.bregman(x, z);
    const double fx = f_value(x);
    report.min_gap = std::min(report.min_gap, (qx - fx) / (1.0 + std::abs(fx)));
    const double qz = fz + gen.bregman(z, z);
    report.max_tangency =
        std::max(report.max_tangency, std::abs(qz - fz) / (1.0 + std::abs(fz)));
  }
  return report;
}

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n <= 0) throw std::invalid_argument("gauss_legendre_01: n must be positive");
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  const int half = (n + 1) / 2;
  const double pi = std::acos(-1.0);
  for (int i = 0; i < half; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
    const double w = 1.0 / ((1.0 - x * x) * pp * pp);  // already scaled to [0,1]
    weights[static_cast<std::size_t>(i)] = w;
    weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
}

double hessian_characterization_check(const DirCurvature& f_curv, const MajorantGenerator& h,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                                      int quad_points) {
  std::vector<double> nodes, weights;
  gauss_legendre_01(quad_points, nodes, weights);
  const Eigen::VectorXd d = x - z;
  double acc = 0.0;
  Eigen::VectorXd v(z.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double t = nodes[k];
    v = (1.0 - t) * z + t * x;
    double hdd = 0.0;
    for (Eigen::Index n = 0; n < v.size(); ++n) {
      hdd += h.second_derivative(static_cast<int>(n), v[n]) * d[n] * d[n];
    }
    acc += weights[k] * (1.0 - t) * (hdd - f_curv(v, d));
  }
  return acc;
}

}  // namespace bregmm
