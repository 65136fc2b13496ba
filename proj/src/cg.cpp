#include "isrncr/cg.hpp"

#include <unsupported/Eigen/Polynomials>

#include <algorithm>
#include <cmath>
#include <limits>

namespace isrncr {

namespace {

constexpr double kStepTol = 1e-10;
constexpr double kRootCheck = 1e-9;

double ray_norm(const LineCoefficients &lc, double alpha) {
  return std::sqrt(std::max(0.0, lc.a + 2.0 * lc.b * alpha + lc.c * alpha * alpha));
}

double curvature(const LineCoefficients &lc, double alpha) {
  const double n = ray_norm(lc, alpha);
  const double t = lc.b + lc.c * alpha;
  double extra = lc.c * n;
  if (n > 0.0)
    extra += t * t / n;
  return lc.c1 + lc.sigma * extra;
}

/// Newton polish of a stationary point of the ray model.
double polish(const LineCoefficients &lc, double alpha) {
  for (int it = 0; it < 30; ++it) {
    const double g = lc.slope(alpha);
    const double h = curvature(lc, alpha);
    if (!(std::abs(h) > 0.0))
      break;
    const double next = alpha - g / h;
    if (!std::isfinite(next))
      break;
    if (std::abs(next - alpha) <= 1e-15 * std::max(1.0, std::abs(alpha))) {
      alpha = next;
      break;
    }
    alpha = next;
  }
  return alpha;
}

double slope_scale(const LineCoefficients &lc, double alpha) {
  const double n = ray_norm(lc, alpha);
  return std::abs(lc.c0) + std::abs(lc.c1 * alpha) +
         lc.sigma * n * (std::abs(lc.b) + lc.c * std::abs(alpha)) +
         std::numeric_limits<double>::min();
}

} // namespace

LineCoefficients LineCoefficients::from_model(const SubproblemModel &model,
                                              const TangentVector &eta,
                                              const TangentVector &p,
                                              const TangentVector &h_p) {
  LineCoefficients lc;
  lc.c0 = inner(eta, h_p);
  if (model.delta)
    lc.c0 += inner(model.gradient, p);
  lc.c1 = inner(p, h_p);
  lc.a = inner(eta, eta);
  lc.b = inner(eta, p);
  lc.c = inner(p, p);
  lc.sigma = model.sigma;
  return lc;
}

double LineCoefficients::delta_value(double alpha) const {
  const double n0 = std::sqrt(std::max(0.0, a));
  const double n1 = ray_norm(*this, alpha);
  return c0 * alpha + 0.5 * c1 * alpha * alpha +
         sigma / 3.0 * (n1 * n1 * n1 - n0 * n0 * n0);
}

double LineCoefficients::slope(double alpha) const {
  return c0 + c1 * alpha + sigma * ray_norm(*this, alpha) * (b + c * alpha);
}

double line_search(const LineCoefficients &lc) {
  if (!(lc.c > 0.0))
    throw UsageError("line_search: direction is zero");
  if (lc.sigma < 0.0)
    throw UsageError("line_search: sigma must be nonnegative");

  std::vector<double> candidates;
  if (lc.sigma == 0.0) {
    if (!(lc.c1 > 0.0)) {
      if (lc.c0 < 0.0 || lc.c1 < 0.0)
        throw UsageError("line_search: quadratic model unbounded below");
      return 0.0;
    }
    candidates.push_back(-lc.c0 / lc.c1);
  } else {
    // (c0 + c1 alpha)^2 = sigma^2 (a + 2 b alpha + c alpha^2)(b + c alpha)^2
    const double s2 = lc.sigma * lc.sigma;
    const double a = lc.a, b = lc.b, c = lc.c;
    Vector coeffs(5);
    coeffs << s2 * a * b * b - lc.c0 * lc.c0,
        s2 * (2.0 * a * b * c + 2.0 * b * b * b) - 2.0 * lc.c0 * lc.c1,
        s2 * (a * c * c + 5.0 * b * b * c) - lc.c1 * lc.c1,
        s2 * 4.0 * b * c * c, s2 * c * c * c;
    Index deg = 4;
    while (deg > 0 && coeffs(deg) == 0.0)
      --deg;
    if (deg > 0) {
      Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
      solver.compute(Vector(coeffs.head(deg + 1)));
      for (const auto &z : solver.roots()) {
        if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z.real())))
          continue;
        candidates.push_back(z.real());
      }
    }
    // The quadratic stationary point seeds the polish when sigma is tiny and
    // the quartic's leading terms swamp the relevant root.
    if (lc.c1 > 0.0)
      candidates.push_back(-lc.c0 / lc.c1);
  }

  double best_alpha = 0.0;
  double best_value = 0.0;
  for (double alpha : candidates) {
    if (!std::isfinite(alpha))
      continue;
    alpha = polish(lc, alpha);
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      continue;
    if (std::abs(lc.slope(alpha)) > kRootCheck * slope_scale(lc, alpha))
      continue;
    const double v = lc.delta_value(alpha);
    if (v < best_value) {
      best_value = v;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

double line_search(const SubproblemModel &model, const TangentVector &eta,
                   const TangentVector &p, const TangentVector &h_p) {
  return line_search(LineCoefficients::from_model(model, eta, p, h_p));
}

double beta_prp(const TangentVector &r_new, const TangentVector &r_old,
                const TangentVector &transported_r_old) {
  const double old_sq = inner(r_old, r_old);
  if (!(old_sq > 0.0))
    throw UsageError("beta_prp: previous residual is zero");
  const double new_norm = norm(r_new);
  const double ratio = new_norm / std::sqrt(old_sq);
  const double num = inner(r_new, r_new) - ratio * inner(r_new, transported_r_old);
  return num / (2.0 * old_sq);
}

SubproblemResult cg_solve(const SubproblemModel &model, const CgOptions &opts) {
  const GrassmannPoint &x = model.x;
  const int cap = opts.max_iters > 0 ? opts.max_iters : static_cast<int>(x.dim());
  if (cap < 1)
    throw UsageError("cg_solve: iteration cap must be >= 1");

  const double g_eff = model.effective_gradient_norm();
  TangentVector eta = TangentVector::zero(x);
  TangentVector h_eta = TangentVector::zero(x);
  // Residual of the quadratic part: delta G + H[eta].
  TangentVector r = model.linear_term();
  const double r0_norm = norm(r);

  TangentVector p = -r;
  if (!model.delta && model.curvature_dir)
    p = *model.curvature_dir;

  GrassmannPoint x_inner = x;
  int products = 0;
  for (int i = 1; i <= cap; ++i) {
    if (!(norm(p) > 0.0))
      break;
    TangentVector h_p = model.hess(p);
    ++products;
    const double alpha = line_search(model, eta, p, h_p);
    eta.axpy(alpha, p);
    h_eta.axpy(alpha, h_p);
    TangentVector r_old = r;
    r.axpy(alpha, h_p);

    if (opts.extra_stops && alpha <= kStepTol)
      break;
    if (opts.early_stop && model.delta) {
      const TangentVector mg = model.model_gradient(eta, h_eta);
      if (norm(mg) <= opts.kappa_theta * std::min(1.0, norm(eta)) * g_eff)
        break;
    }
    const double r_norm = norm(r);
    if (opts.extra_stops && r0_norm > 0.0 &&
        r_norm <= r0_norm * std::min(std::pow(r0_norm, opts.theta), opts.kappa))
      break;
    if (i == cap)
      break;

    try {
      x_inner = retract(x_inner, project(x_inner, (alpha * p).matrix()));
    } catch (const DegenerateStepError &) {
    }
    double beta = 0.0;
    if (norm(r_old) > 0.0)
      beta = beta_prp(project(x_inner, r.matrix()), r_old,
                      project(x_inner, r_old.matrix()));
    const TangentVector p_moved = project(x, project(x_inner, p.matrix()).matrix());
    p = -r;
    p.axpy(beta, p_moved);
  }

  SubproblemResult res{eta, h_eta, 0.0, products};
  res.model_value = model.value(res.eta, res.h_eta);
  return res;
}

} // namespace isrncr
