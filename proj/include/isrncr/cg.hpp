#pragma once

#include "isrncr/model.hpp"

namespace isrncr {

/// Restriction of the cubic model to the ray eta + alpha p:
///
///   m(eta + alpha p) - m(eta)
///     = c0 alpha + c1 alpha^2 / 2 + sigma/3 (n(alpha)^3 - n(0)^3),
///   n(alpha)^2 = a + 2 b alpha + c alpha^2.
struct LineCoefficients {
  double c0 = 0.0; ///< delta <G, p> + <eta, H[p]>
  double c1 = 0.0; ///< <p, H[p]>
  double a = 0.0;  ///< ||eta||^2
  double b = 0.0;  ///< <eta, p>
  double c = 0.0;  ///< ||p||^2
  double sigma = 0.0;

  static LineCoefficients from_model(const SubproblemModel &model,
                                     const TangentVector &eta,
                                     const TangentVector &p,
                                     const TangentVector &h_p);

  /// Model change relative to alpha = 0.
  double delta_value(double alpha) const;
  /// d/dalpha of the model along the ray.
  double slope(double alpha) const;
};

/// Global minimizer over alpha >= 0 of the model along the ray. Stationary
/// points come from the real roots of the squared (quartic) stationarity
/// equation, each polished and checked against the unsquared one.
double line_search(const LineCoefficients &lc);

double line_search(const SubproblemModel &model, const TangentVector &eta,
                   const TangentVector &p, const TangentVector &h_p);

/// Modified Polak-Ribiere-Polyak coefficient
///   <r_new, r_new - (||r_new|| / ||r_old||) P(r_old)> / (2 ||r_old||^2).
/// r_new and transported_r_old share a base point. Throws UsageError when
/// r_old is zero.
double beta_prp(const TangentVector &r_new, const TangentVector &r_old,
                const TangentVector &transported_r_old);

struct CgOptions {
  int max_iters = 0; ///< m; 0 = manifold dimension
  double kappa = 0.1;
  double theta = 0.1;
  double kappa_theta = 0.08;
  bool early_stop = true;  ///< sub-model gradient test
  bool extra_stops = true; ///< tiny-step and residual tests
};

/// Nonlinear conjugate gradient on the cubic model with exact line search.
/// The Hessian stays frozen at the model's base point; an auxiliary inner
/// point follows the retracted steps and is used only to transport vectors
/// for the conjugacy coefficient.
SubproblemResult cg_solve(const SubproblemModel &model, const CgOptions &opts);

} // namespace isrncr
