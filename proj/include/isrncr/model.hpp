#pragma once

#include "isrncr/manifold.hpp"

#include <functional>
#include <optional>

namespace isrncr {

/// Linear map on the tangent space at a fixed point.
using HessianOperator = std::function<TangentVector(const TangentVector &)>;

/// Cubic-regularized model frozen for one outer iteration:
///
///   m(eta) = f0 + delta <G, eta> + 1/2 <eta, H[eta]> + sigma/3 ||eta||^3.
///
/// `gradient` always holds the sampled gradient; `delta` is 0 when its norm
/// fell below the gradient tolerance and the linear term is dropped.
struct SubproblemModel {
  GrassmannPoint x;
  double f0 = 0.0;
  TangentVector gradient;
  int delta = 1;
  double sigma = 1.0;
  HessianOperator hess;
  /// Unit negative-curvature direction, when one was estimated.
  std::optional<TangentVector> curvature_dir;

  /// delta * G.
  TangentVector linear_term() const;
  /// delta * ||G||; the norm used by the inner stopping tests.
  double effective_gradient_norm() const;

  /// Model value given a precomputed H[eta].
  double value(const TangentVector &eta, const TangentVector &h_eta) const;
  /// Model value; issues one Hessian-vector product.
  double value(const TangentVector &eta) const;

  /// delta G + H[eta] + sigma ||eta|| eta.
  TangentVector model_gradient(const TangentVector &eta,
                               const TangentVector &h_eta) const;
};

/// What a subproblem solver hands back to the outer loop.
struct SubproblemResult {
  TangentVector eta;
  TangentVector h_eta;        ///< H[eta], reconstructed without extra products
  double model_value = 0.0;   ///< m(eta)
  int inner_iters = 0;        ///< Hessian-vector products issued
};

} // namespace isrncr
