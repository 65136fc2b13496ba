#include "isrncr/model.hpp"

#include <cmath>

namespace isrncr {

TangentVector SubproblemModel::linear_term() const {
  return delta ? gradient : TangentVector::zero(x);
}

double SubproblemModel::effective_gradient_norm() const {
  return delta ? norm(gradient) : 0.0;
}

double SubproblemModel::value(const TangentVector &eta,
                              const TangentVector &h_eta) const {
  const double nrm = norm(eta);
  double v = f0 + 0.5 * inner(eta, h_eta) + sigma / 3.0 * nrm * nrm * nrm;
  if (delta)
    v += inner(gradient, eta);
  return v;
}

double SubproblemModel::value(const TangentVector &eta) const {
  return value(eta, hess(eta));
}

TangentVector SubproblemModel::model_gradient(const TangentVector &eta,
                                              const TangentVector &h_eta) const {
  TangentVector g = h_eta;
  if (delta)
    g += gradient;
  g.axpy(sigma * norm(eta), eta);
  return g;
}

} // namespace isrncr
