#include "isrncr/lanczos.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace isrncr {

namespace {

constexpr int kMaxNewton = 200;

Vector diag_of(const TridiagonalModel &tri) {
  return Eigen::Map<const Vector>(tri.alpha.data(),
                                  static_cast<Index>(tri.alpha.size()));
}

Vector subdiag_of(const TridiagonalModel &tri) {
  return Eigen::Map<const Vector>(tri.beta.data(),
                                  static_cast<Index>(tri.beta.size()));
}

double min_eigenvalue(const TridiagonalModel &tri) {
  if (tri.size() == 1)
    return tri.alpha[0];
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag_of(tri), subdiag_of(tri),
                            Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Flip v so its largest-magnitude entry is positive.
void canonical_sign(Vector &v) {
  Index k;
  v.cwiseAbs().maxCoeff(&k);
  if (v(k) < 0)
    v = -v;
}

/// y(lambda) = -(T + lambda I)^{-1} g e_1 and w = L^{-1} y with
/// T + lambda I = L L^T. Returns false when the shift is not positive definite.
struct ShiftedSolve {
  Vector y;
  double y_norm = 0.0;
  double w_norm2 = 0.0;
};

bool shifted_solve(const TridiagonalModel &tri, double g1, double lambda,
                   ShiftedSolve &out) {
  const std::size_t l = tri.size();
  std::vector<double> ld(l), le(l > 0 ? l - 1 : 0);
  double piv = tri.alpha[0] + lambda;
  if (!(piv > 0.0))
    return false;
  ld[0] = std::sqrt(piv);
  for (std::size_t i = 0; i + 1 < l; ++i) {
    le[i] = tri.beta[i] / ld[i];
    piv = tri.alpha[i + 1] + lambda - le[i] * le[i];
    if (!(piv > 0.0))
      return false;
    ld[i + 1] = std::sqrt(piv);
  }
  // L z = -g e_1
  Vector z(static_cast<Index>(l));
  z(0) = -g1 / ld[0];
  for (std::size_t i = 1; i < l; ++i)
    z(i) = -le[i - 1] * z(i - 1) / ld[i];
  // L^T y = z
  Vector y(static_cast<Index>(l));
  y(l - 1) = z(l - 1) / ld[l - 1];
  for (std::size_t i = l - 1; i-- > 0;)
    y(i) = (z(i) - le[i] * y(i + 1)) / ld[i];
  // L w = y
  double w = y(0) / ld[0];
  double w2 = w * w;
  for (std::size_t i = 1; i < l; ++i) {
    w = (y(i) - le[i - 1] * w) / ld[i];
    w2 += w * w;
  }
  out.y = std::move(y);
  out.y_norm = out.y.norm();
  out.w_norm2 = w2;
  return std::isfinite(out.y_norm) && std::isfinite(w2);
}

/// Minimizer when T + lambda I is singular at lambda = -lambda_min(T):
/// y = y0 + tau v_1 with ||y|| = lambda / sigma. Also covers g = 0.
ReducedSolution hard_case(const TridiagonalModel &tri, double g1) {
  const Index l = static_cast<Index>(tri.size());
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag_of(tri), subdiag_of(tri),
                            Eigen::ComputeEigenvectors);
  const Vector &ev = es.eigenvalues();
  const Matrix &vecs = es.eigenvectors();
  const double lam1 = ev(0);
  ReducedSolution sol;
  sol.hard_case = true;
  if (lam1 >= 0.0) {
    sol.y = Vector::Zero(l);
    return sol;
  }
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  Vector y0 = Vector::Zero(l);
  for (Index j = 0; j < l; ++j) {
    const double gap = ev(j) - lam1;
    if (gap > 1e-12 * scale)
      y0 -= (g1 * vecs(0, j) / gap) * vecs.col(j);
  }
  sol.lambda = -lam1;
  const double target = sol.lambda / tri.sigma;
  const double tau2 = target * target - y0.squaredNorm();
  Vector v1 = vecs.col(0);
  canonical_sign(v1);
  double tau = tau2 > 0.0 ? std::sqrt(tau2) : 0.0;
  if (g1 * v1(0) * tau > 0.0)
    tau = -tau;
  sol.y = y0 + tau * v1;
  return sol;
}

double hnorm_scale(const TridiagonalModel &tri) {
  double s = 0.0;
  for (double a : tri.alpha)
    s = std::max(s, std::abs(a));
  for (double b : tri.beta)
    s = std::max(s, std::abs(b));
  return s;
}

void reorthogonalize(TangentVector &r, const std::vector<TangentVector> &q) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto &qi : q)
      r.axpy(-inner(qi, r), qi);
}

} // namespace

Matrix TridiagonalModel::dense() const {
  const Index l = static_cast<Index>(alpha.size());
  Matrix t = Matrix::Zero(l, l);
  for (Index i = 0; i < l; ++i)
    t(i, i) = alpha[i];
  for (Index i = 0; i + 1 < l; ++i)
    t(i, i + 1) = t(i + 1, i) = beta[i];
  return t;
}

double TridiagonalModel::value(const Vector &y) const {
  const Index l = static_cast<Index>(alpha.size());
  double quad = 0.0;
  for (Index i = 0; i < l; ++i) {
    quad += alpha[i] * y(i) * y(i);
    if (i + 1 < l)
      quad += 2.0 * beta[i] * y(i) * y(i + 1);
  }
  const double n = y.norm();
  return delta * g_norm * y(0) + 0.5 * quad + sigma / 3.0 * n * n * n;
}

TangentVector KrylovBasis::combine(const Vector &y) const {
  TangentVector out = TangentVector::zero(q.front().base());
  for (std::size_t i = 0; i < q.size(); ++i)
    out.axpy(y(static_cast<Index>(i)), q[i]);
  return out;
}

TangentVector KrylovBasis::combine_images(const Vector &y) const {
  TangentVector out = TangentVector::zero(hq.front().base());
  for (std::size_t i = 0; i < hq.size(); ++i)
    out.axpy(y(static_cast<Index>(i)), hq[i]);
  return out;
}

void lanczos_start(const HessianOperator &hess, const TangentVector &start,
                   KrylovBasis &basis, TridiagonalModel &tri) {
  const double n0 = norm(start);
  if (!(n0 > 0.0))
    throw UsageError("lanczos_start: start vector is zero");
  TangentVector q1 = (1.0 / n0) * start;
  TangentVector hq1 = hess(q1);
  const double a = inner(q1, hq1);
  TangentVector r = hq1;
  r.axpy(-a, q1);
  basis.q.assign(1, q1);
  basis.hq.assign(1, hq1);
  reorthogonalize(r, basis.q);
  basis.residual = std::move(r);
  tri.alpha.assign(1, a);
  tri.beta.clear();
}

LanczosStep lanczos_step(const HessianOperator &hess, KrylovBasis &basis,
                         TridiagonalModel &tri, double breakdown_tol) {
  if (basis.q.empty() || !basis.residual)
    throw UsageError("lanczos_step: basis not started");
  const double b = norm(*basis.residual);
  if (b <= breakdown_tol)
    return LanczosStep::Breakdown;
  TangentVector q = (1.0 / b) * *basis.residual;
  TangentVector hq = hess(q);
  const double a = inner(q, hq);
  TangentVector r = hq;
  r.axpy(-a, q);
  r.axpy(-b, basis.q.back());
  basis.q.push_back(std::move(q));
  basis.hq.push_back(std::move(hq));
  reorthogonalize(r, basis.q);
  basis.residual = std::move(r);
  tri.alpha.push_back(a);
  tri.beta.push_back(b);
  return LanczosStep::Extended;
}

ReducedSolution solve_reduced(const TridiagonalModel &tri) {
  if (tri.alpha.empty() || tri.beta.size() + 1 != tri.alpha.size())
    throw UsageError("solve_reduced: malformed tridiagonal model");
  if (!(tri.sigma > 0.0))
    throw UsageError("solve_reduced: sigma must be positive");
  const double g1 = tri.delta * tri.g_norm;
  const double sigma = tri.sigma;
  if (g1 == 0.0)
    return hard_case(tri, 0.0);

  const double lam1 = min_eigenvalue(tri);
  const double scale = std::max(1.0, hnorm_scale(tri));
  double lo = std::max(0.0, -lam1) + 1e-14 * scale;
  ShiftedSolve s;
  // The bracket's left end can land on an indefinite shift through rounding
  // in lambda_min; nudge it right until the factorization succeeds.
  int nudges = 0;
  while (!shifted_solve(tri, g1, lo, s)) {
    lo += 1e-14 * scale * std::pow(2.0, nudges);
    if (++nudges > 60)
      throw ReducedSolveError("solve_reduced: no positive definite shift",
                              hard_case(tri, g1));
  }
  auto phi_of = [&](double lam, const ShiftedSolve &ss) {
    return ss.y_norm - lam / sigma;
  };
  if (phi_of(lo, s) <= 0.0) {
    if (lam1 < 0.0)
      return hard_case(tri, g1);
    ReducedSolution sol;
    sol.y = s.y;
    sol.lambda = lo;
    return sol;
  }
  // For lambda >= max(0, -lam1) + sqrt(sigma |g|), ||y|| <= lambda / sigma.
  double hi = std::max(0.0, -lam1) + std::sqrt(sigma * std::abs(g1)) * (1.0 + 1e-12) +
              2e-14 * scale;

  ReducedSolution best;
  best.y = s.y;
  best.lambda = lo;
  double best_phi = phi_of(lo, s);

  // Newton on psi(lambda) = 1/||y|| - sigma/lambda, which is nearly linear
  // close to the pole; convergence is judged on phi = ||y|| - lambda/sigma.
  double lam = hi;
  for (int it = 1; it <= kMaxNewton; ++it) {
    ShiftedSolve cur;
    if (!shifted_solve(tri, g1, lam, cur)) {
      lo = lam;
      lam = 0.5 * (lo + hi);
      continue;
    }
    const double phi = phi_of(lam, cur);
    if (std::abs(phi) < std::abs(best_phi)) {
      best_phi = phi;
      best.y = cur.y;
      best.lambda = lam;
    }
    best.newton_iters = it;
    if (std::abs(phi) <= 1e-12 * std::max(1.0, lam / sigma))
      return best;
    if (phi > 0.0)
      lo = lam;
    else
      hi = lam;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi)
      return best;
    const double yn = cur.y_norm;
    const double psi = 1.0 / yn - sigma / lam;
    const double dpsi = cur.w_norm2 / (yn * yn * yn) + sigma / (lam * lam);
    double next = lam - psi / dpsi;
    if (!(next > lo && next < hi))
      next = 0.5 * (lo + hi);
    lam = next;
  }
  throw ReducedSolveError("solve_reduced: Newton iteration did not converge",
                          best);
}

SubproblemResult lanczos_solve(const SubproblemModel &model,
                               const LanczosOptions &opts) {
  const GrassmannPoint &x = model.x;
  const int full_dim = static_cast<int>(x.dim());
  const int max_dim = opts.max_dim > 0 ? std::min(opts.max_dim, full_dim) : full_dim;
  const double g_norm = norm(model.gradient);

  TridiagonalModel tri;
  tri.sigma = model.sigma;
  tri.delta = model.delta;
  tri.g_norm = g_norm;
  KrylovBasis basis;

  if (model.delta) {
    if (!(g_norm > 0.0))
      throw UsageError("lanczos_solve: zero gradient with delta = 1");
    lanczos_start(model.hess, model.gradient, basis, tri);
  } else if (model.curvature_dir) {
    lanczos_start(model.hess, *model.curvature_dir, basis, tri);
  } else if (g_norm > 0.0) {
    lanczos_start(model.hess, model.gradient, basis, tri);
  } else {
    lanczos_start(model.hess, random_tangent(x, opts.seed), basis, tri);
  }

  const double g_eff = model.delta ? g_norm : 0.0;
  Vector y;
  for (;;) {
    try {
      y = solve_reduced(tri).y;
    } catch (const ReducedSolveError &e) {
      y = e.best().y;
    }
    const std::size_t l = basis.size();
    const double beta_next = norm(*basis.residual);
    // ||grad m(eta_l)|| = beta_{l+1} |y_l| for the reduced minimizer.
    if (opts.early_stop && model.delta) {
      const double grad_norm = beta_next * std::abs(y(static_cast<Index>(l) - 1));
      if (grad_norm <= opts.kappa_theta * std::min(1.0, y.norm()) * g_eff)
        break;
    }
    if (static_cast<int>(l) >= max_dim)
      break;
    const double tol =
        std::max(1e-13 * g_eff, 1e-14 * hnorm_scale(tri));
    if (lanczos_step(model.hess, basis, tri, tol) == LanczosStep::Breakdown)
      break;
  }

  SubproblemResult res{basis.combine(y), basis.combine_images(y), 0.0,
                       static_cast<int>(basis.size())};
  res.model_value = model.value(res.eta, res.h_eta);
  return res;
}

RitzEstimate extreme_ritz(const HessianOperator &hess, const GrassmannPoint &x,
                          int iters, std::uint64_t seed) {
  if (iters < 1)
    throw UsageError("extreme_ritz: iters must be >= 1");
  const int steps = std::min<int>(iters, static_cast<int>(x.dim()));
  TridiagonalModel tri;
  KrylovBasis basis;
  lanczos_start(hess, random_tangent(x, seed), basis, tri);
  while (static_cast<int>(basis.size()) < steps) {
    const double tol = 1e-13 * std::max(hnorm_scale(tri), 1e-300);
    if (lanczos_step(hess, basis, tri, tol) == LanczosStep::Breakdown)
      break;
  }
  const Index l = static_cast<Index>(tri.size());
  Vector vmin(l);
  double lmin, lmax;
  if (l == 1) {
    lmin = lmax = tri.alpha[0];
    vmin(0) = 1.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.computeFromTridiagonal(diag_of(tri), subdiag_of(tri),
                              Eigen::ComputeEigenvectors);
    lmin = es.eigenvalues()(0);
    lmax = es.eigenvalues()(l - 1);
    vmin = es.eigenvectors().col(0);
  }
  canonical_sign(vmin);
  TangentVector v = basis.combine(vmin);
  v *= 1.0 / norm(v);
  return RitzEstimate{lmin, lmax, std::move(v), static_cast<int>(l)};
}

} // namespace isrncr
