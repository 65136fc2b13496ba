#pragma once

#include "isrncr/model.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace isrncr {

/// Bands of the symmetric tridiagonal Lanczos matrix T plus the scalars of
/// the reduced cubic problem
///
///   min_y  y_1 delta ||G|| + 1/2 y^T T y + sigma/3 ||y||^3.
struct TridiagonalModel {
  std::vector<double> alpha; ///< diagonal, length l
  std::vector<double> beta;  ///< off-diagonal, length l - 1
  double g_norm = 0.0;
  double sigma = 1.0;
  int delta = 1;

  std::size_t size() const { return alpha.size(); }
  Matrix dense() const;
  /// Reduced objective at y (without the constant f0).
  double value(const Vector &y) const;
};

/// Orthonormal Lanczos vectors q_1..q_l, their images H[q_i], and the
/// current residual used to extend the basis.
struct KrylovBasis {
  std::vector<TangentVector> q;
  std::vector<TangentVector> hq;
  std::optional<TangentVector> residual;

  std::size_t size() const { return q.size(); }
  /// Sum_i y_i q_i.
  TangentVector combine(const Vector &y) const;
  /// Sum_i y_i H[q_i].
  TangentVector combine_images(const Vector &y) const;
};

/// Seeds the basis with start/||start|| and one Hessian product.
void lanczos_start(const HessianOperator &hess, const TangentVector &start,
                   KrylovBasis &basis, TridiagonalModel &tri);

enum class LanczosStep { Extended, Breakdown };

/// Appends q_{l+1} = r / ||r|| and the new column of T. Each new residual is
/// fully reorthogonalized against the basis. Returns Breakdown (and leaves the
/// basis unchanged) when ||r|| <= breakdown_tol.
LanczosStep lanczos_step(const HessianOperator &hess, KrylovBasis &basis,
                         TridiagonalModel &tri, double breakdown_tol);

struct ReducedSolution {
  Vector y;
  double lambda = 0.0; ///< multiplier sigma ||y||
  int newton_iters = 0;
  bool hard_case = false;
};

/// Newton iteration for the reduced problem did not converge.
class ReducedSolveError : public std::runtime_error {
public:
  ReducedSolveError(const std::string &msg, ReducedSolution best)
      : std::runtime_error(msg), best_(std::move(best)) {}
  const ReducedSolution &best() const { return best_; }

private:
  ReducedSolution best_;
};

/// Global minimizer of the reduced cubic problem via the secular equation
/// (T + lambda I) y = -g, lambda = sigma ||y||, T + lambda I >= 0.
ReducedSolution solve_reduced(const TridiagonalModel &tri);

struct LanczosOptions {
  int max_dim = 0;             ///< 0 = manifold dimension
  double kappa_theta = 0.08;
  bool early_stop = true;      ///< apply the sub-model gradient test
  std::uint64_t seed = 0;      ///< start vector when there is no gradient
};

/// Krylov-subspace solver for the cubic subproblem.
SubproblemResult lanczos_solve(const SubproblemModel &model,
                               const LanczosOptions &opts);

struct RitzEstimate {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  TangentVector min_vector; ///< unit Ritz vector for lambda_min
  int steps = 0;
};

/// Extreme Ritz values of `hess` on the tangent space at x from a seeded
/// Lanczos run of at most `iters` steps.
RitzEstimate extreme_ritz(const HessianOperator &hess, const GrassmannPoint &x,
                          int iters, std::uint64_t seed);

} // namespace isrncr
