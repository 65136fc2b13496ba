#include "isrncr/lanczos.hpp"
#include "isrncr/tasks.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace isrncr;
using support::cubic;

namespace {

HessianOperator scaled_identity(double s) {
  return [s](const TangentVector &v) { return s * v; };
}

struct DenseCase {
  GrassmannPoint x;
  std::vector<TangentVector> basis;
  Matrix m;
  Vector g;
  double sigma;

  SubproblemModel model(int delta = 1) const {
    return support::make_model(x, support::from_coords(x, basis, g),
                               support::dense_operator(x, basis, m), sigma, delta);
  }
};

DenseCase random_case(Index d, Index r, std::uint64_t seed, bool indefinite) {
  std::mt19937_64 rng(seed);
  const GrassmannPoint x = random_point(d, r, seed);
  auto basis = support::tangent_basis(x);
  const Index n = static_cast<Index>(basis.size());
  const Vector eigs = indefinite ? support::uniform_vector(n, -2.0, 3.0, rng)
                                 : support::uniform_vector(n, 0.5, 4.0, rng);
  std::uniform_real_distribution<double> sig(0.1, 3.0);
  return {x, basis, support::symmetric_with_spectrum(eigs, rng),
          support::gaussian_vector(n, rng), sig(rng)};
}

// Cubic model value of alpha * G in coordinates.
double along_gradient(const DenseCase &c, double alpha) {
  return cubic(c.g, c.m, c.sigma, alpha * c.g);
}

double cauchy_grid_min(const DenseCase &c, int points = 10000) {
  const double gn = c.g.norm();
  const double curv = c.g.dot(c.m * c.g);
  const double s = 1.5 * (std::abs(curv) + std::sqrt(curv * curv + 4 * c.sigma * gn * gn * gn * gn * gn)) /
                   (2 * c.sigma * gn * gn * gn);
  double best = 0.0;
  for (int i = 0; i <= points; ++i)
    best = std::min(best, along_gradient(c, -s + 2 * s * i / points));
  return best;
}

} // namespace

TEST(LanczosStep, IdentityBreaksDownAfterOneVector) {
  const GrassmannPoint x = random_point(6, 2, 1);
  KrylovBasis basis;
  TridiagonalModel tri;
  lanczos_start(scaled_identity(1.0), random_tangent(x, 2), basis, tri);
  EXPECT_EQ(lanczos_step(scaled_identity(1.0), basis, tri, 1e-12), LanczosStep::Breakdown);
  ASSERT_EQ(tri.size(), 1u);
  EXPECT_NEAR(tri.alpha[0], 1.0, 1e-15);
  EXPECT_TRUE(tri.beta.empty());
}

TEST(LanczosStep, BasisStaysOrthonormal) {
  const DenseCase c = random_case(9, 3, 3, true);
  const HessianOperator h = support::dense_operator(c.x, c.basis, c.m);
  KrylovBasis basis;
  TridiagonalModel tri;
  lanczos_start(h, random_tangent(c.x, 4), basis, tri);
  while (basis.size() < c.basis.size()) {
    if (lanczos_step(h, basis, tri, 1e-13) == LanczosStep::Breakdown)
      break;
    for (std::size_t i = 0; i < basis.size(); ++i)
      for (std::size_t j = 0; j < basis.size(); ++j)
        ASSERT_NEAR(inner(basis.q[i], basis.q[j]), i == j ? 1.0 : 0.0, 1e-8);
    ASSERT_EQ(tri.beta.size() + 1, tri.alpha.size());
  }
}

TEST(LanczosStep, TridiagonalMatchesKrylovRitzValues) {
  // Tangent space of dimension 5 (d = 6, r = 1) with a diagonal operator.
  const GrassmannPoint x = random_point(6, 1, 5);
  const auto basis = support::tangent_basis(x);
  Vector diag(5);
  diag << -1.5, 0.25, 1.0, 2.0, 4.5;
  const Matrix m = diag.asDiagonal();
  const HessianOperator h = support::dense_operator(x, basis, m);
  Vector b0(5);
  b0 << 1.0, -0.5, 0.75, 0.3, -1.2;

  KrylovBasis kb;
  TridiagonalModel tri;
  lanczos_start(h, support::from_coords(x, basis, b0), kb, tri);
  for (int l = 2; l <= 3; ++l)
    ASSERT_EQ(lanczos_step(h, kb, tri, 1e-13), LanczosStep::Extended);

  Matrix krylov(5, 3);
  krylov.col(0) = b0;
  krylov.col(1) = m * b0;
  krylov.col(2) = m * m * b0;
  Eigen::HouseholderQR<Matrix> qr(krylov);
  const Matrix q = qr.householderQ() * Matrix::Identity(5, 3);
  const Vector ritz = Eigen::SelfAdjointEigenSolver<Matrix>(q.transpose() * m * q).eigenvalues();
  const Vector mine = Eigen::SelfAdjointEigenSolver<Matrix>(tri.dense()).eigenvalues();
  EXPECT_LE((ritz - mine).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SolveReduced, OneDimensionalClosedForm) {
  TridiagonalModel tri;
  tri.alpha = {0.0};
  tri.g_norm = 4.0;
  tri.sigma = 1.0;
  const ReducedSolution s = solve_reduced(tri);
  ASSERT_EQ(s.y.size(), 1);
  EXPECT_NEAR(s.y(0), -2.0, 1e-12);
}

TEST(SolveReduced, NoLinearTermPositiveDefiniteIsZero) {
  TridiagonalModel tri;
  tri.alpha = {2.0, 3.0, 1.5};
  tri.beta = {0.5, -0.25};
  tri.g_norm = 5.0;
  tri.delta = 0;
  tri.sigma = 0.8;
  const ReducedSolution s = solve_reduced(tri);
  EXPECT_EQ(s.y.norm(), 0.0);
}

TEST(SolveReduced, MatchesGridSearchInThreeDimensions) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  TridiagonalModel tri;
  tri.alpha = {u(rng), u(rng), u(rng)};
  tri.beta = {u(rng), u(rng)};
  tri.g_norm = 1.3;
  tri.sigma = 0.7;
  const Matrix t = tri.dense();
  Vector g = Vector::Zero(3);
  g(0) = tri.g_norm;
  // Grid over a box that contains the minimizer, then local polish.
  const double lam = Eigen::SelfAdjointEigenSolver<Matrix>(t).eigenvalues().cwiseAbs().maxCoeff();
  const double box = (lam + std::sqrt(lam * lam + 4 * tri.sigma * g.norm())) / tri.sigma;
  const int steps = 80;
  Vector best = Vector::Zero(3);
  double best_f = 0.0;
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= steps; ++j)
      for (int k = 0; k <= steps; ++k) {
        Vector y(3);
        y << -box + 2 * box * i / steps, -box + 2 * box * j / steps, -box + 2 * box * k / steps;
        const double f = cubic(g, t, tri.sigma, y);
        if (f < best_f) {
          best_f = f;
          best = y;
        }
      }
  double step = 2 * box / steps;
  while (step > 1e-12) {
    bool moved = false;
    for (int axis = 0; axis < 3; ++axis)
      for (double sgn : {-1.0, 1.0}) {
        Vector y = best;
        y(axis) += sgn * step;
        const double f = cubic(g, t, tri.sigma, y);
        if (f < best_f) {
          best_f = f;
          best = y;
          moved = true;
        }
      }
    if (!moved)
      step *= 0.5;
  }
  const ReducedSolution s = solve_reduced(tri);
  EXPECT_NEAR(tri.value(s.y), best_f, 1e-9);
  EXPECT_LE((s.y - best).norm(), 1e-5);
}

TEST(SolveReduced, HardCaseUsesCurvatureDirection) {
  TridiagonalModel tri;
  tri.alpha = {-2.0, 1.0};
  tri.beta = {0.0};
  tri.delta = 0;
  tri.g_norm = 0.0;
  tri.sigma = 0.5;
  const ReducedSolution s = solve_reduced(tri);
  EXPECT_NEAR(s.y.norm(), 2.0 / 0.5, 1e-10);
  EXPECT_NEAR(tri.value(s.y), -2.0 * 16.0 / 2.0 + 0.5 / 3.0 * 64.0, 1e-9);
}

TEST(LanczosSolve, NoGradientPositiveDefiniteReturnsZero) {
  const DenseCase c = random_case(6, 2, 7, false);
  SubproblemModel model = support::make_model(
      c.x, TangentVector::zero(c.x), support::dense_operator(c.x, c.basis, c.m), c.sigma, 0);
  const SubproblemResult res = lanczos_solve(model, {});
  EXPECT_EQ(norm(res.eta), 0.0);
}

TEST(LanczosSolve, CauchyDominanceOnRandomModels) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const DenseCase c = random_case(5 + static_cast<Index>(s % 4), 2, 100 + s, s % 2 == 0);
    const SubproblemResult res = lanczos_solve(c.model(), {});
    EXPECT_LE(res.model_value, cauchy_grid_min(c) + 1e-10) << "seed " << s;
  }
}

TEST(LanczosSolve, FullDimensionMatchesDenseGlobalMinimizerOnPca) {
  std::mt19937_64 rng(8);
  const Matrix z = support::gaussian_matrix(40, 5, rng);
  const PcaProblem p(z, 2);
  const GrassmannPoint x = random_point(5, 2, 9);
  OracleCounter counter;
  const TangentVector g = subsampled_gradient(p, x, SampleBatch::full(40), counter);
  const HessianOperator h = [&](const TangentVector &v) {
    return subsampled_hessian_vec(p, x, v, SampleBatch::full(40), counter);
  };
  const auto basis = support::tangent_basis(x);
  const Matrix m = support::operator_matrix(h, basis);
  for (double sigma : {0.05, 0.5, 5.0}) {
    SubproblemModel model = support::make_model(x, g, h, sigma);
    LanczosOptions o;
    o.early_stop = false;
    const SubproblemResult res = lanczos_solve(model, o);
    const double oracle = support::dense_global_min(support::coords(basis, g), m, sigma, rng);
    EXPECT_LE(std::abs(res.model_value - oracle), 1e-6) << "sigma " << sigma;
  }
}

TEST(ExtremeRitz, ScaledIdentity) {
  const GrassmannPoint x = random_point(7, 3, 10);
  const RitzEstimate e = extreme_ritz(scaled_identity(2.0), x, 10, 11);
  EXPECT_NEAR(e.lambda_min, 2.0, 1e-10);
  EXPECT_NEAR(e.lambda_max, 2.0, 1e-10);
  const RitzEstimate n = extreme_ritz(scaled_identity(-1.0), x, 10, 12);
  EXPECT_NEAR(n.lambda_min, -1.0, 1e-10);
}

TEST(ExtremeRitz, FullLengthMatchesDenseEigensolver) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const DenseCase c = random_case(8, 3, 200 + s, true);
    const RitzEstimate e = extreme_ritz(support::dense_operator(c.x, c.basis, c.m), c.x,
                                        static_cast<int>(c.basis.size()), s);
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(c.m).eigenvalues();
    EXPECT_NEAR(e.lambda_min, ev(0), 1e-6);
    EXPECT_NEAR(e.lambda_max, ev(ev.size() - 1), 1e-6);
    EXPECT_NEAR(norm(e.min_vector), 1.0, 1e-12);
  }
}

TEST(ExtremeRitz, ZeroIterationsRejected) {
  const GrassmannPoint x = random_point(5, 2, 13);
  EXPECT_THROW(extreme_ritz(scaled_identity(1.0), x, 0, 0), UsageError);
}

TEST(Properties, MonotoneInKrylovDimension) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseCase c = random_case(7, 2, 300 + s, true);
    double prev = 0.0;
    for (int l = 1; l <= static_cast<int>(c.basis.size()); ++l) {
      LanczosOptions o;
      o.max_dim = l;
      o.early_stop = false;
      const double v = lanczos_solve(c.model(), o).model_value;
      EXPECT_LE(v, prev + 1e-12) << "seed " << s << " l " << l;
      prev = v;
    }
  }
}

TEST(Properties, CauchyDominanceAtEveryDimension) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const DenseCase c = random_case(6, 2, 400 + s, true);
    const double cauchy = cauchy_grid_min(c);
    for (int l = 1; l <= static_cast<int>(c.basis.size()); ++l) {
      LanczosOptions o;
      o.max_dim = l;
      o.early_stop = false;
      EXPECT_LE(lanczos_solve(c.model(), o).model_value, cauchy + 1e-10);
    }
  }
}

TEST(Properties, ReducedSolutionOptimality) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 50; ++t) {
    TridiagonalModel tri;
    const int l = 1 + t % 8;
    for (int i = 0; i < l; ++i)
      tri.alpha.push_back(u(rng));
    for (int i = 0; i + 1 < l; ++i)
      tri.beta.push_back(std::abs(u(rng)) + 0.01);
    tri.g_norm = std::abs(u(rng)) + 0.01;
    tri.sigma = std::abs(u(rng)) + 0.05;
    const ReducedSolution s = solve_reduced(tri);
    const Matrix t_mat = tri.dense();
    Vector g = Vector::Zero(l);
    g(0) = tri.g_norm;
    const double yn = s.y.norm();
    const Vector fo = g + t_mat * s.y + tri.sigma * yn * s.y;
    EXPECT_LE(fo.norm(), 1e-8 * std::max(1.0, g.norm()));
    const Matrix shifted = t_mat + tri.sigma * yn * Matrix::Identity(l, l);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(shifted).eigenvalues()(0), -1e-8);
  }
}

TEST(Properties, FullDimensionMatchesBruteForce) {
  std::mt19937_64 rng(15);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseCase c = random_case(s % 2 ? 6 : 5, s % 2 ? 2 : 3, 500 + s, true);
    LanczosOptions o;
    o.early_stop = false;
    const SubproblemResult res = lanczos_solve(c.model(), o);
    const double oracle = support::dense_global_min(c.g, c.m, c.sigma, rng);
    EXPECT_LE(std::abs(res.model_value - oracle), 1e-6) << "seed " << s;
  }
}

TEST(Properties, EarlyStopSatisfiesSubmodelGradientTest) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseCase c = random_case(10, 3, 600 + s, true);
    const SubproblemModel model = c.model();
    const SubproblemResult res = lanczos_solve(model, {});
    const double gn = norm(model.model_gradient(res.eta, res.h_eta));
    EXPECT_LE(gn, 0.08 * std::min(1.0, norm(res.eta)) * c.g.norm() * (1 + 1e-9));
  }
}
