#pragma once

// Dense reference computations shared by the test binaries. Nothing here
// calls into the solver code paths being tested; the oracles are built from
// plain Eigen linear algebra.

#include "isrncr/model.hpp"
#include "isrncr/tasks.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace support {

using isrncr::GrassmannPoint;
using isrncr::HessianOperator;
using isrncr::Index;
using isrncr::Matrix;
using isrncr::SubproblemModel;
using isrncr::TangentVector;
using isrncr::Vector;

/// Orthonormal complement of the columns of U.
inline Matrix complement(const Matrix &u) {
  Eigen::HouseholderQR<Matrix> qr(u);
  Matrix q = qr.householderQ() * Matrix::Identity(u.rows(), u.rows());
  return q.rightCols(u.rows() - u.cols());
}

/// Orthonormal basis E_k = U_perp(:, i) e_j^T of the tangent space.
inline std::vector<TangentVector> tangent_basis(const GrassmannPoint &x) {
  const Matrix perp = complement(x.matrix());
  std::vector<TangentVector> basis;
  for (Index j = 0; j < x.r(); ++j)
    for (Index i = 0; i < perp.cols(); ++i) {
      Matrix e = Matrix::Zero(x.d(), x.r());
      e.col(j) = perp.col(i);
      basis.push_back(TangentVector::from_horizontal(x, e));
    }
  return basis;
}

inline Vector coords(const std::vector<TangentVector> &basis, const TangentVector &v) {
  Vector c(static_cast<Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Matrix &b = basis[k].matrix();
    double s = 0.0;
    for (Index j = 0; j < b.cols(); ++j)
      for (Index i = 0; i < b.rows(); ++i)
        s += b(i, j) * v.matrix()(i, j);
    c(static_cast<Index>(k)) = s;
  }
  return c;
}

inline TangentVector from_coords(const GrassmannPoint &x,
                                 const std::vector<TangentVector> &basis,
                                 const Vector &c) {
  Matrix m = Matrix::Zero(x.d(), x.r());
  for (std::size_t k = 0; k < basis.size(); ++k)
    m += c(static_cast<Index>(k)) * basis[k].matrix();
  return TangentVector::from_horizontal(x, m);
}

/// The operator whose matrix in `basis` is M.
inline HessianOperator dense_operator(const GrassmannPoint &x,
                                      const std::vector<TangentVector> &basis,
                                      const Matrix &m) {
  return [x, basis, m](const TangentVector &v) {
    return from_coords(x, basis, m * coords(basis, v));
  };
}

/// Matrix of an operator in `basis`, one probe per column.
inline Matrix operator_matrix(const HessianOperator &h,
                              const std::vector<TangentVector> &basis) {
  const Index n = static_cast<Index>(basis.size());
  Matrix m(n, n);
  for (Index k = 0; k < n; ++k)
    m.col(k) = coords(basis, h(basis[static_cast<std::size_t>(k)]));
  return m;
}

/// Q diag(eigs) Q^T with a random orthogonal Q.
inline Matrix symmetric_with_spectrum(const Vector &eigs, std::mt19937_64 &rng) {
  std::normal_distribution<double> nd;
  const Index n = eigs.size();
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      g(i, j) = nd(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q * eigs.asDiagonal() * q.transpose();
}

inline Vector uniform_vector(Index n, double lo, double hi, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = u(rng);
  return v;
}

inline Vector gaussian_vector(Index n, std::mt19937_64 &rng) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = nd(rng);
  return v;
}

inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = nd(rng);
  return m;
}

inline SubproblemModel make_model(const GrassmannPoint &x, const TangentVector &g,
                                  HessianOperator h, double sigma, int delta = 1,
                                  double f0 = 0.0) {
  return SubproblemModel{x, f0, g, delta, sigma, std::move(h), std::nullopt};
}

/// g^T y + 1/2 y^T M y + sigma/3 ||y||^3.
inline double cubic(const Vector &g, const Matrix &m, double sigma, const Vector &y) {
  const double n = y.norm();
  return g.dot(y) + 0.5 * y.dot(m * y) + sigma / 3.0 * n * n * n;
}

/// Global minimum value of the dense cubic model from many damped-Newton
/// descents started at random points of several radii.
inline double dense_global_min(const Vector &g, const Matrix &m, double sigma,
                               std::mt19937_64 &rng, int restarts = 40) {
  const Index n = g.size();
  const double lam = Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues().cwiseAbs().maxCoeff();
  const double scale = std::max({lam / sigma, std::sqrt(g.norm() / sigma), 1e-3});
  auto fval = [&](const Vector &y) { return cubic(g, m, sigma, y); };
  auto grad = [&](const Vector &y) { return Vector(g + m * y + sigma * y.norm() * y); };
  double best = 0.0;
  for (int s = 0; s < restarts; ++s) {
    Vector y = gaussian_vector(n, rng);
    y *= scale * std::pow(10.0, (s % 5) - 2.0) / std::max(y.norm(), 1e-300) * 0.5;
    double fy = fval(y);
    for (int it = 0; it < 500; ++it) {
      const Vector gr = grad(y);
      if (gr.norm() < 1e-15 * std::max(1.0, g.norm()))
        break;
      const double yn = y.norm();
      Matrix hess = m + sigma * yn * Matrix::Identity(n, n);
      if (yn > 0)
        hess += sigma * y * y.transpose() / yn;
      Eigen::SelfAdjointEigenSolver<Matrix> es(hess);
      Vector dir;
      if (es.eigenvalues()(0) > 1e-12)
        dir = -es.eigenvectors() *
              (es.eigenvalues().cwiseInverse().asDiagonal() *
               (es.eigenvectors().transpose() * gr));
      else
        dir = -gr;
      if (dir.dot(gr) >= 0)
        dir = -gr;
      double t = 1.0;
      bool moved = false;
      for (int b = 0; b < 60; ++b, t *= 0.5) {
        const Vector yt = y + t * dir;
        const double ft = fval(yt);
        if (ft < fy) {
          y = yt;
          fy = ft;
          moved = true;
          break;
        }
      }
      if (!moved)
        break;
    }
    best = std::min(best, fy);
  }
  return best;
}

/// Minimum of f over [lo, hi]: a uniform scan picks the best cell, then
/// golden-section search refines it.
inline double golden_min(const std::function<double(double)> &f, double lo, double hi,
                         int scan = 20000) {
  double best_t = lo, best_f = f(lo);
  const double h = (hi - lo) / scan;
  for (int i = 1; i <= scan; ++i) {
    const double t = lo + h * i;
    const double ft = f(t);
    if (ft < best_f) {
      best_f = ft;
      best_t = t;
    }
  }
  double a = std::max(lo, best_t - h), b = std::min(hi, best_t + h);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  const double t = 0.5 * (a + b);
  return f(t) < best_f ? t : best_t;
}

// ------------------------------------------------------------ PCA oracles

inline Matrix covariance(const Matrix &z) {
  return z.transpose() * z / static_cast<double>(z.rows());
}

inline Matrix projector(const Matrix &u) {
  return Matrix::Identity(u.rows(), u.rows()) - u * u.transpose();
}

/// Riemannian gradient of -(1/n) sum z^T U U^T z.
inline Matrix pca_rgrad(const Matrix &u, const Matrix &z) {
  return projector(u) * (-2.0 * covariance(z) * u);
}

/// Riemannian Hessian of the same cost applied to eta.
inline Matrix pca_rhess(const Matrix &u, const Matrix &z, const Matrix &eta) {
  const Matrix c = covariance(z);
  const Matrix egrad = -2.0 * c * u;
  return projector(u) * (-2.0 * c * eta - eta * (u.transpose() * egrad));
}

inline double pca_cost(const Matrix &u, const Matrix &z) {
  return -(z * u).squaredNorm() / static_cast<double>(z.rows());
}

} // namespace support
