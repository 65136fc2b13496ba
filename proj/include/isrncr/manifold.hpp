#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

namespace isrncr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Caller passed arguments that violate an operation's contract
/// (mismatched dimensions, tangent vectors at different points, ...).
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// U + eta lost rank, so the retraction has no well-defined polar factor.
class DegenerateStepError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tolerance used for the orthonormality and horizontality invariants.
inline constexpr double kInvariantTol = 1e-10;

/// A point on Gr(r, d), stored as a d x r matrix with orthonormal columns.
///
/// The matrix is shared and immutable, so copies are cheap and tangent
/// vectors can keep a handle to the point they are attached to.
class GrassmannPoint {
public:
  /// Wraps a matrix that must already have orthonormal columns.
  static GrassmannPoint from_orthonormal(Matrix u);

  /// Orthonormalizes the columns of an arbitrary full-rank d x r matrix.
  static GrassmannPoint orthonormalize(const Matrix &m);

  const Matrix &matrix() const { return *u_; }
  Index d() const { return u_->rows(); }
  Index r() const { return u_->cols(); }
  /// Manifold dimension r(d - r).
  Index dim() const { return r() * (d() - r()); }

  bool same_as(const GrassmannPoint &other) const;

  /// ||U^T U - I||_F.
  double orthonormality_error() const;

private:
  explicit GrassmannPoint(std::shared_ptr<const Matrix> u) : u_(std::move(u)) {}
  std::shared_ptr<const Matrix> u_;
};

/// A horizontal d x r matrix (U^T eta = 0) attached to a base point.
class TangentVector {
public:
  /// Zero vector 0_x.
  static TangentVector zero(const GrassmannPoint &base);

  /// Wraps a matrix the caller guarantees is horizontal at `base`.
  /// No projection is applied; use project() for arbitrary matrices.
  static TangentVector from_horizontal(const GrassmannPoint &base, Matrix m);

  const Matrix &matrix() const { return m_; }
  const GrassmannPoint &base() const { return base_; }

  /// ||U^T eta||_F.
  double horizontality_error() const;

  TangentVector &operator+=(const TangentVector &o);
  TangentVector &operator-=(const TangentVector &o);
  TangentVector &operator*=(double s);

  /// this += s * o, without a temporary.
  TangentVector &axpy(double s, const TangentVector &o);

private:
  TangentVector(GrassmannPoint base, Matrix m)
      : base_(std::move(base)), m_(std::move(m)) {}
  GrassmannPoint base_;
  Matrix m_;
};

TangentVector operator+(TangentVector a, const TangentVector &b);
TangentVector operator-(TangentVector a, const TangentVector &b);
TangentVector operator*(double s, TangentVector a);
TangentVector operator-(TangentVector a);

/// Canonical metric tr(a^T b). Throws UsageError for different base points.
double inner(const TangentVector &a, const TangentVector &b);
double norm(const TangentVector &a);

/// (I - U U^T) v.
TangentVector project(const GrassmannPoint &x, const Matrix &v);

/// Polar factor of U + eta computed through the thin SVD.
GrassmannPoint retract(const GrassmannPoint &x, const TangentVector &eta);

/// Projection transport of v to the point R_x(eta).
TangentVector transport(const GrassmannPoint &x, const TangentVector &eta,
                        const TangentVector &v);

/// Projection of v (tangent anywhere) onto the tangent space at `to`.
TangentVector transport_to(const GrassmannPoint &to, const TangentVector &v);

TangentVector egrad_to_rgrad(const GrassmannPoint &x, const Matrix &egrad);

/// project(ehess_eta - eta (U^T egrad)).
TangentVector ehess_to_rhess(const GrassmannPoint &x, const Matrix &egrad,
                             const Matrix &ehess_eta, const TangentVector &eta);

GrassmannPoint random_point(Index d, Index r, std::uint64_t seed);

/// Unit-norm random tangent vector at x.
TangentVector random_tangent(const GrassmannPoint &x, std::uint64_t seed);

} // namespace isrncr
