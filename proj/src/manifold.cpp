#include "isrncr/manifold.hpp"

#include <random>

namespace isrncr {

namespace {

void check_dims(const GrassmannPoint &x, const Matrix &v, const char *what) {
  if (v.rows() != x.d() || v.cols() != x.r()) {
    throw UsageError(std::string(what) + ": expected " +
                     std::to_string(x.d()) + "x" + std::to_string(x.r()) +
                     " matrix, got " + std::to_string(v.rows()) + "x" +
                     std::to_string(v.cols()));
  }
}

void check_same_base(const TangentVector &a, const TangentVector &b,
                     const char *what) {
  if (!a.base().same_as(b.base())) {
    throw UsageError(std::string(what) +
                     ": tangent vectors belong to different base points");
  }
}

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      m(i, j) = normal(rng);
  return m;
}

} // namespace

GrassmannPoint GrassmannPoint::from_orthonormal(Matrix u) {
  if (u.cols() < 1 || u.cols() >= u.rows())
    throw UsageError("GrassmannPoint requires 1 <= r < d");
  GrassmannPoint p(std::make_shared<const Matrix>(std::move(u)));
  if (p.orthonormality_error() > kInvariantTol)
    throw UsageError("GrassmannPoint: columns are not orthonormal");
  return p;
}

GrassmannPoint GrassmannPoint::orthonormalize(const Matrix &m) {
  if (m.cols() < 1 || m.cols() >= m.rows())
    throw UsageError("GrassmannPoint requires 1 <= r < d");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector &s = svd.singularValues();
  if (s(s.size() - 1) <= 1e-12 * std::max(1.0, s(0)))
    throw DegenerateStepError("orthonormalize: matrix is rank deficient");
  return GrassmannPoint(std::make_shared<const Matrix>(
      svd.matrixU() * svd.matrixV().transpose()));
}

bool GrassmannPoint::same_as(const GrassmannPoint &other) const {
  if (u_ == other.u_)
    return true;
  return u_->rows() == other.u_->rows() && u_->cols() == other.u_->cols() &&
         *u_ == *other.u_;
}

double GrassmannPoint::orthonormality_error() const {
  return (u_->transpose() * *u_ - Matrix::Identity(r(), r())).norm();
}

TangentVector TangentVector::zero(const GrassmannPoint &base) {
  return TangentVector(base, Matrix::Zero(base.d(), base.r()));
}

TangentVector TangentVector::from_horizontal(const GrassmannPoint &base,
                                             Matrix m) {
  check_dims(base, m, "TangentVector");
  return TangentVector(base, std::move(m));
}

double TangentVector::horizontality_error() const {
  return (base_.matrix().transpose() * m_).norm();
}

TangentVector &TangentVector::operator+=(const TangentVector &o) {
  check_same_base(*this, o, "operator+");
  m_ += o.m_;
  return *this;
}

TangentVector &TangentVector::operator-=(const TangentVector &o) {
  check_same_base(*this, o, "operator-");
  m_ -= o.m_;
  return *this;
}

TangentVector &TangentVector::operator*=(double s) {
  m_ *= s;
  return *this;
}

TangentVector &TangentVector::axpy(double s, const TangentVector &o) {
  check_same_base(*this, o, "axpy");
  m_.noalias() += s * o.m_;
  return *this;
}

TangentVector operator+(TangentVector a, const TangentVector &b) {
  return a += b;
}
TangentVector operator-(TangentVector a, const TangentVector &b) {
  return a -= b;
}
TangentVector operator*(double s, TangentVector a) { return a *= s; }
TangentVector operator-(TangentVector a) { return a *= -1.0; }

double inner(const TangentVector &a, const TangentVector &b) {
  check_same_base(a, b, "inner");
  return (a.matrix().array() * b.matrix().array()).sum();
}

double norm(const TangentVector &a) { return std::sqrt(inner(a, a)); }

TangentVector project(const GrassmannPoint &x, const Matrix &v) {
  check_dims(x, v, "project");
  const Matrix &u = x.matrix();
  Matrix out = v;
  out.noalias() -= u * (u.transpose() * v);
  return TangentVector::from_horizontal(x, std::move(out));
}

GrassmannPoint retract(const GrassmannPoint &x, const TangentVector &eta) {
  if (!eta.base().same_as(x))
    throw UsageError("retract: eta is not tangent at x");
  const Matrix m = x.matrix() + eta.matrix();
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector &s = svd.singularValues();
  if (s(s.size() - 1) <= 1e-12 * std::max(1.0, s(0)))
    throw DegenerateStepError("retract: U + eta is rank deficient");
  // U_bar V_bar^T is the polar factor, independent of singular vector signs.
  return GrassmannPoint::from_orthonormal(svd.matrixU() *
                                          svd.matrixV().transpose());
}

TangentVector transport(const GrassmannPoint &x, const TangentVector &eta,
                        const TangentVector &v) {
  if (!v.base().same_as(x))
    throw UsageError("transport: v is not tangent at x");
  return project(retract(x, eta), v.matrix());
}

TangentVector transport_to(const GrassmannPoint &to, const TangentVector &v) {
  return project(to, v.matrix());
}

TangentVector egrad_to_rgrad(const GrassmannPoint &x, const Matrix &egrad) {
  return project(x, egrad);
}

TangentVector ehess_to_rhess(const GrassmannPoint &x, const Matrix &egrad,
                             const Matrix &ehess_eta,
                             const TangentVector &eta) {
  check_dims(x, egrad, "ehess_to_rhess");
  check_dims(x, ehess_eta, "ehess_to_rhess");
  if (!eta.base().same_as(x))
    throw UsageError("ehess_to_rhess: eta is not tangent at x");
  Matrix corrected = ehess_eta;
  corrected.noalias() -= eta.matrix() * (x.matrix().transpose() * egrad);
  return project(x, corrected);
}

GrassmannPoint random_point(Index d, Index r, std::uint64_t seed) {
  if (r < 1 || r >= d)
    throw UsageError("random_point requires 1 <= r < d");
  std::mt19937_64 rng(seed);
  Matrix g = gaussian_matrix(d, r, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, r);
  return GrassmannPoint::from_orthonormal(std::move(q));
}

TangentVector random_tangent(const GrassmannPoint &x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TangentVector t = project(x, gaussian_matrix(x.d(), x.r(), rng));
  // Re-project once: a single pass leaves O(eps * ||g||) vertical residue.
  t = project(x, t.matrix());
  t *= 1.0 / norm(t);
  return t;
}

} // namespace isrncr
