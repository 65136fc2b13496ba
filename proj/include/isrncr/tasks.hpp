#pragma once

#include "isrncr/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace isrncr {

// ---------------------------------------------------------------- PCA

/// f_i(U) = -z_i^T U U^T z_i.
double pca_cost_i(const Matrix &u, const Vector &z);
/// -2 z (z^T U).
Matrix pca_egrad_i(const Matrix &u, const Vector &z);
/// -2 z (z^T eta).
Matrix pca_ehess_i(const Vector &z, const Matrix &eta);

/// PCA on Gr(r, d): f(U) = -(1/n) sum_i z_i^T U U^T z_i.
class PcaProblem : public FiniteSumProblem {
public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  PcaProblem(const Matrix &z, Index r, bool mean_subtracted = false);

  std::size_t num_samples() const override { return static_cast<std::size_t>(z_.rows()); }
  Index ambient_dim() const override { return z_.cols(); }
  Index subspace_dim() const override { return r_; }

  double cost_i(const GrassmannPoint &x, std::size_t i) const override;
  TangentVector rgrad_i(const GrassmannPoint &x, std::size_t i) const override;
  TangentVector rhess_i(const GrassmannPoint &x, const TangentVector &eta,
                        std::size_t i) const override;
  double sigma0_hint() const override;

  const RowMatrix &data() const { return z_; }
  Vector sample(std::size_t i) const { return z_.row(static_cast<Index>(i)).transpose(); }
  bool mean_subtracted() const { return mean_subtracted_; }

private:
  RowMatrix z_;
  Index r_;
  bool mean_subtracted_;
};

/// -sum of the r largest eigenvalues of (1/n) Z^T Z.
double pca_optimal_value(const Matrix &z, Index r);
/// Top-r eigenvector basis of (1/n) Z^T Z.
Matrix pca_optimal_basis(const Matrix &z, Index r);
/// |f(U) - f*|.
double pca_optimality_gap(const Matrix &u, const Matrix &z);

/// N(0,1) entries times a diagonal of Exp(2) draws (mean 2), column means
/// removed.
PcaProblem gen_p1(std::size_t n, Index d, Index r, std::uint64_t seed);
Matrix gen_p1_matrix(std::size_t n, Index d, std::uint64_t seed);

// ------------------------------------------------------ matrix completion

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

/// Observed entries of a d x n matrix.
struct ObservationSet {
  Index d = 0;
  Index n = 0;
  std::vector<Triplet> entries;

  /// Throws UsageError on out-of-range or duplicate (row, col) pairs.
  void validate() const;
};

/// (1/|Omega|) ||P_Omega(U A) - P_Omega(Z)||_F^2 with A solved in closed form.
/// Sample i is column i. The per-sample cost exposed through the
/// FiniteSumProblem interface is n * mc_cost_i, so its mean over columns is
/// the objective above.
class MatrixCompletionProblem : public FiniteSumProblem {
public:
  MatrixCompletionProblem(const ObservationSet &train, const ObservationSet &test,
                          Index r);

  std::size_t num_samples() const override { return static_cast<std::size_t>(n_); }
  Index ambient_dim() const override { return d_; }
  Index subspace_dim() const override { return r_; }

  double cost_i(const GrassmannPoint &x, std::size_t i) const override;
  TangentVector rgrad_i(const GrassmannPoint &x, std::size_t i) const override;
  TangentVector rhess_i(const GrassmannPoint &x, const TangentVector &eta,
                        std::size_t i) const override;
  Matrix rhess_sum(const GrassmannPoint &x, const TangentVector &eta,
                   std::span<const std::size_t> batch) const override;
  double sigma0_hint() const override;

  /// a_i = pinv(U_{Omega_i}) z_{Omega_i} (minimum-norm least squares).
  Vector coefficient(const Matrix &u, std::size_t i) const;
  /// (1/|Omega|) ||(U a_i - z_i)_{Omega_i}||^2.
  double column_cost(const Matrix &u, std::size_t i) const;
  /// (2/|Omega|) project(P_{Omega_i}(U a_i - z_i) a_i^T).
  TangentVector column_rgrad(const GrassmannPoint &x, std::size_t i) const;
  /// Central difference of column_rgrad along eta, projected at x.
  TangentVector column_rhess(const GrassmannPoint &x, const TangentVector &eta,
                             std::size_t i) const;

  std::size_t omega_size() const { return omega_size_; }
  std::size_t test_size() const { return test_size_; }
  /// Columns observed in fewer than r rows.
  const std::vector<std::size_t> &deficient_columns() const { return deficient_; }
  /// Mean of the squared observed test values.
  double test_mean_square() const;

  struct Column {
    std::vector<Index> rows;
    Vector values;
  };
  const Column &train_column(std::size_t i) const { return train_[i]; }
  const Column &test_column(std::size_t i) const { return test_[i]; }

private:
  double fd_step(const GrassmannPoint &x, const TangentVector &eta) const;

  Index d_, n_, r_;
  std::vector<Column> train_;
  std::vector<Column> test_;
  std::size_t omega_size_ = 0;
  std::size_t test_size_ = 0;
  std::vector<std::size_t> deficient_;
};

/// Coefficients for every column, r x n.
Matrix mc_coefficients(const Matrix &u, const MatrixCompletionProblem &p);
/// Sum over columns of column_cost.
double mc_objective(const Matrix &u, const MatrixCompletionProblem &p);
/// (1/|test|) ||P_test(U A) - P_test(Z)||^2 with A from the training entries.
double mc_mse(const Matrix &u, const MatrixCompletionProblem &p);

struct LowRankInstance {
  Matrix z;           ///< d x n ground truth
  Vector singular;    ///< prescribed singular values s_11..s_rr
  ObservationSet train;
  ObservationSet test;
  int omega_attempts = 1;
};

/// Z = Q_A S Q_B^T with s_ii = 10^(3 + (i - r) log10(c) / (r - 1)); training
/// and test sets each of size 4 r (n + d - r), the test set drawn from the
/// complement of the training set.
LowRankInstance gen_lowrank(std::size_t n, Index d, Index r, double cond,
                            std::uint64_t seed);

/// Mean of the squared entries of a dense matrix.
double mean_square(const Matrix &z);

// ------------------------------------------------------------------ files

/// One sample per line, comma separated, no header.
Matrix read_pca_csv(const std::string &path);
void write_pca_csv(const std::string &path, const Matrix &z);

/// "#dims d n" header followed by "row<TAB>col<TAB>value" lines, 0-based.
ObservationSet read_triplets(const std::string &path);
void write_triplets(const std::string &path, const ObservationSet &obs);

} // namespace isrncr
