#include "isrncr/tasks.hpp"

#include "isrncr/parallel.hpp"
#include "isrncr/solver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace isrncr {

// ---------------------------------------------------------------- PCA

double pca_cost_i(const Matrix &u, const Vector &z) {
  const Vector w = u.transpose() * z;
  return -w.squaredNorm();
}

Matrix pca_egrad_i(const Matrix &u, const Vector &z) {
  return -2.0 * z * (z.transpose() * u);
}

Matrix pca_ehess_i(const Vector &z, const Matrix &eta) {
  return -2.0 * z * (z.transpose() * eta);
}

PcaProblem::PcaProblem(const Matrix &z, Index r, bool mean_subtracted)
    : z_(z), r_(r), mean_subtracted_(mean_subtracted) {
  if (z.rows() < 1)
    throw UsageError("PcaProblem: need at least one sample");
  if (r < 1 || r >= z.cols())
    throw UsageError("PcaProblem: need 1 <= r < d");
}

double PcaProblem::cost_i(const GrassmannPoint &x, std::size_t i) const {
  return pca_cost_i(x.matrix(), sample(i));
}

TangentVector PcaProblem::rgrad_i(const GrassmannPoint &x, std::size_t i) const {
  return egrad_to_rgrad(x, pca_egrad_i(x.matrix(), sample(i)));
}

TangentVector PcaProblem::rhess_i(const GrassmannPoint &x, const TangentVector &eta,
                                  std::size_t i) const {
  const Vector z = sample(i);
  return ehess_to_rhess(x, pca_egrad_i(x.matrix(), z), pca_ehess_i(z, eta.matrix()),
                        eta);
}

double PcaProblem::sigma0_hint() const {
  return sigma0_heuristic(Matrix(z_), z_.cols(), r_ * (z_.cols() - r_));
}

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> covariance_eigen(const Matrix &z) {
  const Matrix cov = (z.transpose() * z) / static_cast<double>(z.rows());
  return Eigen::SelfAdjointEigenSolver<Matrix>(cov);
}

} // namespace

double pca_optimal_value(const Matrix &z, Index r) {
  const auto es = covariance_eigen(z);
  return -es.eigenvalues().tail(r).sum();
}

Matrix pca_optimal_basis(const Matrix &z, Index r) {
  const auto es = covariance_eigen(z);
  return es.eigenvectors().rightCols(r);
}

double pca_optimality_gap(const Matrix &u, const Matrix &z) {
  const double f = -(z * u).squaredNorm() / static_cast<double>(z.rows());
  return std::abs(f - pca_optimal_value(z, u.cols()));
}

Matrix gen_p1_matrix(std::size_t n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 1)
    throw UsageError("gen_p1: n and d must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::exponential_distribution<double> expo(0.5);
  const Index rows = static_cast<Index>(n);
  Matrix a(rows, d);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < d; ++j)
      a(i, j) = normal(rng);
  Vector s(d);
  for (Index j = 0; j < d; ++j)
    s(j) = expo(rng);
  Matrix z = a * s.asDiagonal();
  z.rowwise() -= z.colwise().mean();
  return z;
}

PcaProblem gen_p1(std::size_t n, Index d, Index r, std::uint64_t seed) {
  return PcaProblem(gen_p1_matrix(n, d, seed), r, true);
}

// ------------------------------------------------------ matrix completion

void ObservationSet::validate() const {
  if (d < 1 || n < 1)
    throw UsageError("ObservationSet: dimensions must be positive");
  std::set<std::pair<Index, Index>> seen;
  for (const auto &t : entries) {
    if (t.row < 0 || t.row >= d || t.col < 0 || t.col >= n)
      throw UsageError("ObservationSet: index out of range");
    if (!seen.emplace(t.row, t.col).second)
      throw UsageError("ObservationSet: duplicate entry");
  }
}

namespace {

std::vector<MatrixCompletionProblem::Column> split_columns(const ObservationSet &obs) {
  std::vector<std::vector<std::pair<Index, double>>> cols(static_cast<std::size_t>(obs.n));
  for (const auto &t : obs.entries)
    cols[static_cast<std::size_t>(t.col)].emplace_back(t.row, t.value);
  std::vector<MatrixCompletionProblem::Column> out(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    std::sort(cols[i].begin(), cols[i].end());
    out[i].rows.resize(cols[i].size());
    out[i].values.resize(static_cast<Index>(cols[i].size()));
    for (std::size_t k = 0; k < cols[i].size(); ++k) {
      out[i].rows[k] = cols[i][k].first;
      out[i].values(static_cast<Index>(k)) = cols[i][k].second;
    }
  }
  return out;
}

Matrix restrict_rows(const Matrix &u, const std::vector<Index> &rows) {
  Matrix out(static_cast<Index>(rows.size()), u.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.row(static_cast<Index>(k)) = u.row(rows[k]);
  return out;
}

Vector solve_min_norm(const Matrix &a, const Vector &b) {
  if (a.rows() == 0)
    return Vector::Zero(a.cols());
  return a.completeOrthogonalDecomposition().solve(b);
}

} // namespace

MatrixCompletionProblem::MatrixCompletionProblem(const ObservationSet &train,
                                                 const ObservationSet &test, Index r)
    : d_(train.d), n_(train.n), r_(r) {
  train.validate();
  test.validate();
  if (test.d != train.d || test.n != train.n)
    throw UsageError("MatrixCompletionProblem: train/test dimensions differ");
  if (r < 1 || r >= d_)
    throw UsageError("MatrixCompletionProblem: need 1 <= r < d");
  if (train.entries.empty())
    throw UsageError("MatrixCompletionProblem: no training entries");
  std::set<std::pair<Index, Index>> seen;
  for (const auto &t : train.entries)
    seen.emplace(t.row, t.col);
  for (const auto &t : test.entries)
    if (seen.count({t.row, t.col}))
      throw UsageError("MatrixCompletionProblem: train and test sets overlap");
  train_ = split_columns(train);
  test_ = split_columns(test);
  omega_size_ = train.entries.size();
  test_size_ = test.entries.size();
  for (std::size_t i = 0; i < train_.size(); ++i)
    if (static_cast<Index>(train_[i].rows.size()) < r_)
      deficient_.push_back(i);
}

Vector MatrixCompletionProblem::coefficient(const Matrix &u, std::size_t i) const {
  const Column &c = train_[i];
  return solve_min_norm(restrict_rows(u, c.rows), c.values);
}

double MatrixCompletionProblem::column_cost(const Matrix &u, std::size_t i) const {
  const Column &c = train_[i];
  const Matrix ui = restrict_rows(u, c.rows);
  const Vector res = ui * solve_min_norm(ui, c.values) - c.values;
  return res.squaredNorm() / static_cast<double>(omega_size_);
}

TangentVector MatrixCompletionProblem::column_rgrad(const GrassmannPoint &x,
                                                    std::size_t i) const {
  const Column &c = train_[i];
  const Matrix ui = restrict_rows(x.matrix(), c.rows);
  const Vector a = solve_min_norm(ui, c.values);
  const Vector res = ui * a - c.values;
  Matrix egrad = Matrix::Zero(d_, r_);
  const double scale = 2.0 / static_cast<double>(omega_size_);
  for (std::size_t k = 0; k < c.rows.size(); ++k)
    egrad.row(c.rows[k]) = scale * res(static_cast<Index>(k)) * a.transpose();
  return egrad_to_rgrad(x, egrad);
}

double MatrixCompletionProblem::fd_step(const GrassmannPoint &x,
                                        const TangentVector &eta) const {
  return 1e-6 * std::max(1.0, x.matrix().norm()) / std::max(1e-12, norm(eta));
}

TangentVector MatrixCompletionProblem::column_rhess(const GrassmannPoint &x,
                                                    const TangentVector &eta,
                                                    std::size_t i) const {
  const double h = fd_step(x, eta);
  const GrassmannPoint xp = retract(x, h * eta);
  const GrassmannPoint xm = retract(x, -h * eta);
  const Matrix diff = column_rgrad(xp, i).matrix() - column_rgrad(xm, i).matrix();
  return project(x, diff / (2.0 * h));
}

double MatrixCompletionProblem::cost_i(const GrassmannPoint &x, std::size_t i) const {
  return static_cast<double>(n_) * column_cost(x.matrix(), i);
}

TangentVector MatrixCompletionProblem::rgrad_i(const GrassmannPoint &x,
                                               std::size_t i) const {
  return static_cast<double>(n_) * column_rgrad(x, i);
}

TangentVector MatrixCompletionProblem::rhess_i(const GrassmannPoint &x,
                                               const TangentVector &eta,
                                               std::size_t i) const {
  return static_cast<double>(n_) * column_rhess(x, eta, i);
}

Matrix MatrixCompletionProblem::rhess_sum(const GrassmannPoint &x,
                                          const TangentVector &eta,
                                          std::span<const std::size_t> batch) const {
  // Same per-sample terms as rhess_i, with the two retractions shared.
  const double h = fd_step(x, eta);
  const GrassmannPoint xp = retract(x, h * eta);
  const GrassmannPoint xm = retract(x, -h * eta);
  const double nn = static_cast<double>(n_);
  std::vector<Matrix> terms(batch.size());
  parallel_for(batch.size(), [&](std::size_t k) {
    const Matrix diff =
        column_rgrad(xp, batch[k]).matrix() - column_rgrad(xm, batch[k]).matrix();
    terms[k] = (nn * project(x, diff / (2.0 * h))).matrix();
  });
  return pairwise_sum(terms);
}

double MatrixCompletionProblem::sigma0_hint() const {
  Matrix vals(static_cast<Index>(omega_size_), 1);
  Index k = 0;
  for (const auto &c : train_)
    for (Index j = 0; j < c.values.size(); ++j)
      vals(k++, 0) = c.values(j);
  return sigma0_heuristic(vals, d_, r_ * (d_ - r_));
}

double MatrixCompletionProblem::test_mean_square() const {
  double s = 0.0;
  for (const auto &c : test_)
    s += c.values.squaredNorm();
  return test_size_ ? s / static_cast<double>(test_size_) : 0.0;
}

Matrix mc_coefficients(const Matrix &u, const MatrixCompletionProblem &p) {
  const std::size_t n = p.num_samples();
  Matrix a(u.cols(), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    a.col(static_cast<Index>(i)) = p.coefficient(u, i);
  return a;
}

double mc_objective(const Matrix &u, const MatrixCompletionProblem &p) {
  std::vector<double> terms(p.num_samples());
  for (std::size_t i = 0; i < terms.size(); ++i)
    terms[i] = p.column_cost(u, i);
  return pairwise_sum(terms);
}

double mc_mse(const Matrix &u, const MatrixCompletionProblem &p) {
  if (p.test_size() == 0)
    throw UsageError("mc_mse: empty test set");
  double s = 0.0;
  for (std::size_t i = 0; i < p.num_samples(); ++i) {
    const auto &t = p.test_column(i);
    if (t.rows.empty())
      continue;
    const Vector a = p.coefficient(u, i);
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
      const double e = u.row(t.rows[k]).dot(a) - t.values(static_cast<Index>(k));
      s += e * e;
    }
  }
  return s / static_cast<double>(p.test_size());
}

double mean_square(const Matrix &z) {
  return z.squaredNorm() / static_cast<double>(z.size());
}

LowRankInstance gen_lowrank(std::size_t n, Index d, Index r, double cond,
                            std::uint64_t seed) {
  if (n < 1 || d < 2 || r < 1 || r >= d || static_cast<Index>(n) <= r)
    throw UsageError("gen_lowrank: need 1 <= r < min(d, n)");
  if (!(cond >= 1.0))
    throw UsageError("gen_lowrank: condition number must be >= 1");
  if (r == 1 && cond != 1.0)
    throw UsageError("gen_lowrank: r = 1 supports only cond = 1");

  const Index cols = static_cast<Index>(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto orthonormal = [&](Index rows) {
    Matrix g(rows, r);
    for (Index j = 0; j < r; ++j)
      for (Index i = 0; i < rows; ++i)
        g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    return Matrix(qr.householderQ() * Matrix::Identity(rows, r));
  };
  LowRankInstance inst;
  const Matrix qa = orthonormal(d);
  const Matrix qb = orthonormal(cols);
  inst.singular.resize(r);
  for (Index i = 1; i <= r; ++i) {
    const double expo =
        r == 1 ? 3.0
               : 3.0 + static_cast<double>(i - r) * std::log10(cond) /
                           static_cast<double>(r - 1);
    inst.singular(i - 1) = std::pow(10.0, expo);
  }
  inst.z = qa * inst.singular.asDiagonal() * qb.transpose();

  const std::size_t total = n * static_cast<std::size_t>(d);
  const std::size_t omega =
      4 * static_cast<std::size_t>(r) * (n + static_cast<std::size_t>(d - r));
  if (omega >= total)
    throw UsageError("gen_lowrank: too few entries for the requested sample size");

  auto to_triplet = [&](std::size_t e) {
    const Index row = static_cast<Index>(e % static_cast<std::size_t>(d));
    const Index col = static_cast<Index>(e / static_cast<std::size_t>(d));
    return Triplet{row, col, inst.z(row, col)};
  };

  SampleBatch train_idx;
  for (int attempt = 1; attempt <= 100; ++attempt) {
    inst.omega_attempts = attempt;
    train_idx = sample_batch(total, omega, rng);
    std::vector<Index> count(static_cast<std::size_t>(n), 0);
    for (std::size_t e : train_idx.indices())
      ++count[e / static_cast<std::size_t>(d)];
    if (*std::min_element(count.begin(), count.end()) >= r)
      break;
  }

  inst.train.d = inst.test.d = d;
  inst.train.n = inst.test.n = cols;
  std::vector<char> used(total, 0);
  for (std::size_t e : train_idx.indices()) {
    used[e] = 1;
    inst.train.entries.push_back(to_triplet(e));
  }
  std::vector<std::size_t> rest;
  rest.reserve(total - omega);
  for (std::size_t e = 0; e < total; ++e)
    if (!used[e])
      rest.push_back(e);
  const std::size_t test_count = std::min(omega, rest.size());
  const SampleBatch pick = sample_batch(rest.size(), test_count, rng);
  for (std::size_t k : pick.indices())
    inst.test.entries.push_back(to_triplet(rest[k]));
  return inst;
}

// ------------------------------------------------------------------ files

Matrix read_pca_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot read '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos)
      continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos)
          throw std::invalid_argument(cell);
      } catch (const std::exception &) {
        throw UsageError(path + ":" + std::to_string(lineno) + ": bad number '" +
                         cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw UsageError(path + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw UsageError("'" + path + "' contains no samples");
  Matrix z(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      z(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return z;
}

void write_pca_csv(const std::string &path, const Matrix &z) {
  std::ofstream out(path);
  if (!out)
    throw UsageError("cannot write '" + path + "'");
  out << std::setprecision(17);
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index j = 0; j < z.cols(); ++j)
      out << (j ? "," : "") << z(i, j);
    out << '\n';
  }
}

ObservationSet read_triplets(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw UsageError("cannot read '" + path + "'");
  ObservationSet obs;
  bool have_dims = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::istringstream ss(line);
    if (line[0] == '#') {
      std::string tag;
      ss >> tag;
      if (tag == "#dims") {
        if (!(ss >> obs.d >> obs.n))
          throw UsageError(path + ":" + std::to_string(lineno) + ": bad #dims header");
        have_dims = true;
      }
      continue;
    }
    if (!have_dims)
      throw UsageError(path + ": missing '#dims d n' header");
    Triplet t;
    if (!(ss >> t.row >> t.col >> t.value))
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected row col value");
    obs.entries.push_back(t);
  }
  if (!have_dims)
    throw UsageError(path + ": missing '#dims d n' header");
  obs.validate();
  return obs;
}

void write_triplets(const std::string &path, const ObservationSet &obs) {
  std::ofstream out(path);
  if (!out)
    throw UsageError("cannot write '" + path + "'");
  out << "#dims " << obs.d << ' ' << obs.n << '\n' << std::setprecision(17);
  for (const auto &t : obs.entries)
    out << t.row << '\t' << t.col << '\t' << t.value << '\n';
}

} // namespace isrncr
