#include "isrncr/problem.hpp"

#include "isrncr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace isrncr {

SampleBatch::SampleBatch(std::vector<std::size_t> indices, std::size_t n)
    : idx_(std::move(indices)) {
  std::sort(idx_.begin(), idx_.end());
  if (std::adjacent_find(idx_.begin(), idx_.end()) != idx_.end())
    throw UsageError("SampleBatch: duplicate indices");
  if (!idx_.empty() && idx_.back() >= n)
    throw UsageError("SampleBatch: index out of range");
}

SampleBatch SampleBatch::full(std::size_t n) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  SampleBatch b;
  b.idx_ = std::move(all);
  return b;
}

std::uint64_t uniform_index(std::mt19937_64 &rng, std::uint64_t bound) {
  if (bound == 0)
    throw UsageError("uniform_index: empty range");
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

SampleBatch sample_batch(std::size_t n, std::size_t size,
                         std::mt19937_64 &rng) {
  if (size < 1 || size > n)
    throw UsageError("sample_batch: size must satisfy 1 <= size <= n");
  if (size == n)
    return SampleBatch::full(n);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t k = 0; k < size; ++k) {
    const std::size_t j = k + uniform_index(rng, n - k);
    std::swap(perm[k], perm[j]);
  }
  perm.resize(size);
  return SampleBatch(std::move(perm), n);
}

Matrix FiniteSumProblem::rhess_sum(const GrassmannPoint &x,
                                   const TangentVector &eta,
                                   std::span<const std::size_t> batch) const {
  std::vector<Matrix> terms(batch.size());
  parallel_for(batch.size(), [&](std::size_t k) {
    terms[k] = rhess_i(x, eta, batch[k]).matrix();
  });
  return pairwise_sum(terms);
}

double batch_cost(const FiniteSumProblem &p, const GrassmannPoint &x,
                  const SampleBatch &batch, OracleCounter &counter) {
  if (batch.empty())
    throw UsageError("batch_cost: empty batch");
  const auto idx = batch.indices();
  std::vector<double> terms(idx.size());
  parallel_for(idx.size(), [&](std::size_t k) { terms[k] = p.cost_i(x, idx[k]); });
  counter.cost_evals += idx.size();
  return pairwise_sum(terms) / static_cast<double>(idx.size());
}

double full_cost(const FiniteSumProblem &p, const GrassmannPoint &x,
                 OracleCounter &counter) {
  return batch_cost(p, x, SampleBatch::full(p.num_samples()), counter);
}

TangentVector subsampled_gradient(const FiniteSumProblem &p,
                                  const GrassmannPoint &x,
                                  const SampleBatch &batch,
                                  OracleCounter &counter) {
  if (batch.empty())
    throw UsageError("subsampled_gradient: empty batch");
  const auto idx = batch.indices();
  std::vector<Matrix> terms(idx.size());
  parallel_for(idx.size(),
               [&](std::size_t k) { terms[k] = p.rgrad_i(x, idx[k]).matrix(); });
  counter.grad_evals += idx.size();
  Matrix mean = pairwise_sum(terms);
  mean /= static_cast<double>(idx.size());
  return TangentVector::from_horizontal(x, std::move(mean));
}

TangentVector subsampled_hessian_vec(const FiniteSumProblem &p,
                                     const GrassmannPoint &x,
                                     const TangentVector &eta,
                                     const SampleBatch &batch,
                                     OracleCounter &counter) {
  if (batch.empty())
    throw UsageError("subsampled_hessian_vec: empty batch");
  if (!eta.base().same_as(x))
    throw UsageError("subsampled_hessian_vec: eta is not tangent at x");
  Matrix mean = p.rhess_sum(x, eta, batch.indices());
  counter.hess_vec_evals += batch.size();
  mean /= static_cast<double>(batch.size());
  return TangentVector::from_horizontal(x, std::move(mean));
}

SampleSizeBounds sample_size_bounds(double k_gmax, double k_hmax, double delta,
                                    double delta_g, double delta_h, Index d,
                                    Index r, double eta_norm, std::size_t n) {
  if (!(delta > 0.0 && delta < 1.0))
    throw UsageError("sample_size_bounds: delta must lie in (0, 1)");
  if (!(k_gmax > 0 && k_hmax > 0 && delta_g > 0 && delta_h > 0 &&
        eta_norm > 0 && d > 0 && r > 0))
    throw UsageError("sample_size_bounds: inputs must be positive");
  const double log_term = std::log(static_cast<double>(d + r) / delta);
  const double sg =
      8.0 * (k_gmax * k_gmax + k_gmax) * log_term / (delta_g * delta_g);
  const double sh = 8.0 * (k_hmax * k_hmax + k_hmax / eta_norm) * log_term /
                    (delta_h * delta_h);
  auto clamp = [n](double v) {
    double c = std::ceil(v);
    if (!(c >= 1.0))
      c = 1.0;
    if (n > 0 && c > static_cast<double>(n))
      c = static_cast<double>(n);
    return static_cast<std::size_t>(c);
  };
  return {clamp(sg), clamp(sh)};
}

} // namespace isrncr
