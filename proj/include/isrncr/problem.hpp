#pragma once

#include "isrncr/manifold.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace isrncr {

/// Per-sample oracle accounting. The paper-style total counts cost, gradient
/// and Hessian-vector evaluations; `probe_hess_vec` tracks Hessian products
/// spent on eigenvalue estimates and diagnostics, which are reported apart.
struct OracleCounter {
  std::uint64_t cost_evals = 0;
  std::uint64_t grad_evals = 0;
  std::uint64_t hess_vec_evals = 0;
  std::uint64_t probe_hess_vec = 0;

  std::uint64_t total() const { return cost_evals + grad_evals + hess_vec_evals; }
};

/// Sorted, duplicate-free sample indices in [0, n).
class SampleBatch {
public:
  SampleBatch() = default;
  /// Validates and sorts; throws UsageError on duplicates or out-of-range.
  SampleBatch(std::vector<std::size_t> indices, std::size_t n);

  static SampleBatch full(std::size_t n);

  std::span<const std::size_t> indices() const { return idx_; }
  std::size_t size() const { return idx_.size(); }
  bool empty() const { return idx_.empty(); }

private:
  std::vector<std::size_t> idx_;
};

/// f(x) = (1/n) sum_i f_i(x) over Gr(r, d).
///
/// Implementations expose per-sample Riemannian quantities. The batch hooks
/// default to per-sample evaluation with a pairwise reduction in ascending
/// index order; overrides must keep that reduction order.
class FiniteSumProblem {
public:
  virtual ~FiniteSumProblem() = default;

  virtual std::size_t num_samples() const = 0;
  virtual Index ambient_dim() const = 0;
  virtual Index subspace_dim() const = 0;

  virtual double cost_i(const GrassmannPoint &x, std::size_t i) const = 0;
  virtual TangentVector rgrad_i(const GrassmannPoint &x, std::size_t i) const = 0;
  virtual TangentVector rhess_i(const GrassmannPoint &x, const TangentVector &eta,
                                std::size_t i) const = 0;

  /// Sum of rhess_i over the batch (not the mean).
  virtual Matrix rhess_sum(const GrassmannPoint &x, const TangentVector &eta,
                           std::span<const std::size_t> batch) const;

  /// Initial cubic weight suggested by the data; 1 when a problem has none.
  virtual double sigma0_hint() const { return 1.0; }
};

/// Uniform sample of `size` distinct indices from [0, n) via a partial
/// Fisher-Yates shuffle. size == n returns the full set without drawing.
SampleBatch sample_batch(std::size_t n, std::size_t size, std::mt19937_64 &rng);

/// Full cost f(x); adds n to cost_evals.
double full_cost(const FiniteSumProblem &p, const GrassmannPoint &x,
                 OracleCounter &counter);

/// Mean cost over a batch; adds |batch| to cost_evals.
double batch_cost(const FiniteSumProblem &p, const GrassmannPoint &x,
                  const SampleBatch &batch, OracleCounter &counter);

/// G = (1/|S_g|) sum grad f_i(x); adds |batch| to grad_evals.
TangentVector subsampled_gradient(const FiniteSumProblem &p,
                                  const GrassmannPoint &x,
                                  const SampleBatch &batch,
                                  OracleCounter &counter);

/// H[eta] = (1/|S_H|) sum Hess f_i(x)[eta]; adds |batch| to hess_vec_evals.
TangentVector subsampled_hessian_vec(const FiniteSumProblem &p,
                                     const GrassmannPoint &x,
                                     const TangentVector &eta,
                                     const SampleBatch &batch,
                                     OracleCounter &counter);

struct SampleSizeBounds {
  std::size_t sg_min = 1;
  std::size_t sh_min = 1;
};

/// Lower bounds on |S_g| and |S_H| that make the gradient/Hessian error
/// bounds hold with probability 1 - delta. Results are clamped to [1, n]
/// (n == 0 disables the upper clamp). Advisory only.
SampleSizeBounds sample_size_bounds(double k_gmax, double k_hmax, double delta,
                                    double delta_g, double delta_h, Index d,
                                    Index r, double eta_norm,
                                    std::size_t n = 0);

/// Uniform integer in [0, bound) using rejection on the raw 64-bit stream, so
/// sequences are identical across standard library implementations.
std::uint64_t uniform_index(std::mt19937_64 &rng, std::uint64_t bound);

} // namespace isrncr
