#pragma once

#include "isrncr/solver.hpp"

#include <functional>

namespace isrncr {

struct BaselineConfig {
  double step0 = 1.0;       ///< RSD first trial step
  double rsgd_step0 = 0.01; ///< RSGD step at k = 0
  double backtrack = 0.5; ///< RSD step shrink factor
  double armijo_c = 1e-4;
  bool warm_start = false; ///< RSD: first trial min(step0, 2 * previous step)
  BatchSize batch = BatchSize::fraction(100); ///< RSGD
  double decay = 0.01;                        ///< RSGD: rsgd_step0 / (1 + decay k)
  int max_iters = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RsdStep {
  GrassmannPoint x;
  double f = 0.0;
  double grad_norm = 0.0;
  double step = 0.0; ///< accepted step length, 0 when stalled
  bool stalled = false;
};

/// One Armijo-backtracking steepest-descent step on the full gradient,
/// starting from step0 (or min(step0, 2 * prev_step) with warm_start). After
/// 50 halvings without sufficient decrease x is returned unchanged with
/// `stalled` set.
RsdStep rsd_step(const FiniteSumProblem &problem, const GrassmannPoint &x,
                 double f, double prev_step, const BaselineConfig &cfg,
                 OracleCounter &counter);

/// RSGD step size at iteration k.
double rsgd_step_size(const BaselineConfig &cfg, int k);

/// x' = R_x(-beta_k G) with G averaged over a fresh batch.
GrassmannPoint rsgd_step(const FiniteSumProblem &problem, const GrassmannPoint &x,
                         int k, const BaselineConfig &cfg, std::mt19937_64 &rng,
                         OracleCounter &counter, double *grad_norm = nullptr);

/// Called after every baseline iteration; returning true stops the run.
using BaselineObserver =
    std::function<bool(const GrassmannPoint &, const IterationRecord &)>;

/// Runs RSD. Records carry the full cost, full gradient norm and the
/// accepted step length in the sigma column.
SolveResult run_rsd(const FiniteSumProblem &problem, const GrassmannPoint &x0,
                    const BaselineConfig &cfg, const BaselineObserver &observer = {});

/// Runs RSGD. The recorded cost is evaluated for monitoring only and is not
/// counted as oracle work.
SolveResult run_rsgd(const FiniteSumProblem &problem, const GrassmannPoint &x0,
                     const BaselineConfig &cfg, const BaselineObserver &observer = {});

} // namespace isrncr
