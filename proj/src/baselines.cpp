#include "isrncr/baselines.hpp"

#include <chrono>

namespace isrncr {

namespace {

constexpr int kMaxHalvings = 50;

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

} // namespace

void BaselineConfig::validate() const {
  if (!(step0 > 0) || !(rsgd_step0 > 0))
    throw UsageError("initial steps must be positive");
  if (!(backtrack > 0 && backtrack < 1))
    throw UsageError("backtrack ratio must lie in (0, 1)");
  if (!(armijo_c > 0 && armijo_c < 1))
    throw UsageError("armijo constant must lie in (0, 1)");
  if (!(decay >= 0))
    throw UsageError("decay must be nonnegative");
  if (max_iters < 1)
    throw UsageError("max_iters must be >= 1");
}

RsdStep rsd_step(const FiniteSumProblem &problem, const GrassmannPoint &x, double f,
                 double prev_step, const BaselineConfig &cfg, OracleCounter &counter) {
  const TangentVector g =
      subsampled_gradient(problem, x, SampleBatch::full(problem.num_samples()), counter);
  const double gn = norm(g);
  RsdStep out{x, f, gn, 0.0, false};
  if (gn == 0.0)
    return out;
  double step =
      cfg.warm_start && prev_step > 0.0 ? std::min(cfg.step0, 2.0 * prev_step) : cfg.step0;
  for (int h = 0; h < kMaxHalvings; ++h, step *= cfg.backtrack) {
    GrassmannPoint trial = x;
    try {
      trial = retract(x, -step * g);
    } catch (const DegenerateStepError &) {
      continue;
    }
    const double ft = full_cost(problem, trial, counter);
    if (ft <= f - cfg.armijo_c * step * gn * gn) {
      out.x = std::move(trial);
      out.f = ft;
      out.step = step;
      return out;
    }
  }
  out.stalled = true;
  return out;
}

double rsgd_step_size(const BaselineConfig &cfg, int k) {
  return cfg.rsgd_step0 / (1.0 + cfg.decay * static_cast<double>(k));
}

GrassmannPoint rsgd_step(const FiniteSumProblem &problem, const GrassmannPoint &x,
                         int k, const BaselineConfig &cfg, std::mt19937_64 &rng,
                         OracleCounter &counter, double *grad_norm) {
  const std::size_t n = problem.num_samples();
  const SampleBatch batch = sample_batch(n, cfg.batch.resolve(n), rng);
  const TangentVector g = subsampled_gradient(problem, x, batch, counter);
  if (grad_norm)
    *grad_norm = norm(g);
  return retract(x, -rsgd_step_size(cfg, k) * g);
}

SolveResult run_rsd(const FiniteSumProblem &problem, const GrassmannPoint &x0,
                    const BaselineConfig &cfg, const BaselineObserver &observer) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  RunTrace trace;
  OracleCounter &counter = trace.counter;
  GrassmannPoint x = x0;
  double f = full_cost(problem, x, counter);
  trace.initial_f = f;
  double prev = 0.0;
  trace.status = RunStatus::MaxIterations;
  for (int k = 0; k < cfg.max_iters; ++k) {
    RsdStep s = rsd_step(problem, x, f, prev, cfg, counter);
    IterationRecord rec;
    rec.k = k;
    rec.grad_norm = s.grad_norm;
    rec.sigma = s.step;
    rec.accepted = !s.stalled && s.step > 0.0;
    x = s.x;
    f = s.f;
    prev = s.step;
    rec.f_value = f;
    rec.oracle_calls = counter.total();
    rec.wall_ms = elapsed_ms(start);
    trace.records.push_back(rec);
    if (s.grad_norm == 0.0 || s.stalled) {
      trace.status = s.stalled ? RunStatus::EarlyStopped : RunStatus::Converged;
      break;
    }
    if (observer && observer(x, rec)) {
      trace.status = RunStatus::EarlyStopped;
      break;
    }
  }
  return {x, std::move(trace)};
}

SolveResult run_rsgd(const FiniteSumProblem &problem, const GrassmannPoint &x0,
                     const BaselineConfig &cfg, const BaselineObserver &observer) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  RunTrace trace;
  OracleCounter monitor;
  GrassmannPoint x = x0;
  trace.initial_f = full_cost(problem, x, monitor);
  trace.sg = cfg.batch.resolve(problem.num_samples());
  std::mt19937_64 rng(cfg.seed);
  trace.status = RunStatus::MaxIterations;
  for (int k = 0; k < cfg.max_iters; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.sigma = rsgd_step_size(cfg, k);
    x = rsgd_step(problem, x, k, cfg, rng, trace.counter, &rec.grad_norm);
    rec.accepted = true;
    rec.f_value = full_cost(problem, x, monitor);
    rec.oracle_calls = trace.counter.total();
    rec.wall_ms = elapsed_ms(start);
    trace.records.push_back(rec);
    if (observer && observer(x, rec)) {
      trace.status = RunStatus::EarlyStopped;
      break;
    }
  }
  return {x, std::move(trace)};
}

} // namespace isrncr
