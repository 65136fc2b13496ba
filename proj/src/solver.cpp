#include "isrncr/solver.hpp"

#include "isrncr/cg.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>

namespace isrncr {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, int k, std::uint64_t salt) {
  return splitmix64(splitmix64(seed ^ salt) + static_cast<std::uint64_t>(k));
}

HessianOperator batch_operator(const FiniteSumProblem &problem,
                               const GrassmannPoint &x, SampleBatch batch,
                               std::uint64_t *sink) {
  return [&problem, x, batch = std::move(batch), sink](const TangentVector &eta) {
    OracleCounter local;
    TangentVector out = subsampled_hessian_vec(problem, x, eta, batch, local);
    *sink += local.hess_vec_evals;
    return out;
  };
}

struct BestAlong {
  double decrement = 0.0;
  double step_norm = 0.0;
};

/// Minimum of the model along +-p from the origin.
BestAlong best_along(const SubproblemModel &model, const TangentVector &p) {
  BestAlong best;
  const double pn = norm(p);
  if (!(pn > 0.0))
    return best;
  const TangentVector hp = model.hess(p);
  const TangentVector zero = TangentVector::zero(model.x);
  for (double s : {-1.0, 1.0}) {
    auto lc = LineCoefficients::from_model(model, zero, s * p, s * hp);
    const double alpha = line_search(lc);
    const double dv = lc.delta_value(alpha);
    if (dv < best.decrement) {
      best.decrement = dv;
      best.step_norm = alpha * pn;
    }
  }
  return best;
}

bool no_worse(double d_star, double d_ref) {
  const double tol = 1e-8 * std::max(std::abs(d_star), std::abs(d_ref));
  return d_star <= d_ref + tol;
}

} // namespace

BatchSize BatchSize::parse(const std::string &text) {
  auto parse_uint = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0)
      throw UsageError("invalid batch size '" + text + "'");
    return v;
  };
  if (text == "n")
    return fraction(1);
  if (text.rfind("n/", 0) == 0)
    return fraction(parse_uint(std::string_view(text).substr(2)));
  return absolute(parse_uint(text));
}

std::size_t BatchSize::resolve(std::size_t n) const {
  if (n == 0)
    throw UsageError("BatchSize: empty problem");
  if (kind == Kind::Fraction)
    return std::max<std::size_t>(1, n / value);
  if (value > n)
    throw UsageError("BatchSize: batch larger than the sample count");
  return value;
}

std::string BatchSize::to_string() const {
  if (kind == Kind::Absolute)
    return std::to_string(value);
  return value == 1 ? "n" : "n/" + std::to_string(value);
}

void SolverConfig::validate() const {
  auto require = [](bool ok, const char *msg) {
    if (!ok)
      throw UsageError(msg);
  };
  require(epsilon_sigma > 0 && epsilon_sigma < 1, "epsilon_sigma must lie in (0, 1)");
  require(gamma > 1, "gamma must exceed 1");
  require(tau > 0 && tau < 1, "tau must lie in (0, 1)");
  require(sigma0 >= 0, "sigma0 must be nonnegative");
  require(epsilon_g > 0 && epsilon_g < 1, "epsilon_g must lie in (0, 1)");
  require(epsilon_h > 0 && epsilon_h < 1, "epsilon_h must lie in (0, 1)");
  require(kappa_theta > 0 && kappa_theta <= 1.0 / 6.0, "kappa_theta must lie in (0, 1/6]");
  require(theta > 0, "theta must be positive");
  require(kappa > 0, "kappa must be positive");
  require(max_outer >= 1, "max_outer must be >= 1");
  require(patience >= 1, "patience must be >= 1");
  require(tau_f > 0, "tau_f must be positive");
  require(inner_cap >= 0, "inner_cap must be >= 0");
  require(ritz_iters >= 0, "ritz_iters must be >= 0");
  require(sg_size.value >= 1 && sh_size.value >= 1, "batch sizes must be positive");
}

std::string to_string(RunStatus s) {
  switch (s) {
  case RunStatus::Converged:
    return "converged";
  case RunStatus::EarlyStopped:
    return "early_stopped";
  case RunStatus::MaxIterations:
    return "max_iterations";
  }
  return "unknown";
}

SubproblemModel build_model(const FiniteSumProblem &problem,
                            const GrassmannPoint &x, double f0, double sigma,
                            std::size_t sg, std::size_t sh, double epsilon_g,
                            std::mt19937_64 &rng, OracleCounter &counter) {
  const std::size_t n = problem.num_samples();
  const SampleBatch g_batch = sample_batch(n, sg, rng);
  TangentVector g = subsampled_gradient(problem, x, g_batch, counter);
  SampleBatch h_batch = sample_batch(n, sh, rng);
  const int delta = norm(g) <= epsilon_g ? 0 : 1;
  return SubproblemModel{x, f0, std::move(g), delta, sigma,
                         batch_operator(problem, x, std::move(h_batch),
                                        &counter.hess_vec_evals),
                         std::nullopt};
}

double rho(double f0, double f1, double m0, double m1) {
  const double dm = m0 - m1;
  if (!(dm > 1e-15 * std::max(1.0, std::abs(m0))))
    return std::numeric_limits<double>::quiet_NaN();
  return (f0 - f1) / dm;
}

double sigma_update(double sigma, double rho_val, const SolverConfig &cfg) {
  if (rho_val >= cfg.tau)
    return std::max(sigma / cfg.gamma, cfg.epsilon_sigma);
  return cfg.gamma * sigma;
}

bool optimality_check(double grad_norm, double lambda_min_est,
                      const SolverConfig &cfg) {
  return grad_norm <= cfg.epsilon_g && lambda_min_est >= -cfg.epsilon_h;
}

double sigma0_heuristic(const Matrix &data, Index d, Index manifold_dim) {
  if (data.size() < 2)
    throw UsageError("sigma0_heuristic: need at least two entries");
  const double count = static_cast<double>(data.size());
  const double mean_abs = data.cwiseAbs().sum() / count;
  const double mu = data.sum() / count;
  const double var = (data.array() - mu).square().sum() / count;
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) {
    std::cerr << "warning: sigma0 heuristic found zero variance; using 1\n";
    return 1.0;
  }
  return mean_abs * mean_abs *
         std::sqrt(static_cast<double>(manifold_dim) * static_cast<double>(d) / sd);
}

bool early_stop(std::span<const HistoryEntry> history, const SolverConfig &cfg) {
  int grad_fail = 0;
  int f_stall = 0;
  bool have_prev = false;
  double prev_grad = 0.0;
  for (const auto &e : history) {
    if (!e.accepted)
      continue;
    if (have_prev)
      grad_fail = e.grad_norm >= prev_grad ? grad_fail + 1 : 0;
    prev_grad = e.grad_norm;
    have_prev = true;
    const double denom = std::abs(e.f_before);
    const double rel = denom < 1e-300 ? 0.0 : (e.f_before - e.f_after) / denom;
    f_stall = rel <= cfg.tau_f ? f_stall + 1 : 0;
    if (grad_fail >= cfg.patience || f_stall >= cfg.patience)
      return true;
  }
  return false;
}

AssumptionReport check_assumptions(const SubproblemModel &model,
                                   const SubproblemResult &step,
                                   const RitzEstimate &ritz,
                                   double kappa_theta) {
  AssumptionReport rep;
  rep.evaluated = true;
  rep.lambda_min_est = ritz.lambda_min;
  rep.lambda_max_est = ritz.lambda_max;

  const TangentVector &eta = step.eta;
  const TangentVector &h_eta = step.h_eta;
  const double g_eff = model.effective_gradient_norm();
  const double en = norm(eta);
  const double t1 = model.delta ? inner(model.gradient, eta) : 0.0;
  const double t2 = inner(eta, h_eta);
  const double t3 = model.sigma * en * en * en;
  const double d_star = t1 + 0.5 * t2 + t3 / 3.0;

  const BestAlong cauchy = best_along(model, model.gradient);
  rep.cauchy_ok = no_worse(d_star, cauchy.decrement);

  const double lmin = ritz.lambda_min;
  double eig_norm = 0.0;
  if (lmin < 0.0) {
    const BestAlong eig = best_along(model, ritz.min_vector);
    rep.eigenstep_ok = no_worse(d_star, eig.decrement);
    eig_norm = eig.step_norm;
  } else {
    rep.eigenstep_ok = true;
  }

  const double mg = norm(model.model_gradient(eta, h_eta));
  const double slack = 1e-8 * (g_eff + norm(h_eta) + model.sigma * en * en);
  rep.submodel_grad_ok = mg <= kappa_theta * std::min(1.0, en) * g_eff + slack;

  rep.agm1_ok = std::abs(t1 + t2 + t3) <=
                1e-8 * (std::abs(t1) + std::abs(t2) + std::abs(t3));
  rep.agm2_ok = t2 + t3 >= -1e-8 * (std::abs(t2) + t3);

  const double h_norm = std::max(std::abs(ritz.lambda_min), std::abs(ritz.lambda_max));
  const double sigma = model.sigma;
  if (g_eff > 0.0) {
    const double root = std::sqrt(g_eff / sigma);
    rep.a_k = g_eff / (2.0 * std::sqrt(3.0)) *
              (h_norm > 0.0 ? std::min(g_eff / h_norm, root) : root);
    rep.b_k = cauchy.step_norm * cauchy.step_norm / 12.0 *
              (std::sqrt(h_norm * h_norm + 4.0 * sigma * g_eff) - h_norm);
  }
  if (lmin < 0.0) {
    const double nl = kEigenstepNu * std::abs(lmin);
    rep.c_k = nl / 6.0 * std::max(eig_norm * eig_norm, nl * nl / (sigma * sigma));
  }
  return rep;
}

SolveResult solve(const FiniteSumProblem &problem, const GrassmannPoint &x0,
                  const SolverConfig &cfg) {
  cfg.validate();
  if (x0.d() != problem.ambient_dim() || x0.r() != problem.subspace_dim())
    throw UsageError("solve: starting point has the wrong shape");

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const std::size_t n = problem.num_samples();
  const int dim = static_cast<int>(x0.dim());
  const int ritz_iters = cfg.ritz_iters > 0 ? cfg.ritz_iters : std::min(dim, 30);

  RunTrace trace;
  trace.sg = cfg.sg_size.resolve(n);
  trace.sh = cfg.sh_size.resolve(n);
  OracleCounter &counter = trace.counter;

  GrassmannPoint x = x0;
  double f = full_cost(problem, x, counter);
  trace.initial_f = f;
  double sigma = cfg.sigma0 > 0.0 ? cfg.sigma0 : problem.sigma0_hint();
  trace.sigma0 = sigma;

  std::mt19937_64 rng(cfg.seed);
  std::vector<HistoryEntry> history;

  for (int k = 0; k < cfg.max_outer; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.sigma = sigma;

    SubproblemModel model = build_model(problem, x, f, sigma, trace.sg, trace.sh,
                                        cfg.epsilon_g, rng, counter);
    rec.grad_norm = norm(model.gradient);

    // Hessian products for eigenvalue estimates and diagnostics are booked
    // separately from the algorithm's own work.
    SubproblemModel probe = model;
    {
      const HessianOperator base = model.hess;
      std::uint64_t *sink = &counter.probe_hess_vec;
      std::uint64_t *main = &counter.hess_vec_evals;
      probe.hess = [base, sink, main](const TangentVector &v) {
        const std::uint64_t before = *main;
        TangentVector out = base(v);
        *sink += *main - before;
        *main = before;
        return out;
      };
    }
    const std::uint64_t ritz_seed = stream_seed(cfg.seed, k, 0x5249545aULL);

    std::optional<RitzEstimate> ritz;
    if (!model.delta) {
      ritz = extreme_ritz(probe.hess, x, ritz_iters, ritz_seed);
      if (optimality_check(rec.grad_norm, ritz->lambda_min, cfg)) {
        rec.f_value = f;
        rec.oracle_calls = counter.total();
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        trace.records.push_back(rec);
        trace.status = RunStatus::Converged;
        return {x, std::move(trace)};
      }
      if (ritz->lambda_min < 0.0)
        model.curvature_dir = ritz->min_vector;
    }

    SubproblemResult step = [&] {
      if (cfg.subsolver == Subsolver::Lanczos) {
        LanczosOptions lo;
        lo.max_dim = cfg.inner_cap;
        lo.kappa_theta = cfg.kappa_theta;
        lo.seed = stream_seed(cfg.seed, k, 0x4c414e43ULL);
        return lanczos_solve(model, lo);
      }
      CgOptions co;
      co.max_iters = cfg.inner_cap;
      co.kappa = cfg.kappa;
      co.theta = cfg.theta;
      co.kappa_theta = cfg.kappa_theta;
      co.extra_stops = cfg.cg_extra_stops;
      return cg_solve(model, co);
    }();
    rec.inner_iters = step.inner_iters;

    double f_trial = f;
    std::optional<GrassmannPoint> x_trial;
    try {
      x_trial = retract(x, step.eta);
      f_trial = full_cost(problem, *x_trial, counter);
      rec.rho = rho(f, f_trial, f, step.model_value);
    } catch (const DegenerateStepError &) {
      rec.rho = std::numeric_limits<double>::quiet_NaN();
    }
    rec.accepted = rec.rho >= cfg.tau;

    if (cfg.diagnostics) {
      if (!ritz)
        ritz = extreme_ritz(probe.hess, x, ritz_iters, ritz_seed);
      probe.curvature_dir = model.curvature_dir;
      rec.diag = check_assumptions(probe, step, *ritz, cfg.kappa_theta);
    }

    const double f_before = f;
    if (rec.accepted) {
      x = *x_trial;
      f = f_trial;
    }
    history.push_back({f_before, f, rec.grad_norm, rec.accepted});
    sigma = sigma_update(sigma, rec.rho, cfg);

    rec.f_value = f;
    rec.oracle_calls = counter.total();
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    trace.records.push_back(rec);

    if (early_stop(history, cfg)) {
      trace.status = RunStatus::EarlyStopped;
      return {x, std::move(trace)};
    }
  }
  trace.status = RunStatus::MaxIterations;
  return {x, std::move(trace)};
}

std::size_t sigma_replay_mismatches(std::span<const IterationRecord> records,
                                    const SolverConfig &cfg) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i + 1 < records.size(); ++i)
    if (records[i + 1].sigma != sigma_update(records[i].sigma, records[i].rho, cfg))
      ++bad;
  for (const auto &r : records)
    if (r.sigma < cfg.epsilon_sigma)
      ++bad;
  return bad;
}

} // namespace isrncr
