#pragma once

#include "isrncr/lanczos.hpp"
#include "isrncr/problem.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace isrncr {

/// Batch size given either as an absolute count or as n / divisor.
struct BatchSize {
  enum class Kind { Absolute, Fraction };
  Kind kind = Kind::Fraction;
  std::size_t value = 1; ///< count, or divisor of n

  static BatchSize absolute(std::size_t count) { return {Kind::Absolute, count}; }
  static BatchSize fraction(std::size_t divisor) { return {Kind::Fraction, divisor}; }
  /// Accepts "n", "n/100" or a plain integer.
  static BatchSize parse(const std::string &text);

  /// Concrete size in [1, n].
  std::size_t resolve(std::size_t n) const;
  std::string to_string() const;
};

enum class Subsolver { Lanczos, Cg };

struct SolverConfig {
  double epsilon_sigma = 1e-18;
  double gamma = 2.0;
  double tau = 0.1;
  double sigma0 = 0.0; ///< 0 selects the problem's data-driven heuristic
  double epsilon_g = 1e-6;
  double epsilon_h = 1e-3;
  double kappa_theta = 0.08;
  double theta = 0.1;
  double kappa = 0.1;
  BatchSize sg_size = BatchSize::fraction(1);
  BatchSize sh_size = BatchSize::fraction(100);
  int max_outer = 100;
  int patience = 5;
  double tau_f = 1e-10;
  Subsolver subsolver = Subsolver::Lanczos;
  int inner_cap = 0;  ///< 0 = manifold dimension
  int ritz_iters = 0; ///< 0 = min(manifold dimension, 30)
  std::uint64_t seed = 0;
  bool diagnostics = true;
  bool cg_extra_stops = true;

  /// Throws UsageError on out-of-range parameters.
  void validate() const;
};

struct AssumptionReport {
  bool evaluated = false;
  bool cauchy_ok = false;
  bool eigenstep_ok = false;
  bool submodel_grad_ok = false;
  bool agm1_ok = false;
  bool agm2_ok = false;
  double a_k = 0.0;
  double b_k = 0.0;
  double c_k = 0.0;
  double lambda_min_est = std::numeric_limits<double>::quiet_NaN();
  double lambda_max_est = std::numeric_limits<double>::quiet_NaN();

  bool agm_ok() const { return agm1_ok && agm2_ok; }
};

struct IterationRecord {
  int k = 0;
  double f_value = 0.0;   ///< full cost after the accept/reject decision
  double grad_norm = 0.0; ///< ||G_k|| at the iterate the model was built on
  double sigma = 0.0;     ///< sigma_k used by the model
  double rho = std::numeric_limits<double>::quiet_NaN();
  bool accepted = false;
  int inner_iters = 0;
  std::uint64_t oracle_calls = 0;
  double wall_ms = 0.0;
  AssumptionReport diag;
};

enum class RunStatus { Converged, EarlyStopped, MaxIterations };

std::string to_string(RunStatus s);

struct RunTrace {
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::MaxIterations;
  double initial_f = 0.0;
  double sigma0 = 0.0;
  std::size_t sg = 0;
  std::size_t sh = 0;
  OracleCounter counter;
};

struct SolveResult {
  GrassmannPoint x;
  RunTrace trace;
};

/// Samples S_g and S_H, forms G_k and the frozen Hessian operator over S_H.
/// Sets delta = 0 when ||G_k|| <= epsilon_g.
SubproblemModel build_model(const FiniteSumProblem &problem,
                            const GrassmannPoint &x, double f0, double sigma,
                            std::size_t sg, std::size_t sh,
                            double epsilon_g, std::mt19937_64 &rng,
                            OracleCounter &counter);

/// Agreement ratio (f0 - f1)/(m0 - m1); NaN when the model decrease is
/// below 1e-15 max(1, |m0|).
double rho(double f0, double f1, double m0, double m1);

/// rho >= tau: max(sigma / gamma, epsilon_sigma); otherwise gamma sigma.
/// A NaN ratio counts as unsuccessful.
double sigma_update(double sigma, double rho_val, const SolverConfig &cfg);

bool optimality_check(double grad_norm, double lambda_min_est,
                      const SolverConfig &cfg);

/// (mean |s|)^2 sqrt(manifold_dim d / std(s)) with the population standard
/// deviation. Returns 1 when the data have zero variance.
double sigma0_heuristic(const Matrix &data, Index d, Index manifold_dim);

struct HistoryEntry {
  double f_before = 0.0;
  double f_after = 0.0;
  double grad_norm = 0.0;
  bool accepted = false;
};

/// True when, over the accepted iterations, the gradient norm failed to
/// decrease K consecutive times or the relative decrement stayed below tau_f
/// K consecutive times. Rejected iterations leave both streaks unchanged.
bool early_stop(std::span<const HistoryEntry> history, const SolverConfig &cfg);

inline constexpr double kEigenstepNu = 0.9;

/// Evaluates the subproblem assumptions for the step eta_star.
AssumptionReport check_assumptions(const SubproblemModel &model,
                                   const SubproblemResult &step,
                                   const RitzEstimate &ritz,
                                   double kappa_theta);

SolveResult solve(const FiniteSumProblem &problem, const GrassmannPoint &x0,
                  const SolverConfig &cfg);

/// Replays the sigma column: returns the number of consecutive record pairs
/// whose sigma does not follow the update rule exactly.
std::size_t sigma_replay_mismatches(std::span<const IterationRecord> records,
                                    const SolverConfig &cfg);

} // namespace isrncr
