#pragma once

#include "isrncr/baselines.hpp"
#include "isrncr/tasks.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace isrncr {

enum class TaskKind { Pca, MatComp };
enum class Algorithm { IsrncrLanczos, IsrncrCg, Rsd, Rsgd };

TaskKind parse_task(const std::string &s);
Algorithm parse_algorithm(const std::string &s);
std::string to_string(TaskKind t);
std::string to_string(Algorithm a);

struct ExperimentSpec {
  TaskKind task = TaskKind::Pca;
  std::string gen = "p1"; ///< p1 | lowrank | "" when reading files
  std::string input;
  std::string test_input;
  std::size_t n = 2000;
  Index d = 50;
  Index r = 5;
  double cond = 20.0;
  std::uint64_t seed = 0;
  /// Seed for generated data; unset = `seed`.
  std::optional<std::uint64_t> data_seed;
  Algorithm algo = Algorithm::IsrncrLanczos;
  SolverConfig solver;
  BaselineConfig baseline;
  std::string out;
  int reps = 1;

  void validate() const;
};

/// A problem instance plus whatever reference data its quality metrics need.
struct TaskInstance {
  std::unique_ptr<FiniteSumProblem> problem;
  const PcaProblem *pca = nullptr;
  const MatrixCompletionProblem *mc = nullptr;
  Matrix pca_data;     ///< PCA samples, n x d
  Matrix mc_truth;     ///< dense ground truth when generated, else empty
};

/// Builds the task for a given data seed.
TaskInstance make_task(const ExperimentSpec &spec, std::uint64_t data_seed);

/// Deterministic starting point for a seed.
GrassmannPoint initial_point(Index d, Index r, std::uint64_t seed);

using Summary = std::vector<std::pair<std::string, std::string>>;

struct RunOutcome {
  SolveResult result;
  Summary summary;
};

/// Runs one experiment and, when spec.out is set, writes trace.csv and
/// summary.txt there.
RunOutcome run_experiment(const ExperimentSpec &spec);

/// Counts of outer iterations satisfying each assumption.
struct AssumptionCounts {
  std::size_t iterations = 0;
  std::size_t cauchy = 0;
  std::size_t eigenstep = 0;
  std::size_t submodel_grad = 0;
  std::size_t agm = 0;

  AssumptionCounts &operator+=(const AssumptionCounts &o);
};

AssumptionCounts count_assumptions(const std::vector<IterationRecord> &records);

struct DiagOutcome {
  std::vector<AssumptionCounts> per_rep;
  AssumptionCounts total;
  /// P = sum N / sum M for cauchy, eigenstep, submodel_grad, agm.
  double p_cauchy = 0, p_eigenstep = 0, p_submodel_grad = 0, p_agm = 0;
  std::string table;
};

/// Assumption-frequency experiment over spec.reps seeded repetitions; other
/// inner stopping tests of the CG solver are disabled. Writes diag.csv and
/// summary.txt when spec.out is set.
DiagOutcome run_diag(const ExperimentSpec &spec);

void write_summary(const std::string &path, const Summary &summary);

} // namespace isrncr
