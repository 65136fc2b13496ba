#include "isrncr/experiment.hpp"

#include "isrncr/trace.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace isrncr {

namespace {

constexpr std::uint64_t kStartSalt = 0x9d2c5680a5b1e3f7ULL;

void add(Summary &s, const std::string &k, const std::string &v) { s.emplace_back(k, v); }
void add(Summary &s, const std::string &k, double v) { s.emplace_back(k, format_double(v)); }
template <class I>
  requires std::is_integral_v<I>
void add(Summary &s, const std::string &k, I v) {
  s.emplace_back(k, std::to_string(v));
}

void prepare_dir(const std::string &out) {
  if (!out.empty())
    std::filesystem::create_directories(out);
}

std::string join(const std::string &dir, const char *file) {
  return (std::filesystem::path(dir) / file).string();
}

double ratio(std::size_t num, std::size_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

} // namespace

TaskKind parse_task(const std::string &s) {
  if (s == "pca")
    return TaskKind::Pca;
  if (s == "matcomp")
    return TaskKind::MatComp;
  throw UsageError("unknown task '" + s + "' (expected pca or matcomp)");
}

Algorithm parse_algorithm(const std::string &s) {
  if (s == "isrncr-lanczos")
    return Algorithm::IsrncrLanczos;
  if (s == "isrncr-cg")
    return Algorithm::IsrncrCg;
  if (s == "rsd")
    return Algorithm::Rsd;
  if (s == "rsgd")
    return Algorithm::Rsgd;
  throw UsageError("unknown algorithm '" + s + "'");
}

std::string to_string(TaskKind t) { return t == TaskKind::Pca ? "pca" : "matcomp"; }

std::string to_string(Algorithm a) {
  switch (a) {
  case Algorithm::IsrncrLanczos:
    return "isrncr-lanczos";
  case Algorithm::IsrncrCg:
    return "isrncr-cg";
  case Algorithm::Rsd:
    return "rsd";
  case Algorithm::Rsgd:
    return "rsgd";
  }
  return "unknown";
}

void ExperimentSpec::validate() const {
  if (input.empty()) {
    if (task == TaskKind::Pca && gen != "p1")
      throw UsageError("pca supports generator 'p1' or --input");
    if (task == TaskKind::MatComp && gen != "lowrank")
      throw UsageError("matcomp supports generator 'lowrank' or --input");
    if (n < 1 || d < 2 || r < 1 || r >= d)
      throw UsageError("need n >= 1 and 1 <= r < d");
  }
  if (!test_input.empty() && task != TaskKind::MatComp)
    throw UsageError("--test-input applies to matcomp only");
  if (reps < 1)
    throw UsageError("reps must be >= 1");
  solver.validate();
  baseline.validate();
}

TaskInstance make_task(const ExperimentSpec &spec, std::uint64_t data_seed) {
  TaskInstance t;
  if (spec.task == TaskKind::Pca) {
    const bool generated = spec.input.empty();
    t.pca_data = generated ? gen_p1_matrix(spec.n, spec.d, data_seed)
                           : read_pca_csv(spec.input);
    auto p = std::make_unique<PcaProblem>(t.pca_data, spec.r, generated);
    t.pca = p.get();
    t.problem = std::move(p);
    return t;
  }
  if (spec.input.empty()) {
    LowRankInstance inst = gen_lowrank(spec.n, spec.d, spec.r, spec.cond, data_seed);
    auto p = std::make_unique<MatrixCompletionProblem>(inst.train, inst.test, spec.r);
    t.mc_truth = std::move(inst.z);
    t.mc = p.get();
    t.problem = std::move(p);
    return t;
  }
  const ObservationSet train = read_triplets(spec.input);
  ObservationSet test;
  if (spec.test_input.empty()) {
    test.d = train.d;
    test.n = train.n;
  } else {
    test = read_triplets(spec.test_input);
  }
  auto p = std::make_unique<MatrixCompletionProblem>(train, test, spec.r);
  t.mc = p.get();
  t.problem = std::move(p);
  return t;
}

GrassmannPoint initial_point(Index d, Index r, std::uint64_t seed) {
  return random_point(d, r, seed ^ kStartSalt);
}

namespace {

SolveResult run_algorithm(const ExperimentSpec &spec, const FiniteSumProblem &p,
                          const GrassmannPoint &x0, const SolverConfig &cfg) {
  switch (spec.algo) {
  case Algorithm::IsrncrLanczos: {
    SolverConfig c = cfg;
    c.subsolver = Subsolver::Lanczos;
    return solve(p, x0, c);
  }
  case Algorithm::IsrncrCg: {
    SolverConfig c = cfg;
    c.subsolver = Subsolver::Cg;
    return solve(p, x0, c);
  }
  case Algorithm::Rsd:
    return run_rsd(p, x0, spec.baseline);
  case Algorithm::Rsgd: {
    BaselineConfig b = spec.baseline;
    b.seed = spec.seed;
    return run_rsgd(p, x0, b);
  }
  }
  throw UsageError("unknown algorithm");
}

void add_quality(Summary &s, const TaskInstance &t, const GrassmannPoint &x) {
  if (t.pca) {
    add(s, "optimal_f", pca_optimal_value(t.pca_data, x.r()));
    add(s, "optimality_gap", pca_optimality_gap(x.matrix(), t.pca_data));
    return;
  }
  const auto &mc = *t.mc;
  add(s, "omega_size", mc.omega_size());
  add(s, "test_size", mc.test_size());
  add(s, "deficient_columns", mc.deficient_columns().size());
  if (mc.test_size() == 0)
    return;
  const double mse = mc_mse(x.matrix(), mc);
  const double ref = t.mc_truth.size() ? mean_square(t.mc_truth) : mc.test_mean_square();
  add(s, "test_mse", mse);
  add(s, "mean_square_ref", ref);
  add(s, "relative_test_mse", ref > 0.0 ? mse / ref : mse);
}

} // namespace

RunOutcome run_experiment(const ExperimentSpec &spec) {
  spec.validate();
  const TaskInstance task = make_task(spec, spec.data_seed.value_or(spec.seed));
  const FiniteSumProblem &p = *task.problem;
  const GrassmannPoint x0 = initial_point(p.ambient_dim(), p.subspace_dim(), spec.seed);

  RunOutcome out{run_algorithm(spec, p, x0, spec.solver), {}};
  const RunTrace &tr = out.result.trace;
  Summary &s = out.summary;
  add(s, "task", to_string(spec.task));
  add(s, "algo", to_string(spec.algo));
  add(s, "n", p.num_samples());
  add(s, "d", p.ambient_dim());
  add(s, "r", p.subspace_dim());
  add(s, "seed", spec.seed);
  add(s, "data_seed", spec.data_seed.value_or(spec.seed));
  add(s, "status", to_string(tr.status));
  add(s, "iterations", tr.records.size());
  std::size_t accepted = 0;
  for (const auto &r : tr.records)
    accepted += r.accepted ? 1 : 0;
  add(s, "accepted", accepted);
  add(s, "initial_f", tr.initial_f);
  add(s, "final_f", tr.records.empty() ? tr.initial_f : tr.records.back().f_value);
  add(s, "final_grad_norm", tr.records.empty() ? 0.0 : tr.records.back().grad_norm);
  add(s, "oracle_calls", tr.counter.total());
  add(s, "cost_evals", tr.counter.cost_evals);
  add(s, "grad_evals", tr.counter.grad_evals);
  add(s, "hess_vec_evals", tr.counter.hess_vec_evals);
  add(s, "probe_hess_vec", tr.counter.probe_hess_vec);
  if (spec.algo == Algorithm::IsrncrLanczos || spec.algo == Algorithm::IsrncrCg) {
    add(s, "sg", tr.sg);
    add(s, "sh", tr.sh);
    add(s, "sigma0", tr.sigma0);
  }
  add_quality(s, task, out.result.x);
  add(s, "wall_ms", tr.records.empty() ? 0.0 : tr.records.back().wall_ms);

  if (!spec.out.empty()) {
    prepare_dir(spec.out);
    write_trace_csv(join(spec.out, "trace.csv"), tr.records);
    write_summary(join(spec.out, "summary.txt"), s);
  }
  return out;
}

AssumptionCounts &AssumptionCounts::operator+=(const AssumptionCounts &o) {
  iterations += o.iterations;
  cauchy += o.cauchy;
  eigenstep += o.eigenstep;
  submodel_grad += o.submodel_grad;
  agm += o.agm;
  return *this;
}

AssumptionCounts count_assumptions(const std::vector<IterationRecord> &records) {
  AssumptionCounts c;
  for (const auto &r : records) {
    if (!r.diag.evaluated)
      continue;
    ++c.iterations;
    c.cauchy += r.diag.cauchy_ok;
    c.eigenstep += r.diag.eigenstep_ok;
    c.submodel_grad += r.diag.submodel_grad_ok;
    c.agm += r.diag.agm_ok();
  }
  return c;
}

DiagOutcome run_diag(const ExperimentSpec &spec) {
  spec.validate();
  if (spec.algo != Algorithm::IsrncrLanczos && spec.algo != Algorithm::IsrncrCg)
    throw UsageError("diag requires isrncr-lanczos or isrncr-cg");
  SolverConfig cfg = spec.solver;
  cfg.diagnostics = true;
  cfg.cg_extra_stops = false;

  DiagOutcome out;
  for (int rep = 0; rep < spec.reps; ++rep) {
    const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(rep);
    const TaskInstance task =
        make_task(spec, spec.data_seed ? *spec.data_seed + static_cast<std::uint64_t>(rep) : seed);
    const FiniteSumProblem &p = *task.problem;
    SolverConfig c = cfg;
    c.seed = seed;
    const GrassmannPoint x0 = initial_point(p.ambient_dim(), p.subspace_dim(), seed);
    const SolveResult res = run_algorithm(spec, p, x0, c);
    out.per_rep.push_back(count_assumptions(res.trace.records));
    out.total += out.per_rep.back();
  }
  const auto &t = out.total;
  out.p_cauchy = ratio(t.cauchy, t.iterations);
  out.p_eigenstep = ratio(t.eigenstep, t.iterations);
  out.p_submodel_grad = ratio(t.submodel_grad, t.iterations);
  out.p_agm = ratio(t.agm, t.iterations);

  std::ostringstream tab;
  tab << std::left << std::setw(34) << "assumption" << std::right << std::setw(8) << "N"
      << std::setw(8) << "M" << std::setw(10) << "P" << '\n';
  auto row = [&](const char *name, std::size_t nsat, double pv) {
    tab << std::left << std::setw(34) << name << std::right << std::setw(8) << nsat
        << std::setw(8) << t.iterations << std::setw(10) << std::fixed
        << std::setprecision(4) << pv << '\n';
  };
  row("cauchy condition", t.cauchy, out.p_cauchy);
  row("eigenstep condition", t.eigenstep, out.p_eigenstep);
  row("sub-model gradient norm", t.submodel_grad, out.p_submodel_grad);
  row("approximate global minimizer", t.agm, out.p_agm);
  out.table = tab.str();

  if (!spec.out.empty()) {
    prepare_dir(spec.out);
    std::ofstream csv(join(spec.out, "diag.csv"));
    if (!csv)
      throw UsageError("cannot write diag.csv in '" + spec.out + "'");
    csv << "rep,outer_iters,cauchy_ok,eigenstep_ok,submodel_grad_ok,agm_ok\n";
    for (std::size_t i = 0; i < out.per_rep.size(); ++i) {
      const auto &c = out.per_rep[i];
      csv << i << ',' << c.iterations << ',' << c.cauchy << ',' << c.eigenstep << ','
          << c.submodel_grad << ',' << c.agm << '\n';
    }
    csv << "P," << t.iterations << ',' << format_double(out.p_cauchy) << ','
        << format_double(out.p_eigenstep) << ',' << format_double(out.p_submodel_grad)
        << ',' << format_double(out.p_agm) << '\n';
    Summary s;
    add(s, "task", to_string(spec.task));
    add(s, "algo", to_string(spec.algo));
    add(s, "reps", spec.reps);
    add(s, "outer_iters", t.iterations);
    add(s, "p_cauchy", out.p_cauchy);
    add(s, "p_eigenstep", out.p_eigenstep);
    add(s, "p_submodel_grad", out.p_submodel_grad);
    add(s, "p_agm", out.p_agm);
    write_summary(join(spec.out, "summary.txt"), s);
  }
  return out;
}

void write_summary(const std::string &path, const Summary &summary) {
  std::ofstream out(path);
  if (!out)
    throw UsageError("cannot write '" + path + "'");
  for (const auto &[k, v] : summary)
    out << k << '=' << v << '\n';
}

} // namespace isrncr
