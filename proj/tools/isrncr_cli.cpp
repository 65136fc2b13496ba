#include "isrncr/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace isrncr;

namespace {

struct RawOptions {
  std::string task = "pca";
  std::string algo = "isrncr-lanczos";
  std::string sg = "n";
  std::string sh = "n/100";
  std::string rsgd_batch = "n/100";
  bool no_diagnostics = false;
};

void add_common(CLI::App &app, ExperimentSpec &spec, RawOptions &raw) {
  SolverConfig &s = spec.solver;
  BaselineConfig &b = spec.baseline;
  app.add_option("--task", raw.task, "pca | matcomp")->capture_default_str();
  app.add_option("--algo", raw.algo, "isrncr-lanczos | isrncr-cg | rsd | rsgd")
      ->capture_default_str();
  app.add_option("--gen", spec.gen, "p1 (pca) | lowrank (matcomp)")->capture_default_str();
  app.add_option("--input", spec.input, "PCA csv or training triplet file");
  app.add_option("--test-input", spec.test_input, "test triplet file (matcomp)");
  app.add_option("--n", spec.n, "number of samples")->capture_default_str();
  app.add_option("--d", spec.d, "ambient dimension")->capture_default_str();
  app.add_option("--r", spec.r, "subspace dimension")->capture_default_str();
  app.add_option("--cond", spec.cond, "condition number for lowrank")->capture_default_str();
  app.add_option("--seed", spec.seed, "seed for data, start point and sampling")
      ->capture_default_str();
  app.add_option("--data-seed", spec.data_seed, "seed for generated data (default: --seed)");
  app.add_option("--sg", raw.sg, "gradient batch: count, n or n/k")->capture_default_str();
  app.add_option("--sh", raw.sh, "Hessian batch: count, n or n/k")->capture_default_str();
  app.add_option("--eps-g", s.epsilon_g)->capture_default_str();
  app.add_option("--eps-h", s.epsilon_h)->capture_default_str();
  app.add_option("--eps-sigma", s.epsilon_sigma)->capture_default_str();
  app.add_option("--gamma", s.gamma)->capture_default_str();
  app.add_option("--tau", s.tau)->capture_default_str();
  app.add_option("--sigma0", s.sigma0, "0 selects the data heuristic")->capture_default_str();
  app.add_option("--kappa-theta", s.kappa_theta)->capture_default_str();
  app.add_option("--theta", s.theta)->capture_default_str();
  app.add_option("--kappa", s.kappa)->capture_default_str();
  app.add_option("--inner-cap", s.inner_cap, "0 = manifold dimension")->capture_default_str();
  app.add_option("--ritz-iters", s.ritz_iters, "0 = min(dim, 30)")->capture_default_str();
  app.add_option("--max-outer", s.max_outer, "outer iteration cap (baselines too)")
      ->capture_default_str();
  app.add_option("--patience", s.patience, "early-stop K")->capture_default_str();
  app.add_option("--tau-f", s.tau_f, "early-stop relative decrement")->capture_default_str();
  app.add_flag("--no-diagnostics", raw.no_diagnostics, "skip assumption checks");
  app.add_option("--step0", b.step0, "RSD initial trial step")->capture_default_str();
  app.add_option("--rsgd-step0", b.rsgd_step0, "RSGD step at k = 0")->capture_default_str();
  app.add_flag("--rsd-warm-start", b.warm_start, "RSD first trial from twice the previous step");
  app.add_option("--decay", b.decay, "RSGD step decay")->capture_default_str();
  app.add_option("--rsgd-batch", raw.rsgd_batch, "RSGD batch: count, n or n/k")
      ->capture_default_str();
  app.add_option("--out", spec.out, "output directory");
}

void finalize(ExperimentSpec &spec, const RawOptions &raw) {
  spec.task = parse_task(raw.task);
  spec.algo = parse_algorithm(raw.algo);
  if (spec.task == TaskKind::MatComp && spec.gen == "p1")
    spec.gen = "lowrank";
  spec.solver.sg_size = BatchSize::parse(raw.sg);
  spec.solver.sh_size = BatchSize::parse(raw.sh);
  spec.solver.seed = spec.seed;
  spec.solver.diagnostics = !raw.no_diagnostics;
  spec.baseline.batch = BatchSize::parse(raw.rsgd_batch);
  spec.baseline.max_iters = spec.solver.max_outer;
  spec.baseline.seed = spec.seed;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Subsampled Riemannian Newton with cubic regularization on Gr(r, d)"};
  app.require_subcommand(1);

  ExperimentSpec run_spec;
  RawOptions run_raw;
  CLI::App *run = app.add_subcommand("run", "run one experiment");
  add_common(*run, run_spec, run_raw);

  ExperimentSpec diag_spec;
  diag_spec.reps = 5;
  RawOptions diag_raw;
  CLI::App *diag = app.add_subcommand("diag", "assumption-frequency report");
  add_common(*diag, diag_spec, diag_raw);
  diag->add_option("--reps", diag_spec.reps, "repetitions T")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) {
      finalize(run_spec, run_raw);
      const RunOutcome out = run_experiment(run_spec);
      for (const auto &[k, v] : out.summary)
        std::cout << k << '=' << v << '\n';
      return out.result.trace.status == RunStatus::MaxIterations ? 2 : 0;
    }
    finalize(diag_spec, diag_raw);
    const DiagOutcome out = run_diag(diag_spec);
    std::cout << out.table;
    return 0;
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
