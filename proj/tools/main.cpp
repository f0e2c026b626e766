// sgmix command line: penalized model-based clustering with group-wise
// sparse precision matrices.
#include <CLI11.hpp>

#include "sgmix/cli.hpp"

namespace {

void add_common(CLI::App* app, sgmix::cli::CommonOptions& common, bool with_standardize = true) {
  app->add_option("--seed", common.seed, "Master RNG seed");
  app->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
  app->add_option("--jobs", common.jobs, "Worker count (0 = all processors)");
  app->add_flag("--dry-run", common.dry_run, "Print the resolved configuration and exit");
  app->add_flag("--timing", common.timing,
                "Report wall-clock seconds (makes outputs run-dependent)");
  if (with_standardize) {
    app->add_flag("--no-standardize{false}", common.standardize,
                  "Skip column standardization");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based clustering via Gaussian mixtures with group-wise "
               "weighted graphical-lasso penalties"};
  app.require_subcommand(1);

  sgmix::cli::SimulateOptions simulate;
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic scenario dataset");
  sim->add_option("--scenario", simulate.scenario,
                  "equal-edges | diff-edges | highdim-diff-edges | zero-mean-diff-edges | p-ge-n")
      ->capture_default_str();
  sim->add_option("--p", simulate.p_override, "Dimension override (p-ge-n: 100 or 200)");
  add_common(sim, simulate.common, false);

  sgmix::cli::FitOptions fit_options;
  CLI::App* fit = app.add_subcommand("fit", "Fit a penalized mixture to a CSV dataset");
  fit->add_option("data", fit_options.data_path, "Input CSV (header row, numeric columns, "
                  "optional integer `label` column used for evaluation only)")
      ->required();
  fit->add_option("--penalty", fit_options.penalty,
                  "zhou | inverse | frob-diag | riem-diag | frob-id | riem-id")
      ->capture_default_str();
  fit->add_option("--k", fit_options.k, "Number of mixture components");
  fit->add_option("--k-range", fit_options.k_range, "Search K over a..b");
  fit->add_option("--lambda", fit_options.lambda,
                  "Fixed penalty value; omit to select by BIC over the grid");
  fit->add_option("--lambda-grid", fit_options.lambda_grid_size, "Grid size for lambda")
      ->capture_default_str();
  fit->add_option("--init", fit_options.init, "Initial partition method: kmeans | gmm")
      ->capture_default_str();
  fit->add_option("--min-size", fit_options.min_size,
                  "Minimum effective component size (default p+1)");
  add_common(fit, fit_options.common);

  sgmix::cli::FitOptions search_options;
  search_options.require_k_range = true;
  CLI::App* search = app.add_subcommand("search", "Search (K, lambda) by BIC");
  search->add_option("data", search_options.data_path, "Input CSV")->required();
  search->add_option("--penalty", search_options.penalty,
                     "zhou | inverse | frob-diag | riem-diag | frob-id | riem-id")
      ->capture_default_str();
  search->add_option("--k-range", search_options.k_range, "Search K over a..b")->required();
  search->add_option("--lambda-grid", search_options.lambda_grid_size, "Grid size for lambda")
      ->capture_default_str();
  search->add_option("--init", search_options.init, "Initial partition method: kmeans | gmm")
      ->capture_default_str();
  search->add_option("--min-size", search_options.min_size,
                     "Minimum effective component size (default p+1)");
  add_common(search, search_options.common);

  sgmix::cli::EvaluateOptions evaluate;
  CLI::App* eval = app.add_subcommand("evaluate", "Score a saved fit against labeled data");
  eval->add_option("--model", evaluate.model_path, "fit.json produced by fit/search")->required();
  eval->add_option("--data", evaluate.data_path, "Labeled CSV")->required();
  eval->add_option("--truth", evaluate.truth_path,
                   "Ground-truth JSON (enables edge-recovery F1)");
  add_common(eval, evaluate.common, false);

  sgmix::cli::ReplicateOptions replicate;
  CLI::App* rep = app.add_subcommand("replicate", "Replicated synthetic-scenario batches");
  rep->add_option("--scenario", replicate.scenario, "Scenario name")->capture_default_str();
  rep->add_option("--reps", replicate.reps, "Replication count B")->capture_default_str();
  rep->add_option("--strategies", replicate.strategies,
                  "Penalty strategies to compare (default: zhou inverse frob-diag riem-diag)");
  rep->add_option("--lambda-grid", replicate.lambda_grid_size, "Grid size for lambda")
      ->capture_default_str();
  rep->add_option("--k-range", replicate.k_range, "Search K over a..b (default: true K)");
  rep->add_option("--p", replicate.p_override, "Dimension override (p-ge-n: 100 or 200)");
  rep->add_option("--init", replicate.init, "Initial partition method: kmeans | gmm")
      ->capture_default_str();
  rep->add_option("--min-size", replicate.min_size,
                  "Minimum effective component size (default p+1; p-ge-n defaults to 2)");
  add_common(rep, replicate.common);

  sgmix::cli::MotivatingOptions motivating;
  CLI::App* mot = app.add_subcommand(
      "motivating", "Two-component sparse-vs-dense trade-off table under the common penalty");
  mot->add_option("--lambda-grid", motivating.lambda_grid_size, "Grid size for lambda")
      ->capture_default_str();
  add_common(mot, motivating.common);

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) return sgmix::cli::cmd_simulate(simulate);
  if (fit->parsed()) return sgmix::cli::cmd_fit(fit_options);
  if (search->parsed()) return sgmix::cli::cmd_fit(search_options);
  if (eval->parsed()) return sgmix::cli::cmd_evaluate(evaluate);
  if (rep->parsed()) return sgmix::cli::cmd_replicate(replicate);
  if (mot->parsed()) return sgmix::cli::cmd_motivating(motivating);
  return sgmix::cli::kFailure;
}
