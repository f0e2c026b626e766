// Command implementations behind the sgmix executable: data ingestion,
// synthetic scenario batches, fitting, model search, evaluation and the
// persistence of every artifact under a run manifest.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sgmix::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kParseError = 2,
  kDegenerateFit = 3,
  kSearchFailure = 4,
};

struct CommonOptions {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int jobs = 0;  // 0 resolves to the hardware concurrency
  bool standardize = true;
  bool dry_run = false;
  bool timing = false;  // wall-clock seconds column; off keeps outputs byte-stable
};

struct SimulateOptions {
  CommonOptions common;
  std::string scenario = "diff-edges";
  int p_override = 0;  // p-ge-n only: 100 or 200
};

struct FitOptions {
  CommonOptions common;
  std::string data_path;
  std::string penalty = "zhou";
  int k = 0;                 // fixed component count
  std::string k_range;       // "a..b"; searched jointly with lambda
  double lambda = -1.0;      // < 0 selects lambda by BIC over the grid
  int lambda_grid_size = 100;
  std::string init = "kmeans";  // or "gmm"
  double min_size = 0.0;        // 0 resolves to p + 1
  bool require_k_range = false; // set by the `search` subcommand
};

struct EvaluateOptions {
  CommonOptions common;
  std::string model_path;
  std::string data_path;
  std::string truth_path;  // optional; enables edge-recovery F1
};

struct ReplicateOptions {
  CommonOptions common;
  std::string scenario = "diff-edges";
  int reps = 10;
  std::vector<std::string> strategies;  // default: zhou inverse frob-diag riem-diag
  int lambda_grid_size = 100;
  std::string k_range;  // optional (K, lambda) search per replication
  int p_override = 0;
  std::string init = "kmeans";
  double min_size = 0.0;  // 0: p + 1, except p-ge-n which defaults to 2
};

struct MotivatingOptions {
  CommonOptions common;
  int lambda_grid_size = 50;
};

int cmd_simulate(const SimulateOptions& options);
int cmd_fit(const FitOptions& options);
int cmd_evaluate(const EvaluateOptions& options);
int cmd_replicate(const ReplicateOptions& options);
int cmd_motivating(const MotivatingOptions& options);

}  // namespace sgmix::cli
