// File formats: numeric CSV with header (optional integer `label` column),
// versioned model JSON, ground-truth JSON and run manifests. Doubles are
// serialized with shortest round-trip representations so reloaded artifacts
// reproduce values bitwise.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgmix/mixture.hpp"
#include "sgmix/simulate.hpp"
#include "sgmix/spd.hpp"

namespace sgmix {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Matrix x;
  std::vector<std::string> columns;          // names of the numeric columns
  std::optional<std::vector<int>> labels;    // from the `label` column, if present
};

// Lines starting with '#' are skipped. Errors name the offending line (and
// column for missing or non-numeric cells).
Dataset read_csv(const std::string& path);

void write_csv(const std::string& path, const Eigen::Ref<const Matrix>& x,
               const std::vector<std::string>& columns, const std::vector<int>* labels,
               const std::string& manifest_digest);

struct Standardization {
  bool applied = false;
  Vector mean;
  Vector sd;
};

// Centers and scales every column to mean 0, variance 1 (population
// convention). Throws naming the column when its variance is zero.
Standardization standardize_columns(Matrix& x, const std::vector<std::string>& columns);

// Replays a stored transform on fresh data with the same columns.
void apply_standardization(Matrix& x, const Standardization& transform);

struct ModelFile {
  int schema_version = kSchemaVersion;
  Eigen::Index n = 0;
  int p = 0;
  double lambda = 0.0;
  PenaltyStrategy strategy = PenaltyStrategy::AllOnes;
  ModelParams params;
  int d0 = 0;
  double bic = 0.0;
  double loglik = 0.0;            // unpenalized, as used by the BIC
  double penalized_loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  Standardization standardization;
  std::string manifest_digest;
};

ModelFile model_file_from_report(const FitReport& report, Eigen::Index n,
                                 const Standardization& standardization,
                                 const std::string& manifest_digest);

void write_model_json(const std::string& path, const ModelFile& model);
ModelFile read_model_json(const std::string& path);

void write_truth_json(const std::string& path, const SyntheticScenario& scenario,
                      const std::vector<Matrix>& omegas, const std::string& manifest_digest);

struct TruthFile {
  SyntheticScenario scenario;
  std::vector<Matrix> omegas;
};

TruthFile read_truth_json(const std::string& path);

struct RunManifest {
  std::string command;
  std::string config_json;  // resolved configuration, canonical JSON text
  std::uint64_t master_seed = 0;
  std::string version = kVersion;
  std::map<std::string, std::string> input_digests;  // path -> fnv1a hex
  std::vector<std::string> outputs;
  std::string timestamp;
  std::string digest;  // over the deterministic fields only
};

// Digest covers command, config, seed, version and input digests; output
// paths and the timestamp are excluded so reruns with the same inputs
// produce the same digest.
std::string manifest_digest(const RunManifest& manifest);

void write_manifest(const std::string& path, const RunManifest& manifest);

std::string digest_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace sgmix
