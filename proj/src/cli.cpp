#include "sgmix/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sgmix/io.hpp"
#include "sgmix/metrics.hpp"
#include "sgmix/mixture.hpp"
#include "sgmix/simulate.hpp"
#include "sgmix/util.hpp"

namespace sgmix::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string iso_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest make_manifest(const std::string& command, const json& config, std::uint64_t seed,
                          const std::map<std::string, std::string>& inputs) {
  RunManifest manifest;
  manifest.command = command;
  manifest.config_json = config.dump();
  manifest.master_seed = seed;
  manifest.input_digests = inputs;
  manifest.timestamp = iso_timestamp();
  manifest.digest = manifest_digest(manifest);
  return manifest;
}

void finish_manifest(RunManifest& manifest, const CommonOptions& common,
                     const std::string& path) {
  json doc = json::parse(manifest.config_json);
  // Runtime knobs that do not affect numerical results live outside the
  // digested configuration.
  doc["runtime"] = {{"jobs", common.jobs}, {"out", common.out_dir}, {"timing", common.timing}};
  manifest.config_json = doc.dump();
  write_manifest(path, manifest);
}

bool handle_dry_run(const CommonOptions& common, const std::string& command, const json& config,
                    const std::string& digest) {
  if (!common.dry_run) return false;
  json doc = config;
  doc["command"] = command;
  doc["manifest_digest"] = digest;
  doc["runtime"] = {{"jobs", common.jobs}, {"out", common.out_dir}, {"timing", common.timing}};
  std::cout << doc.dump(2) << std::endl;
  return true;
}

std::vector<std::string> numeric_column_names(int p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (int j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

struct LabelInfo {
  std::vector<int> codes;  // dense 0-based, ordered by original value
  int num_classes = 0;
};

LabelInfo dense_labels(const std::vector<int>& raw) {
  std::map<int, int> mapping;
  for (int v : raw) mapping.emplace(v, 0);
  int next = 0;
  for (auto& [value, code] : mapping) code = next++;
  LabelInfo info;
  info.num_classes = next;
  info.codes.reserve(raw.size());
  for (int v : raw) info.codes.push_back(mapping[v]);
  return info;
}

long d_omega_count(const ModelParams& params) {
  long total = 0;
  for (const Matrix& omega : params.omega) {
    total += omega.rows() + count_nonzero_upper_offdiag(omega);
  }
  return total;
}

std::optional<PenaltyStrategy> strategy_from_flag(const std::string& name) {
  return parse_strategy(name);
}

InitMethod init_from_flag(const std::string& name) {
  if (name == "kmeans") return InitMethod::KMeans;
  if (name == "gmm") return InitMethod::DiagGmm;
  throw std::runtime_error("unknown --init '" + name + "' (expected kmeans or gmm)");
}

std::vector<int> parse_k_range(const std::string& text) {
  auto pos = text.find("..");
  if (pos == std::string::npos) {
    throw std::runtime_error("--k-range must have the form a..b");
  }
  bool ok_a = false, ok_b = false;
  double a = parse_double(text.substr(0, pos), ok_a);
  double b = parse_double(text.substr(pos + 2), ok_b);
  if (!ok_a || !ok_b || a != std::floor(a) || b != std::floor(b) || a < 1 || b < a) {
    throw std::runtime_error("--k-range must have the form a..b with 1 <= a <= b");
  }
  std::vector<int> ks;
  for (int k = static_cast<int>(a); k <= static_cast<int>(b); ++k) ks.push_back(k);
  return ks;
}

struct MetricsRow {
  std::string scenario;
  int rep = 0;
  std::string strategy;
  double lambda = 0.0;
  int K = 0;
  std::vector<std::optional<double>> f1;
  std::optional<double> mean_f1;
  std::optional<double> ari_value;
  std::optional<long> d_omega;
  std::optional<double> mfd;
  double bic = 0.0;
  bool converged = false;
  double seconds = 0.0;
  bool selected = false;
};

std::string results_header(int f1_count) {
  std::ostringstream out;
  out << "scenario,rep,strategy,lambda,K";
  for (int k = 1; k <= f1_count; ++k) out << ",f1_" << k;
  out << ",mean_f1,ari,d_omega,mfd,bic,converged,seconds,selected";
  return out.str();
}

void append_row(std::ostringstream& out, const MetricsRow& row, int f1_count, bool timing) {
  out << row.scenario << ',' << row.rep << ',' << row.strategy << ','
      << format_double(row.lambda) << ',' << row.K;
  for (int k = 0; k < f1_count; ++k) {
    out << ',';
    if (k < static_cast<int>(row.f1.size()) && row.f1[static_cast<std::size_t>(k)]) {
      out << format_double(*row.f1[static_cast<std::size_t>(k)]);
    }
  }
  out << ',';
  if (row.mean_f1) out << format_double(*row.mean_f1);
  out << ',';
  if (row.ari_value) out << format_double(*row.ari_value);
  out << ',';
  if (row.d_omega) out << *row.d_omega;
  out << ',';
  if (row.mfd && std::isfinite(*row.mfd)) out << format_double(*row.mfd);
  out << ',' << format_double(row.bic) << ',' << (row.converged ? 1 : 0) << ','
      << (timing ? format_double(row.seconds) : std::string("0")) << ','
      << (row.selected ? 1 : 0) << '\n';
}

struct FailureRecord {
  std::string scenario;
  int rep = 0;
  std::string strategy;
  int K = 0;
  double lambda = 0.0;
  std::string reason;
};

// Metrics for one fitted model against the (optional) ground truth.
// Matching-based metrics require the fitted K to equal the number of true
// classes; otherwise only ARI, d_omega and BIC are reported.
MetricsRow evaluate_report(const std::string& scenario, int rep, const std::string& strategy,
                           const FitReport& report, const Eigen::Ref<const Matrix>& x,
                           const std::vector<int>* true_labels, int num_classes,
                           const std::vector<Matrix>* true_omegas, double seconds,
                           bool selected) {
  MetricsRow row;
  row.scenario = scenario;
  row.rep = rep;
  row.strategy = strategy;
  row.lambda = report.lambda;
  row.K = report.params.K;
  row.bic = report.bic;
  row.converged = report.converged;
  row.seconds = seconds;
  row.selected = selected;
  row.d_omega = d_omega_count(report.params);

  if (true_labels == nullptr) return row;
  std::vector<int> est = classify(x, report.params);
  row.ari_value = ari(*true_labels, est);
  if (report.params.K != num_classes) return row;

  ComponentMatching matching = match_components(*true_labels, est, num_classes);
  if (true_omegas != nullptr && static_cast<int>(true_omegas->size()) == num_classes) {
    EdgeRecoveryReport edges = edge_recovery_report(*true_omegas, report.params.omega, matching);
    for (const EdgeCounts& c : edges.per_component) row.f1.push_back(c.f1);
    row.mean_f1 = edges.mean_f1;
  }
  std::vector<std::optional<Matrix>> empirical =
      empirical_class_precisions(x, *true_labels, num_classes);
  MfdResult mfd = median_frobenius_distance(report.params.omega, empirical, matching);
  if (std::isfinite(mfd.value)) row.mfd = mfd.value;
  return row;
}

FitConfig build_fit_config(std::uint64_t seed, const std::string& init, double min_size) {
  FitConfig config;
  config.seed = seed;
  config.init_method = init_from_flag(init);
  config.min_effective_size = min_size;
  return config;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const CsvError& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return kParseError;
  } catch (const DegenerateComponentError& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return kDegenerateFit;
  } catch (const DegeneratePartitionError& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return kDegenerateFit;
  } catch (const SearchError& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return kSearchFailure;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << std::endl;
    return kFailure;
  }
}

void write_failures_csv(const std::string& path, std::vector<FailureRecord> failures,
                        const std::string& digest) {
  std::sort(failures.begin(), failures.end(), [](const FailureRecord& a, const FailureRecord& b) {
    return std::tie(a.rep, a.strategy, a.K, a.lambda) < std::tie(b.rep, b.strategy, b.K, b.lambda);
  });
  std::ostringstream out;
  out << "# manifest: " << digest << "\n";
  out << "scenario,rep,strategy,K,lambda,reason\n";
  for (const FailureRecord& f : failures) {
    std::string reason = f.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    out << f.scenario << ',' << f.rep << ',' << f.strategy << ',' << f.K << ','
        << format_double(f.lambda) << ',' << reason << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace

int cmd_simulate(const SimulateOptions& options) {
  return run_guarded([&]() {
    json config = {{"scenario", options.scenario},
                   {"seed", options.common.seed},
                   {"p", options.p_override}};
    RunManifest manifest = make_manifest("simulate", config, options.common.seed, {});
    if (handle_dry_run(options.common, "simulate", config, manifest.digest)) return kOk;

    ScenarioData data = make_scenario(options.scenario, options.common.seed, options.p_override);
    fs::create_directories(options.common.out_dir);
    const std::string data_path = options.common.out_dir + "/data.csv";
    const std::string truth_path = options.common.out_dir + "/truth.json";
    write_csv(data_path, data.truth.x, numeric_column_names(data.scenario.p), &data.truth.labels,
              manifest.digest);
    write_truth_json(truth_path, data.scenario, data.truth.omegas, manifest.digest);
    manifest.outputs = {data_path, truth_path};
    finish_manifest(manifest, options.common, options.common.out_dir + "/manifest.json");
    std::cout << "wrote " << data_path << " (" << data.scenario.n << " x " << data.scenario.p
              << ", K=" << data.scenario.K << ") and " << truth_path << std::endl;
    return kOk;
  });
}

int cmd_fit(const FitOptions& options) {
  return run_guarded([&]() {
    auto strategy = strategy_from_flag(options.penalty);
    if (!strategy) throw std::runtime_error("unknown --penalty '" + options.penalty + "'");
    if (options.require_k_range && options.k_range.empty()) {
      throw std::runtime_error("search requires --k-range a..b");
    }
    std::vector<int> ks;
    if (!options.k_range.empty()) {
      ks = parse_k_range(options.k_range);
    } else if (options.k > 0) {
      ks = {options.k};
    } else {
      throw std::runtime_error("either --k or --k-range is required");
    }

    json config = {{"data", options.data_path},
                   {"penalty", options.penalty},
                   {"k", options.k},
                   {"k_range", options.k_range},
                   {"lambda", options.lambda},
                   {"lambda_grid", options.lambda_grid_size},
                   {"init", options.init},
                   {"min_size", options.min_size},
                   {"standardize", options.common.standardize},
                   {"seed", options.common.seed}};
    std::map<std::string, std::string> inputs;
    if (!options.common.dry_run || fs::exists(options.data_path)) {
      inputs[options.data_path] = digest_file(options.data_path);
    }
    RunManifest manifest = make_manifest("fit", config, options.common.seed, inputs);
    if (handle_dry_run(options.common, "fit", config, manifest.digest)) return kOk;

    Dataset ds = read_csv(options.data_path);
    Matrix x = ds.x;
    Standardization st;
    if (options.common.standardize) st = standardize_columns(x, ds.columns);

    FitConfig fit_config =
        build_fit_config(options.common.seed, options.init, options.min_size);
    const int jobs = resolve_jobs(options.common.jobs);

    FitReport best;
    double seconds = 0.0;
    const auto started = std::chrono::steady_clock::now();
    if (ks.size() == 1 && options.lambda >= 0.0) {
      best = fit(x, ks.front(), options.lambda, *strategy, fit_config);
    } else {
      SearchResult search =
          model_search(x, ks, *strategy, fit_config, options.lambda_grid_size, jobs);
      best = std::move(search.best);
      long failures = 0;
      for (const SearchCandidate& c : search.table) {
        if (!c.report) ++failures;
      }
      if (failures > 0) {
        std::cerr << failures << " candidate fit(s) failed and were excluded from selection"
                  << std::endl;
      }
    }
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    std::optional<LabelInfo> labels;
    if (ds.labels) labels = dense_labels(*ds.labels);
    const std::string stem = fs::path(options.data_path).stem().string();
    MetricsRow row = evaluate_report(
        stem, 0, options.penalty, best, x, labels ? &labels->codes : nullptr,
        labels ? labels->num_classes : 0, nullptr, seconds, true);

    fs::create_directories(options.common.out_dir);
    const std::string model_path = options.common.out_dir + "/fit.json";
    const std::string metrics_path = options.common.out_dir + "/metrics.csv";
    write_model_json(model_path, model_file_from_report(best, x.rows(), st, manifest.digest));
    std::ostringstream metrics;
    metrics << "# manifest: " << manifest.digest << "\n"
            << results_header(best.params.K) << "\n";
    append_row(metrics, row, best.params.K, options.common.timing);
    write_text_file(metrics_path, metrics.str());
    manifest.outputs = {model_path, metrics_path};
    finish_manifest(manifest, options.common, options.common.out_dir + "/manifest.json");

    std::cout << "fit: K=" << best.params.K << " lambda=" << format_double(best.lambda)
              << " bic=" << format_double(best.bic) << " d0=" << best.d0
              << " converged=" << (best.converged ? "yes" : "no") << "\nwrote " << model_path
              << " and " << metrics_path << std::endl;
    return kOk;
  });
}

int cmd_evaluate(const EvaluateOptions& options) {
  return run_guarded([&]() {
    json config = {{"model", options.model_path},
                   {"data", options.data_path},
                   {"truth", options.truth_path}};
    std::map<std::string, std::string> inputs;
    inputs[options.model_path] = digest_file(options.model_path);
    inputs[options.data_path] = digest_file(options.data_path);
    if (!options.truth_path.empty()) inputs[options.truth_path] = digest_file(options.truth_path);
    RunManifest manifest = make_manifest("evaluate", config, options.common.seed, inputs);
    if (handle_dry_run(options.common, "evaluate", config, manifest.digest)) return kOk;

    ModelFile model = read_model_json(options.model_path);
    Dataset ds = read_csv(options.data_path);
    Matrix x = ds.x;
    if (x.cols() != model.p) {
      throw std::runtime_error("data has " + std::to_string(x.cols()) +
                               " columns but the model expects " + std::to_string(model.p));
    }
    apply_standardization(x, model.standardization);

    std::optional<TruthFile> truth;
    if (!options.truth_path.empty()) truth = read_truth_json(options.truth_path);

    FitReport pseudo;
    pseudo.params = model.params;
    pseudo.lambda = model.lambda;
    pseudo.strategy = model.strategy;
    pseudo.bic = model.bic;
    pseudo.unpenalized_loglik = model.loglik;
    pseudo.penalized_loglik = model.penalized_loglik;
    pseudo.d0 = model.d0;
    pseudo.converged = model.converged;

    std::optional<LabelInfo> labels;
    if (ds.labels) labels = dense_labels(*ds.labels);
    const int f1_count = truth ? truth->scenario.K : model.params.K;
    const std::string stem = fs::path(options.data_path).stem().string();
    MetricsRow row = evaluate_report(stem, 0, strategy_name(model.strategy), pseudo, x,
                                     labels ? &labels->codes : nullptr,
                                     labels ? labels->num_classes : 0,
                                     truth ? &truth->omegas : nullptr, 0.0, true);

    fs::create_directories(options.common.out_dir);
    const std::string csv_path = options.common.out_dir + "/metrics.csv";
    const std::string json_path = options.common.out_dir + "/metrics.json";
    std::ostringstream metrics;
    metrics << "# manifest: " << manifest.digest << "\n" << results_header(f1_count) << "\n";
    append_row(metrics, row, f1_count, options.common.timing);
    write_text_file(csv_path, metrics.str());

    json doc;
    doc["scenario"] = row.scenario;
    doc["strategy"] = row.strategy;
    doc["lambda"] = row.lambda;
    doc["K"] = row.K;
    json f1 = json::array();
    for (const auto& v : row.f1) {
      if (v) f1.push_back(*v);
      else f1.push_back(nullptr);
    }
    doc["f1"] = std::move(f1);
    doc["mean_f1"] = row.mean_f1 ? json(*row.mean_f1) : json(nullptr);
    doc["ari"] = row.ari_value ? json(*row.ari_value) : json(nullptr);
    doc["d_omega"] = row.d_omega ? json(*row.d_omega) : json(nullptr);
    doc["mfd"] = row.mfd ? json(*row.mfd) : json(nullptr);
    doc["bic"] = row.bic;
    doc["manifest_digest"] = manifest.digest;
    write_text_file(json_path, doc.dump(2) + "\n");

    manifest.outputs = {csv_path, json_path};
    finish_manifest(manifest, options.common, options.common.out_dir + "/manifest.json");
    std::cout << "wrote " << csv_path << " and " << json_path << std::endl;
    return kOk;
  });
}

int cmd_replicate(const ReplicateOptions& options) {
  return run_guarded([&]() {
    std::vector<std::string> strategy_names = options.strategies;
    if (strategy_names.empty()) {
      strategy_names = {"zhou", "inverse", "frob-diag", "riem-diag"};
    }
    std::vector<PenaltyStrategy> strategies;
    for (const std::string& name : strategy_names) {
      auto s = strategy_from_flag(name);
      if (!s) throw std::runtime_error("unknown strategy '" + name + "'");
      strategies.push_back(*s);
    }
    if (options.reps < 1) throw std::runtime_error("--reps must be >= 1");
    const SyntheticScenario probe = scenario_config(options.scenario, 0, options.p_override);
    std::vector<int> ks;
    if (!options.k_range.empty()) ks = parse_k_range(options.k_range);
    const double min_size =
        options.min_size > 0.0 ? options.min_size : (options.scenario == "p-ge-n" ? 2.0 : 0.0);

    json config = {{"scenario", options.scenario},
                   {"reps", options.reps},
                   {"strategies", strategy_names},
                   {"lambda_grid", options.lambda_grid_size},
                   {"k_range", options.k_range},
                   {"p", options.p_override},
                   {"init", options.init},
                   {"min_size", min_size},
                   {"standardize", options.common.standardize},
                   {"seed", options.common.seed}};
    RunManifest manifest = make_manifest("replicate", config, options.common.seed, {});
    if (handle_dry_run(options.common, "replicate", config, manifest.digest)) return kOk;

    const int k_true = probe.K;
    const int jobs = resolve_jobs(options.common.jobs);
    const std::size_t reps = static_cast<std::size_t>(options.reps);
    std::vector<std::vector<MetricsRow>> row_slots(reps);
    std::vector<std::vector<FailureRecord>> failure_slots(reps);

    parallel_for(reps, jobs, [&](std::size_t b) {
      const std::uint64_t rep_seed = derive_seed(options.common.seed, b);
      ScenarioData data = make_scenario(options.scenario, rep_seed, options.p_override);
      Matrix x = data.truth.x;
      if (options.common.standardize) {
        standardize_columns(x, numeric_column_names(data.scenario.p));
      }
      const std::vector<int>& true_labels = data.truth.labels;

      FitConfig fit_config = build_fit_config(rep_seed, options.init, min_size);
      std::vector<int> shared_partition;
      std::vector<double> shared_grid;
      if (ks.empty()) {
        ReferenceConfig ref_config;
        ref_config.init_method = fit_config.init_method;
        ref_config.kmeans_restarts = fit_config.kmeans_restarts;
        ref_config.seed = rep_seed;
        shared_partition = initial_partition(x, k_true, ref_config);
        shared_grid = lambda_grid(x, shared_partition, options.lambda_grid_size);
      }

      for (std::size_t si = 0; si < strategies.size(); ++si) {
        const std::string& strategy_label = strategy_names[si];
        auto record_failure = [&](int K, double lambda, const std::string& reason) {
          failure_slots[b].push_back(
              {options.scenario, static_cast<int>(b), strategy_label, K, lambda, reason});
        };
        std::vector<std::pair<MetricsRow, double>> candidates;  // row + bic
        if (ks.empty()) {
          FitConfig cfg = fit_config;
          cfg.partition = shared_partition;
          std::vector<LambdaFit> path =
              fit_path(x, k_true, shared_grid, strategies[si], cfg);
          for (const LambdaFit& f : path) {
            if (!f.report) {
              record_failure(k_true, f.lambda, f.error);
              continue;
            }
            MetricsRow row = evaluate_report(options.scenario, static_cast<int>(b),
                                             strategy_label, *f.report, x, &true_labels, k_true,
                                             &data.truth.omegas, f.seconds, false);
            candidates.emplace_back(std::move(row), f.report->bic);
          }
        } else {
          try {
            SearchResult search =
                model_search(x, ks, strategies[si], fit_config, options.lambda_grid_size, 1);
            for (const SearchCandidate& c : search.table) {
              if (!c.report) {
                record_failure(c.K, c.lambda, c.error);
                continue;
              }
              MetricsRow row = evaluate_report(options.scenario, static_cast<int>(b),
                                               strategy_label, *c.report, x, &true_labels, k_true,
                                               &data.truth.omegas, c.seconds, false);
              candidates.emplace_back(std::move(row), c.report->bic);
            }
          } catch (const SearchError& err) {
            record_failure(0, 0.0, err.what());
          }
        }
        if (candidates.empty()) {
          if (ks.empty()) record_failure(k_true, -1.0, "no lambda fit succeeded");
          continue;
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < candidates.size(); ++i) {
          const auto& [row, b_bic] = candidates[i];
          const auto& [best_row, best_bic] = candidates[best];
          if (b_bic > best_bic ||
              (b_bic == best_bic && (row.K < best_row.K ||
                                     (row.K == best_row.K && row.lambda < best_row.lambda)))) {
            best = i;
          }
        }
        MetricsRow selected_row = candidates[best].first;
        selected_row.selected = true;
        for (auto& [row, bic_value] : candidates) {
          row_slots[b].push_back(std::move(row));
        }
        row_slots[b].push_back(std::move(selected_row));
      }
    });

    std::vector<MetricsRow> rows;
    std::vector<FailureRecord> failures;
    for (std::size_t b = 0; b < reps; ++b) {
      for (auto& row : row_slots[b]) rows.push_back(std::move(row));
      for (auto& f : failure_slots[b]) failures.push_back(std::move(f));
    }
    auto strategy_index = [&](const std::string& name) {
      return std::distance(strategy_names.begin(),
                           std::find(strategy_names.begin(), strategy_names.end(), name));
    };
    std::sort(rows.begin(), rows.end(), [&](const MetricsRow& a, const MetricsRow& b) {
      auto ka = std::make_tuple(a.rep, strategy_index(a.strategy), a.selected ? 1 : 0, a.K,
                                a.lambda);
      auto kb = std::make_tuple(b.rep, strategy_index(b.strategy), b.selected ? 1 : 0, b.K,
                                b.lambda);
      return ka < kb;
    });

    fs::create_directories(options.common.out_dir);
    const std::string results_path = options.common.out_dir + "/results.csv";
    const std::string failures_path = options.common.out_dir + "/failures.csv";
    std::ostringstream out;
    out << "# manifest: " << manifest.digest << "\n" << results_header(k_true) << "\n";
    for (const MetricsRow& row : rows) append_row(out, row, k_true, options.common.timing);
    write_text_file(results_path, out.str());
    write_failures_csv(failures_path, failures, manifest.digest);
    manifest.outputs = {results_path, failures_path};
    finish_manifest(manifest, options.common, options.common.out_dir + "/manifest.json");

    if (!failures.empty()) {
      std::cerr << failures.size() << " fit(s) failed and were recorded in " << failures_path
                << std::endl;
    }
    std::cout << "wrote " << results_path << " (" << rows.size() << " rows, " << options.reps
              << " replications)" << std::endl;
    return kOk;
  });
}

int cmd_motivating(const MotivatingOptions& options) {
  return run_guarded([&]() {
    json config = {{"seed", options.common.seed},
                   {"lambda_grid", options.lambda_grid_size},
                   {"standardize", options.common.standardize}};
    RunManifest manifest = make_manifest("motivating", config, options.common.seed, {});
    if (handle_dry_run(options.common, "motivating", config, manifest.digest)) return kOk;

    // Two components of equal weight, one near-diagonal and one dense, so a
    // common penalty cannot serve both precision matrices at once.
    SyntheticScenario scenario;
    scenario.n = 200;
    scenario.p = 20;
    scenario.K = 2;
    scenario.pi = Vector::Constant(2, 0.5);
    scenario.edge_probs = {0.1, 0.8};
    scenario.means = {Vector::Constant(20, -1.5), Vector::Constant(20, 1.5)};
    scenario.seed = options.common.seed;
    scenario.name = "motivating";
    std::vector<Matrix> omegas;
    for (int k = 0; k < scenario.K; ++k) {
      std::mt19937_64 rng(derive_seed(scenario.seed, 100 + static_cast<std::uint64_t>(k)));
      omegas.push_back(random_sparse_precision(
          scenario.p, scenario.edge_probs[static_cast<std::size_t>(k)], rng));
    }
    GroundTruth truth = sample_mixture(scenario, omegas);

    Matrix x = truth.x;
    if (options.common.standardize) {
      standardize_columns(x, numeric_column_names(scenario.p));
    }
    FitConfig fit_config;
    fit_config.seed = options.common.seed;
    ReferenceConfig ref_config;
    ref_config.seed = options.common.seed;
    std::vector<int> partition = initial_partition(x, scenario.K, ref_config);
    fit_config.partition = partition;
    std::vector<double> grid = lambda_grid(x, partition, options.lambda_grid_size);

    std::vector<LambdaFit> path =
        fit_path(x, scenario.K, grid, PenaltyStrategy::AllOnes, fit_config);

    std::ostringstream out;
    out << "# manifest: " << manifest.digest << "\n";
    out << "lambda,f1_1,f1_2\n";
    long failures = 0;
    for (const LambdaFit& f : path) {
      if (!f.report) {
        ++failures;
        continue;
      }
      std::vector<int> est = classify(x, f.report->params);
      ComponentMatching matching = match_components(truth.labels, est, scenario.K);
      EdgeRecoveryReport edges =
          edge_recovery_report(truth.omegas, f.report->params.omega, matching);
      out << format_double(f.lambda) << ',' << format_double(edges.per_component[0].f1) << ','
          << format_double(edges.per_component[1].f1) << '\n';
    }
    fs::create_directories(options.common.out_dir);
    const std::string table_path = options.common.out_dir + "/motivating.csv";
    write_text_file(table_path, out.str());
    manifest.outputs = {table_path};
    finish_manifest(manifest, options.common, options.common.out_dir + "/manifest.json");
    if (failures > 0) std::cerr << failures << " fit(s) failed" << std::endl;
    std::cout << "wrote " << table_path << std::endl;
    return kOk;
  });
}

}  // namespace sgmix::cli
