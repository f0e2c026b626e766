// Penalized EM for Gaussian mixtures with component precision matrices
// estimated by weighted graphical lasso, plus MAP classification, the
// modified BIC, lambda-grid construction and (K, lambda) model search.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgmix/glasso.hpp"
#include "sgmix/penalty.hpp"
#include "sgmix/spd.hpp"

namespace sgmix {

struct ModelParams {
  int K = 0;
  Vector pi;                  // mixing proportions, positive, sum 1
  std::vector<Vector> mu;     // K mean vectors
  std::vector<Matrix> omega;  // K precision matrices, positive definite

  Eigen::Index dim() const { return mu.empty() ? 0 : mu.front().size(); }
};

struct FitConfig {
  double em_tolerance = 1e-5;
  int em_max_iterations = 500;
  GlassoOptions glasso;
  std::uint64_t seed = 0;
  // Components whose effective size drops below this abort the fit; the
  // default p + 1 guards against singular weighted covariances and must be
  // lowered explicitly for p >= n problems.
  double min_effective_size = 0.0;  // <= 0 resolves to p + 1
  InitMethod init_method = InitMethod::KMeans;
  int kmeans_restarts = 10;
  double epsilon_guard = 1e-8;
  // Full starting partition (labels in 0..K-1); computed internally when
  // absent.
  std::optional<std::vector<int>> partition;
  // Invoked with (iteration, params, penalized objective); iteration 0 is
  // the starting point. Used by audits of the objective trace.
  std::function<void(int, const ModelParams&, double)> iteration_observer;
};

struct FitReport {
  ModelParams params;
  Matrix responsibilities;  // n x K, rows sum to 1
  double penalized_loglik = 0.0;
  double unpenalized_loglik = 0.0;
  double bic = 0.0;
  int d0 = 0;
  int iterations = 0;
  bool converged = false;
  double lambda = 0.0;
  PenaltyStrategy strategy = PenaltyStrategy::AllOnes;
  std::vector<double> objective_trace;  // penalized objective per iteration, entry 0 = start
  // Diagnostics from the last M-step: weighted covariances and effective
  // penalty matrices, for KKT certification of the returned precisions.
  std::vector<Matrix> final_s;
  std::vector<Matrix> final_penalty;
};

struct DegenerateComponentError : std::runtime_error {
  int component;
  double effective_size;
  DegenerateComponentError(int k, double size, const std::string& what)
      : std::runtime_error(what), component(k), effective_size(size) {}
};

struct EStepResult {
  Matrix zhat;
  double loglik = 0.0;
};

// Posterior responsibilities and observed-data log-likelihood, computed in
// log space with log-sum-exp normalization.
EStepResult e_step(const Eigen::Ref<const Matrix>& x, const ModelParams& params);

struct MStepResult {
  ModelParams params;
  std::vector<Matrix> s;        // weighted covariances per component
  std::vector<Matrix> penalty;  // effective glasso penalties (2 lambda / n_k) P_k
};

MStepResult m_step(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& zhat,
                   double lambda, const PenaltyPlan& plan, const GlassoOptions& opts,
                   double min_effective_size = 0.0,
                   const std::vector<GlassoWarmStart>* warm = nullptr);

// Observed-data log-likelihood minus lambda * sum_k ||P_k * Omega_k||_1.
double penalized_loglik(const Eigen::Ref<const Matrix>& x, const ModelParams& params,
                        double lambda, const PenaltyPlan& plan);

// Shared initialization of a fit: starting partition, reference precisions,
// penalty weights and starting parameters. Reused across a lambda path so
// the penalty plan is built exactly once.
struct FitInit {
  std::vector<int> partition;
  ReferencePrecisions references;
  std::vector<Matrix> weights;
  ModelParams params0;
  PenaltyStrategy strategy = PenaltyStrategy::AllOnes;
};

FitInit prepare_fit(const Eigen::Ref<const Matrix>& x, int K, PenaltyStrategy strategy,
                    const FitConfig& config);

FitReport fit_from_init(const Eigen::Ref<const Matrix>& x, double lambda, const FitInit& init,
                        const FitConfig& config, const ModelParams* warm_params = nullptr);

FitReport fit(const Eigen::Ref<const Matrix>& x, int K, double lambda,
              PenaltyStrategy strategy, const FitConfig& config);

// MAP classification; ties broken toward the smallest component index.
std::vector<int> classify(const Eigen::Ref<const Matrix>& x, const ModelParams& params);

int count_nonzero_upper_offdiag(const Eigen::Ref<const Matrix>& m, double tol = 1e-12);

// Parameters not shrunk to zero: (K - 1) mixing proportions, K p means and
// per component the p diagonal plus surviving upper off-diagonal entries.
int parameter_count_d0(const ModelParams& params, double tol = 1e-12);

double modified_bic(double loglik, int d0, Eigen::Index n);

double bic(const FitReport& report, Eigen::Index n);

// Equispaced grid of n_points values on [0, max_k max|S_k - I| * n_k / 2],
// the inner max element-wise, from per-cluster covariances of the starting
// partition.
std::vector<double> lambda_grid(const Eigen::Ref<const Matrix>& x,
                                const std::vector<int>& partition, int n_points = 100);

struct LambdaFit {
  double lambda = 0.0;
  std::optional<FitReport> report;
  std::string error;     // failure reason when report is absent
  double seconds = 0.0;  // wall time of this fit
};

// Fits every lambda, reusing one initialization; executed in descending
// lambda order with EM warm starts. Results are returned in input order.
std::vector<LambdaFit> fit_path(const Eigen::Ref<const Matrix>& x, int K,
                                const std::vector<double>& lambdas, PenaltyStrategy strategy,
                                const FitConfig& config, bool warm_across_lambdas = true);

struct SearchCandidate {
  int K = 0;
  double lambda = 0.0;
  std::optional<FitReport> report;
  std::string error;
  double seconds = 0.0;
};

struct SearchResult {
  FitReport best;
  std::vector<SearchCandidate> table;
};

struct SearchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fits every (K, lambda) candidate and selects the maximal-BIC fit. Failed
// fits are recorded with their reason and excluded from selection. K chains
// run independently across the worker pool; output is deterministic.
SearchResult model_search(const Eigen::Ref<const Matrix>& x, const std::vector<int>& k_candidates,
                          PenaltyStrategy strategy, const FitConfig& config, int grid_size = 100,
                          int jobs = 1);

}  // namespace sgmix
