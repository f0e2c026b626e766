#include "sgmix/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <chrono>
#include <numeric>

#include "sgmix/util.hpp"

namespace sgmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void validate_params(const Eigen::Ref<const Matrix>& x, const ModelParams& params,
                     const char* who) {
  const Eigen::Index p = x.cols();
  if (params.K < 1 || params.pi.size() != params.K ||
      params.mu.size() != static_cast<std::size_t>(params.K) ||
      params.omega.size() != static_cast<std::size_t>(params.K)) {
    throw std::invalid_argument(std::string(who) + ": inconsistent parameter set");
  }
  if ((params.pi.array() <= 0.0).any() || std::abs(params.pi.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(who) + ": mixing proportions must be positive and sum to 1");
  }
  for (int k = 0; k < params.K; ++k) {
    if (params.mu[static_cast<std::size_t>(k)].size() != p ||
        params.omega[static_cast<std::size_t>(k)].rows() != p) {
      throw std::invalid_argument(std::string(who) + ": dimension mismatch");
    }
  }
}

// lambda * sum_k ||P_k * Omega_k||_1, elementwise with zero diagonal P.
// Exact-zero omega entries contribute nothing even under infinite weights.
double penalty_term(double lambda, const std::vector<Matrix>& weights,
                    const std::vector<Matrix>& omegas) {
  if (lambda == 0.0) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    const Matrix& p = weights[k];
    const Matrix& o = omegas[k];
    for (Eigen::Index j = 0; j < o.cols(); ++j) {
      for (Eigen::Index i = 0; i < o.rows(); ++i) {
        double v = o(i, j);
        if (v != 0.0) total += p(i, j) * std::abs(v);
      }
    }
  }
  return lambda * total;
}

double resolve_min_size(double configured, Eigen::Index p) {
  return configured > 0.0 ? configured : static_cast<double>(p) + 1.0;
}

}  // namespace

EStepResult e_step(const Eigen::Ref<const Matrix>& x, const ModelParams& params) {
  validate_params(x, params, "e_step");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const int K = params.K;

  Matrix logdens(n, K);
  for (int k = 0; k < K; ++k) {
    const Matrix& omega = params.omega[static_cast<std::size_t>(k)];
    Eigen::LLT<Matrix> llt(symmetric_part(omega));
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("e_step: precision of component " + std::to_string(k) +
                               " is not positive definite");
    }
    Matrix l = llt.matrixL();
    double log_det = 2.0 * l.diagonal().array().log().sum();
    Matrix centered = x.rowwise() - params.mu[static_cast<std::size_t>(k)].transpose();
    Vector quad = (centered * l).rowwise().squaredNorm();
    logdens.col(k) = (-0.5 * quad.array() + 0.5 * log_det -
                      0.5 * static_cast<double>(p) * kLog2Pi + std::log(params.pi[k]))
                         .matrix();
  }

  EStepResult result;
  result.zhat.resize(n, K);
  result.loglik = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = logdens.row(i).maxCoeff();
    if (!std::isfinite(m)) {
      throw std::runtime_error("e_step: all component densities underflowed for row " +
                               std::to_string(i));
    }
    double sum = (logdens.row(i).array() - m).exp().sum();
    double lse = m + std::log(sum);
    result.loglik += lse;
    result.zhat.row(i) = (logdens.row(i).array() - lse).exp();
    result.zhat.row(i) /= result.zhat.row(i).sum();
  }
  return result;
}

MStepResult m_step(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& zhat,
                   double lambda, const PenaltyPlan& plan, const GlassoOptions& opts,
                   double min_effective_size, const std::vector<GlassoWarmStart>* warm) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const int K = static_cast<int>(zhat.cols());
  if (zhat.rows() != n || plan.weights.size() != static_cast<std::size_t>(K)) {
    throw std::invalid_argument("m_step: dimension mismatch");
  }
  const double min_size = resolve_min_size(min_effective_size, p);

  MStepResult result;
  result.params.K = K;
  result.params.pi.resize(K);
  result.params.mu.resize(static_cast<std::size_t>(K));
  result.params.omega.resize(static_cast<std::size_t>(K));
  result.s.resize(static_cast<std::size_t>(K));
  result.penalty.resize(static_cast<std::size_t>(K));

  for (int k = 0; k < K; ++k) {
    const double n_k = zhat.col(k).sum();
    if (n_k < min_size) {
      throw DegenerateComponentError(
          k, n_k,
          "m_step: component " + std::to_string(k) + " effective size " + format_double(n_k) +
              " below minimum " + format_double(min_size));
    }
    result.params.pi[k] = n_k / static_cast<double>(n);
    Vector mu = (zhat.col(k).transpose() * x).transpose() / n_k;
    Matrix centered = x.rowwise() - mu.transpose();
    Matrix weighted = centered.array().colwise() * zhat.col(k).array();
    Matrix s = symmetrize((weighted.transpose() * centered) / n_k);

    Matrix r;
    if (lambda == 0.0) {
      r = Matrix::Zero(p, p);
    } else {
      r = (2.0 * lambda / n_k) * plan.weights[static_cast<std::size_t>(k)];
    }
    GlassoOptions local = opts;
    if (warm != nullptr) local.warm_start = (*warm)[static_cast<std::size_t>(k)];
    GlassoSolution sol = weighted_glasso(s, r, local);
    Matrix omega = std::move(sol.omega);
    if (warm != nullptr) {
      // Generalized-EM guard: the solver stops at a tolerance, so its
      // answer can score marginally below the incumbent on the new
      // subproblem; keeping the incumbent preserves exact monotonicity of
      // the penalized objective.
      const Matrix& incumbent = (*warm)[static_cast<std::size_t>(k)].omega;
      if (glasso_objective(s, incumbent, r) > glasso_objective(s, omega, r)) {
        omega = incumbent;
      }
    }

    result.params.mu[static_cast<std::size_t>(k)] = std::move(mu);
    result.params.omega[static_cast<std::size_t>(k)] = std::move(omega);
    result.s[static_cast<std::size_t>(k)] = std::move(s);
    result.penalty[static_cast<std::size_t>(k)] = std::move(r);
  }
  result.params.pi /= result.params.pi.sum();
  return result;
}

double penalized_loglik(const Eigen::Ref<const Matrix>& x, const ModelParams& params,
                        double lambda, const PenaltyPlan& plan) {
  double ll = e_step(x, params).loglik;
  return ll - penalty_term(lambda, plan.weights, params.omega);
}

FitInit prepare_fit(const Eigen::Ref<const Matrix>& x, int K, PenaltyStrategy strategy,
                    const FitConfig& config) {
  const Eigen::Index n = x.rows();
  if (K < 1) throw std::invalid_argument("fit: K must be >= 1");
  if (n <= K) throw std::invalid_argument("fit: need more observations than components");
  if (!x.allFinite()) throw std::invalid_argument("fit: non-finite data");

  ReferenceConfig ref_config;
  ref_config.init_method = config.init_method;
  ref_config.kmeans_restarts = config.kmeans_restarts;
  ref_config.seed = config.seed;
  ref_config.glasso = config.glasso;
  ref_config.glasso.warm_start.reset();

  FitInit init;
  init.strategy = strategy;
  bool computed_partition = false;
  if (config.partition) {
    init.partition = *config.partition;
    if (init.partition.size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument("fit: starting partition length mismatch");
    }
    for (int l : init.partition) {
      if (l < 0 || l >= K) throw std::invalid_argument("fit: starting partition label out of range");
    }
  } else {
    init.partition = initial_partition(x, K, ref_config);
    computed_partition = true;
  }
  init.references = init_reference_precisions(x, init.partition, K, ref_config);
  if (computed_partition) {
    init.references.provenance = ReferenceProvenance::InitialPartition;
  }
  init.weights = build_penalty_matrices(init.references, strategy, config.epsilon_guard);

  // Starting parameters from the hard partition, precisions from the same
  // references that define the penalty weights.
  init.params0.K = K;
  init.params0.pi.resize(K);
  init.params0.mu.resize(static_cast<std::size_t>(K));
  init.params0.omega = init.references.omegas0;
  for (int k = 0; k < K; ++k) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (init.partition[static_cast<std::size_t>(i)] == k) members.push_back(i);
    }
    init.params0.pi[k] = static_cast<double>(members.size()) / static_cast<double>(n);
    Vector mu = Vector::Zero(x.cols());
    for (Eigen::Index i : members) mu += x.row(i).transpose();
    init.params0.mu[static_cast<std::size_t>(k)] = mu / static_cast<double>(members.size());
  }
  init.params0.pi /= init.params0.pi.sum();
  return init;
}

FitReport fit_from_init(const Eigen::Ref<const Matrix>& x, double lambda, const FitInit& init,
                        const FitConfig& config, const ModelParams* warm_params) {
  if (lambda < 0.0) throw std::invalid_argument("fit: lambda must be nonnegative");
  if (config.em_tolerance <= 0.0 || config.em_max_iterations < 1) {
    throw std::invalid_argument("fit: invalid EM configuration");
  }
  const Eigen::Index n = x.rows();

  PenaltyPlan plan{init.strategy, init.weights, lambda};
  GlassoOptions glasso_opts = config.glasso;
  glasso_opts.warm_start.reset();

  FitReport report;
  report.lambda = lambda;
  report.strategy = init.strategy;
  report.params = warm_params != nullptr ? *warm_params : init.params0;

  EStepResult e = e_step(x, report.params);
  double objective = e.loglik - penalty_term(lambda, plan.weights, report.params.omega);
  report.objective_trace.push_back(objective);
  if (config.iteration_observer) config.iteration_observer(0, report.params, objective);

  double loglik = e.loglik;
  int iteration = 0;
  for (iteration = 1; iteration <= config.em_max_iterations; ++iteration) {
    std::vector<GlassoWarmStart> warm;
    warm.reserve(static_cast<std::size_t>(report.params.K));
    for (const Matrix& omega : report.params.omega) {
      warm.push_back({omega, invert_spd(omega)});
    }
    MStepResult m;
    try {
      m = m_step(x, e.zhat, lambda, plan, glasso_opts, config.min_effective_size, &warm);
    } catch (const DegenerateComponentError& err) {
      throw DegenerateComponentError(err.component, err.effective_size,
                                     "fit: iteration " + std::to_string(iteration) + ": " +
                                         err.what());
    }
    report.params = std::move(m.params);
    report.final_s = std::move(m.s);
    report.final_penalty = std::move(m.penalty);

    e = e_step(x, report.params);
    loglik = e.loglik;
    double next = loglik - penalty_term(lambda, plan.weights, report.params.omega);
    if (!std::isfinite(next)) {
      throw std::runtime_error("fit: non-finite objective at iteration " +
                               std::to_string(iteration));
    }
    report.objective_trace.push_back(next);
    if (config.iteration_observer) config.iteration_observer(iteration, report.params, next);

    double denom = std::abs(objective);
    double change = std::abs(next - objective);
    objective = next;
    if ((denom > 0.0 ? change / denom : change) < config.em_tolerance) {
      report.converged = true;
      break;
    }
  }
  report.iterations = std::min(iteration, config.em_max_iterations);
  report.responsibilities = std::move(e.zhat);
  report.penalized_loglik = objective;
  report.unpenalized_loglik = loglik;
  report.d0 = parameter_count_d0(report.params);
  report.bic = modified_bic(report.unpenalized_loglik, report.d0, n);
  return report;
}

FitReport fit(const Eigen::Ref<const Matrix>& x, int K, double lambda, PenaltyStrategy strategy,
              const FitConfig& config) {
  FitInit init = prepare_fit(x, K, strategy, config);
  return fit_from_init(x, lambda, init, config);
}

std::vector<int> classify(const Eigen::Ref<const Matrix>& x, const ModelParams& params) {
  EStepResult e = e_step(x, params);
  std::vector<int> labels(static_cast<std::size_t>(x.rows()), 0);
  for (Eigen::Index i = 0; i < e.zhat.rows(); ++i) {
    int best = 0;
    for (int k = 1; k < params.K; ++k) {
      if (e.zhat(i, k) > e.zhat(i, best)) best = k;
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

int count_nonzero_upper_offdiag(const Eigen::Ref<const Matrix>& m, double tol) {
  int count = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      if (std::abs(m(i, j)) > tol) ++count;
    }
  }
  return count;
}

int parameter_count_d0(const ModelParams& params, double tol) {
  const int p = static_cast<int>(params.dim());
  int d0 = (params.K - 1) + params.K * p;
  for (const Matrix& omega : params.omega) {
    d0 += p + count_nonzero_upper_offdiag(omega, tol);
  }
  return d0;
}

double modified_bic(double loglik, int d0, Eigen::Index n) {
  return 2.0 * loglik - static_cast<double>(d0) * std::log(static_cast<double>(n));
}

double bic(const FitReport& report, Eigen::Index n) {
  return modified_bic(report.unpenalized_loglik, report.d0, n);
}

std::vector<double> lambda_grid(const Eigen::Ref<const Matrix>& x,
                                const std::vector<int>& partition, int n_points) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n_points < 1) throw std::invalid_argument("lambda_grid: n_points must be >= 1");
  if (partition.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("lambda_grid: partition length mismatch");
  }
  int K = 0;
  for (int l : partition) {
    if (l < 0) throw std::invalid_argument("lambda_grid: negative label");
    K = std::max(K, l + 1);
  }
  double bound = 0.0;
  for (int k = 0; k < K; ++k) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (partition[static_cast<std::size_t>(i)] == k) members.push_back(i);
    }
    if (members.size() < 2) {
      throw DegeneratePartitionError(
          k, "lambda_grid: cluster " + std::to_string(k) + " has fewer than 2 members");
    }
    const double n_k = static_cast<double>(members.size());
    Matrix xk(members.size(), p);
    for (std::size_t i = 0; i < members.size(); ++i) xk.row(static_cast<Eigen::Index>(i)) = x.row(members[i]);
    Eigen::RowVectorXd mean = xk.colwise().mean();
    Matrix centered = xk.rowwise() - mean;
    Matrix s = symmetrize((centered.transpose() * centered) / n_k);
    double max_dev = (s - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
    bound = std::max(bound, max_dev * n_k / 2.0);
  }
  std::vector<double> grid(static_cast<std::size_t>(n_points), 0.0);
  if (n_points == 1) return grid;
  for (int i = 0; i < n_points; ++i) {
    grid[static_cast<std::size_t>(i)] =
        bound * static_cast<double>(i) / static_cast<double>(n_points - 1);
  }
  return grid;
}

std::vector<LambdaFit> fit_path(const Eigen::Ref<const Matrix>& x, int K,
                                const std::vector<double>& lambdas, PenaltyStrategy strategy,
                                const FitConfig& config, bool warm_across_lambdas) {
  FitInit init = prepare_fit(x, K, strategy, config);

  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });

  std::vector<LambdaFit> results(lambdas.size());
  std::optional<ModelParams> warm;
  for (std::size_t idx : order) {
    LambdaFit& slot = results[idx];
    slot.lambda = lambdas[idx];
    const auto started = std::chrono::steady_clock::now();
    try {
      const ModelParams* warm_ptr = (warm_across_lambdas && warm) ? &*warm : nullptr;
      FitReport report = fit_from_init(x, lambdas[idx], init, config, warm_ptr);
      if (warm_across_lambdas) warm = report.params;
      slot.report = std::move(report);
    } catch (const std::exception& err) {
      slot.error = err.what();
      warm.reset();  // restart the chain from the partition after a failure
    }
    slot.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return results;
}

SearchResult model_search(const Eigen::Ref<const Matrix>& x, const std::vector<int>& k_candidates,
                          PenaltyStrategy strategy, const FitConfig& config, int grid_size,
                          int jobs) {
  const Eigen::Index n = x.rows();
  if (k_candidates.empty()) throw std::invalid_argument("model_search: no K candidates");
  for (int k : k_candidates) {
    if (k < 1 || k >= n) throw std::invalid_argument("model_search: K out of range");
  }

  std::vector<std::vector<SearchCandidate>> per_k(k_candidates.size());
  parallel_for(k_candidates.size(), jobs, [&](std::size_t ki) {
    const int K = k_candidates[ki];
    std::vector<SearchCandidate>& rows = per_k[ki];
    std::vector<double> grid;
    try {
      ReferenceConfig ref_config;
      ref_config.init_method = config.init_method;
      ref_config.kmeans_restarts = config.kmeans_restarts;
      ref_config.seed = config.seed;
      std::vector<int> partition =
          config.partition ? *config.partition : initial_partition(x, K, ref_config);
      grid = lambda_grid(x, partition, grid_size);
    } catch (const std::exception& err) {
      rows.push_back({K, 0.0, std::nullopt, std::string("grid: ") + err.what()});
      return;
    }
    std::vector<LambdaFit> path = fit_path(x, K, grid, strategy, config);
    rows.reserve(path.size());
    for (const LambdaFit& f : path) {
      rows.push_back({K, f.lambda, f.report, f.error, f.seconds});
    }
  });

  SearchResult result;
  for (auto& rows : per_k) {
    for (auto& row : rows) result.table.push_back(std::move(row));
  }
  const SearchCandidate* best = nullptr;
  for (const SearchCandidate& row : result.table) {
    if (!row.report) continue;
    if (best == nullptr || row.report->bic > best->report->bic ||
        (row.report->bic == best->report->bic &&
         (row.K < best->K || (row.K == best->K && row.lambda < best->lambda)))) {
      best = &row;
    }
  }
  if (best == nullptr) {
    throw SearchError("model_search: all candidate fits failed");
  }
  result.best = *best->report;
  return result;
}

}  // namespace sgmix
