#include <doctest.h>

#include <cstring>
#include <random>

#include "oracles.hpp"
#include "sgmix/metrics.hpp"
#include "sgmix/mixture.hpp"
#include "sgmix/simulate.hpp"

using namespace sgmix;

namespace {

ModelParams two_component_params(double pi1, const Vector& mu1, const Vector& mu2) {
  ModelParams params;
  params.K = 2;
  params.pi.resize(2);
  params.pi << pi1, 1.0 - pi1;
  params.mu = {mu1, mu2};
  params.omega = {Matrix::Identity(mu1.size(), mu1.size()),
                  Matrix::Identity(mu1.size(), mu1.size())};
  return params;
}

PenaltyPlan all_ones_plan(int K, int p, double lambda) {
  PenaltyPlan plan;
  plan.strategy = PenaltyStrategy::AllOnes;
  plan.lambda = lambda;
  for (int k = 0; k < K; ++k) {
    plan.weights.push_back(Matrix::Ones(p, p) - Matrix::Identity(p, p));
  }
  return plan;
}

Matrix gaussian_sample(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = gauss(rng);
  }
  return x;
}

}  // namespace

TEST_CASE("e_step with a single component") {
  Matrix x = gaussian_sample(50, 3, 41);
  ModelParams params;
  params.K = 1;
  params.pi = Vector::Ones(1);
  params.mu = {Vector::Zero(3)};
  params.omega = {Matrix::Identity(3, 3)};
  EStepResult e = e_step(x, params);
  CHECK((e.zhat.array() == 1.0).all());
  double expected = 0.0;
  for (int i = 0; i < 50; ++i) {
    expected += oracle::log_density(x.row(i).transpose(), params.mu[0], params.omega[0]);
  }
  CHECK(e.loglik == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("e_step symmetry and likelihood-ratio cases") {
  Vector mu1 = Vector::Zero(2), mu2 = Vector::Zero(2);
  mu1[0] = -1.0;
  mu2[0] = 1.0;
  ModelParams params = two_component_params(0.5, mu1, mu2);
  Matrix x = Matrix::Zero(1, 2);  // equidistant point
  EStepResult e = e_step(x, params);
  CHECK(e.zhat(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(e.zhat(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  ModelParams identical = two_component_params(0.9, Vector::Zero(2), Vector::Zero(2));
  Matrix y = gaussian_sample(20, 2, 42);
  EStepResult e2 = e_step(y, identical);
  for (int i = 0; i < 20; ++i) {
    CHECK(e2.zhat(i, 0) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(e2.zhat(i, 1) == doctest::Approx(0.1).epsilon(1e-12));
  }
}

TEST_CASE("e_step rejects non-PD precisions") {
  ModelParams params = two_component_params(0.5, Vector::Zero(2), Vector::Zero(2));
  params.omega[0](0, 1) = params.omega[0](1, 0) = 2.0;
  CHECK_THROWS_AS(e_step(Matrix::Zero(3, 2), params), std::runtime_error);
}

TEST_CASE("m_step at lambda 0 with one component is the Gaussian MLE") {
  Matrix x = gaussian_sample(80, 3, 43);
  Matrix zhat = Matrix::Ones(80, 1);
  MStepResult m = m_step(x, zhat, 0.0, all_ones_plan(1, 3, 0.0), GlassoOptions{});
  Vector mean = x.colwise().mean();
  CHECK((m.params.mu[0] - mean).cwiseAbs().maxCoeff() < 1e-14);
  Matrix centered = x.rowwise() - mean.transpose();
  Matrix s = (centered.transpose() * centered) / 80.0;
  CHECK((m.params.omega[0] - invert_spd(s)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("m_step with hard responsibilities reproduces per-cluster statistics") {
  Matrix x = gaussian_sample(60, 2, 44);
  x.bottomRows(30).array() += 4.0;
  Matrix zhat = Matrix::Zero(60, 2);
  zhat.col(0).head(30).setOnes();
  zhat.col(1).tail(30).setOnes();
  MStepResult m = m_step(x, zhat, 0.0, all_ones_plan(2, 2, 0.0), GlassoOptions{});
  CHECK(m.params.pi[0] == doctest::Approx(0.5).epsilon(1e-14));
  Vector mean0 = x.topRows(30).colwise().mean();
  CHECK((m.params.mu[0] - mean0).cwiseAbs().maxCoeff() < 1e-12);
  Matrix centered = x.topRows(30).rowwise() - mean0.transpose();
  Matrix s0 = (centered.transpose() * centered) / 30.0;
  CHECK((m.s[0] - s0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("m_step aborts on degenerate components") {
  Matrix x = gaussian_sample(30, 4, 45);
  Matrix zhat = Matrix::Zero(30, 2);
  zhat.col(0).setConstant(0.95);
  zhat.col(1).setConstant(0.05);  // effective size 1.5 < p + 1
  CHECK_THROWS_AS(m_step(x, zhat, 0.0, all_ones_plan(2, 4, 0.0), GlassoOptions{}),
                  DegenerateComponentError);
}

TEST_CASE("penalized_loglik equals the e_step log-likelihood at lambda 0") {
  Matrix x = gaussian_sample(40, 2, 46);
  ModelParams params = two_component_params(0.4, Vector::Zero(2), Vector::Ones(2));
  PenaltyPlan plan = all_ones_plan(2, 2, 0.0);
  CHECK(penalized_loglik(x, params, 0.0, plan) == e_step(x, params).loglik);
}

TEST_CASE("penalized_loglik is linear in lambda at fixed parameters") {
  Matrix x = gaussian_sample(40, 3, 47);
  ModelParams params;
  params.K = 1;
  params.pi = Vector::Ones(1);
  params.mu = {Vector::Zero(3)};
  Matrix omega = Matrix::Identity(3, 3);
  omega(0, 1) = omega(1, 0) = 0.3;
  omega(1, 2) = omega(2, 1) = -0.2;
  params.omega = {omega};
  PenaltyPlan plan = all_ones_plan(1, 3, 1.0);
  double l1 = 2.0 * (0.3 + 0.2);
  double at1 = penalized_loglik(x, params, 1.0, plan);
  double at2 = penalized_loglik(x, params, 2.0, plan);
  CHECK(at1 - at2 == doctest::Approx(l1).epsilon(1e-12));
}

TEST_CASE("penalized_loglik with all-ones weights matches the common-penalty objective") {
  Matrix x = gaussian_sample(50, 3, 48);
  ModelParams params = two_component_params(0.6, Vector::Zero(3), Vector::Ones(3));
  params.omega[0](0, 1) = params.omega[0](1, 0) = 0.25;
  PenaltyPlan plan = all_ones_plan(2, 3, 0.7);
  double lib = penalized_loglik(x, params, 0.7, plan);
  double orc = oracle::common_penalty_objective(x, params, 0.7);
  CHECK(lib == doctest::Approx(orc).epsilon(1e-12));
}

TEST_CASE("fit at lambda 0 with one component matches the MLE") {
  Matrix x = gaussian_sample(100, 3, 49);
  FitConfig config;
  config.seed = 5;
  FitReport report = fit(x, 1, 0.0, PenaltyStrategy::AllOnes, config);
  Vector mean = x.colwise().mean();
  CHECK((report.params.mu[0] - mean).cwiseAbs().maxCoeff() < 1e-12);
  Matrix centered = x.rowwise() - mean.transpose();
  Matrix s = (centered.transpose() * centered) / 100.0;
  CHECK((report.params.omega[0] - invert_spd(s)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(report.converged);
}

TEST_CASE("fit is deterministic given the seed") {
  auto sd = make_scenario("diff-edges", 51);
  Matrix x = sd.truth.x.topRows(300);
  FitConfig config;
  config.seed = 3;
  FitReport a = fit(x, 3, 4.0, PenaltyStrategy::InverseWeight, config);
  FitReport b = fit(x, 3, 4.0, PenaltyStrategy::InverseWeight, config);
  CHECK(a.iterations == b.iterations);
  CHECK(std::memcmp(a.params.pi.data(), b.params.pi.data(), sizeof(double) * 3) == 0);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::memcmp(a.params.omega[static_cast<std::size_t>(k)].data(),
                      b.params.omega[static_cast<std::size_t>(k)].data(),
                      sizeof(double) * 20 * 20) == 0);
  }
  CHECK(a.penalized_loglik == b.penalized_loglik);
  CHECK(a.bic == b.bic);
}

TEST_CASE("fit recovers a separated three-component scenario") {
  auto sd = make_scenario("diff-edges", 52);
  Matrix x = sd.truth.x;
  FitConfig config;
  config.seed = 4;
  FitReport report = fit(x, 3, 8.0, PenaltyStrategy::FrobeniusToDiag, config);
  std::vector<int> est = classify(x, report.params);
  CHECK(ari(sd.truth.labels, est) > 0.9);
  for (const Matrix& omega : report.params.omega) CHECK(cholesky_logdet(omega).is_pd);
  // responsibilities are normalized at every row
  for (int i = 0; i < x.rows(); ++i) {
    CHECK(std::abs(report.responsibilities.row(i).sum() - 1.0) < 1e-10);
  }
}

TEST_CASE("returned precisions satisfy the KKT certificate of their final subproblem") {
  auto sd = make_scenario("diff-edges", 53);
  Matrix x = sd.truth.x.topRows(450);
  FitConfig config;
  config.seed = 8;
  FitReport report = fit(x, 3, 10.0, PenaltyStrategy::InverseWeight, config);
  REQUIRE(report.final_s.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(kkt_residual(report.final_s[static_cast<std::size_t>(k)],
                       report.params.omega[static_cast<std::size_t>(k)],
                       report.final_penalty[static_cast<std::size_t>(k)]) <= 1e-3);
  }
}

TEST_CASE("classify follows the MAP rule with ties to the smaller index") {
  Vector mu1 = Vector::Zero(2), mu2 = Vector::Zero(2);
  mu1[0] = -2.0;
  mu2[0] = 2.0;
  ModelParams params = two_component_params(0.5, mu1, mu2);
  Matrix x(3, 2);
  x << -2, 0, 2, 0, 0, 0;  // third point is an exact tie
  std::vector<int> labels = classify(x, params);
  CHECK(labels == std::vector<int>{0, 1, 0});
}

TEST_CASE("classification with true parameters stays near the Bayes error") {
  SyntheticScenario scenario;
  scenario.n = 4000;
  scenario.p = 4;
  scenario.K = 2;
  scenario.pi = Vector::Constant(2, 0.5);
  scenario.means = {Vector::Constant(4, -0.8), Vector::Constant(4, 0.8)};
  scenario.edge_probs = {0.3, 0.6};
  scenario.seed = 54;
  std::vector<Matrix> omegas;
  for (int k = 0; k < 2; ++k) {
    std::mt19937_64 rng(900 + static_cast<std::uint64_t>(k));
    omegas.push_back(random_sparse_precision(4, scenario.edge_probs[static_cast<std::size_t>(k)], rng));
  }
  GroundTruth truth = sample_mixture(scenario, omegas);

  ModelParams params;
  params.K = 2;
  params.pi = scenario.pi;
  params.mu = scenario.means;
  params.omega = omegas;

  // Bayes decisions straight from the generator's densities.
  long bayes_errors = 0;
  for (int i = 0; i < scenario.n; ++i) {
    double l0 = std::log(0.5) + oracle::log_density(truth.x.row(i).transpose(), params.mu[0],
                                                    params.omega[0]);
    double l1 = std::log(0.5) + oracle::log_density(truth.x.row(i).transpose(), params.mu[1],
                                                    params.omega[1]);
    int bayes = l1 > l0 ? 1 : 0;
    if (bayes != truth.labels[static_cast<std::size_t>(i)]) ++bayes_errors;
  }
  double bayes_rate = static_cast<double>(bayes_errors) / scenario.n;

  std::vector<int> est = classify(truth.x, params);
  long errors = 0;
  for (int i = 0; i < scenario.n; ++i) {
    if (est[static_cast<std::size_t>(i)] != truth.labels[static_cast<std::size_t>(i)]) ++errors;
  }
  double rate = static_cast<double>(errors) / scenario.n;
  CHECK(rate <= bayes_rate + 0.05);
}

TEST_CASE("d0 counting") {
  ModelParams dense;
  dense.K = 1;
  dense.pi = Vector::Ones(1);
  dense.mu = {Vector::Zero(2)};
  Matrix omega(2, 2);
  omega << 1, 0.5, 0.5, 1;
  dense.omega = {omega};
  CHECK(parameter_count_d0(dense) == 5);

  ModelParams diag;
  diag.K = 2;
  diag.pi = Vector::Constant(2, 0.5);
  diag.mu = {Vector::Zero(3), Vector::Zero(3)};
  diag.omega = {Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
  CHECK(parameter_count_d0(diag) == 13);

  CHECK(modified_bic(-10.0, 5, 100) ==
        doctest::Approx(-20.0 - 5.0 * std::log(100.0)).epsilon(1e-14));
}

TEST_CASE("lambda_grid collapses when the starting covariances are the identity") {
  Matrix x(4, 2);
  x << 1, 1, 1, -1, -1, 1, -1, -1;  // mean 0, covariance exactly I
  std::vector<int> one_cluster(4, 0);
  auto grid = lambda_grid(x, one_cluster, 5);
  for (double v : grid) CHECK(v == 0.0);
}

TEST_CASE("lambda_grid upper bound formula") {
  // Construct 10 points whose sample covariance is exactly [[1, .5], [.5, 1]].
  Matrix base(10, 2);
  std::mt19937_64 rng(55);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 2; ++j) base(i, j) = gauss(rng);
  }
  Eigen::RowVectorXd mean = base.colwise().mean();
  Matrix centered = base.rowwise() - mean;
  Matrix s = (centered.transpose() * centered) / 10.0;
  Eigen::LLT<Matrix> llt(s);
  Matrix whitened = llt.matrixL().solve(centered.transpose()).transpose();
  Matrix target(2, 2);
  target << 1, 0.5, 0.5, 1;
  Eigen::LLT<Matrix> tllt(target);
  Matrix shaped = whitened * tllt.matrixL().transpose();

  std::vector<int> labels(10, 0);
  auto grid = lambda_grid(shaped, labels, 3);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(grid[1] == doctest::Approx(1.25).epsilon(1e-9));

  auto single = lambda_grid(shaped, labels, 1);
  CHECK(single == std::vector<double>{0.0});
}

TEST_CASE("EM objective trace is non-decreasing across seeds") {
  for (std::uint64_t seed : {61, 62, 63}) {
    auto sd = make_scenario("equal-edges", seed);
    Matrix x = sd.truth.x.topRows(400);
    FitConfig config;
    config.seed = seed;
    for (double lambda : {1.0, 15.0}) {
      FitReport report = fit(x, 3, lambda, PenaltyStrategy::RiemannianToDiag, config);
      for (std::size_t i = 1; i < report.objective_trace.size(); ++i) {
        double prev = report.objective_trace[i - 1];
        CHECK(report.objective_trace[i] >= prev - 1e-8 * std::abs(prev));
      }
    }
  }
}

TEST_CASE("all-ones fit trace matches the common-penalty objective per iteration") {
  auto sd = make_scenario("diff-edges", 64);
  Matrix x = sd.truth.x.topRows(250);
  FitConfig config;
  config.seed = 7;
  std::vector<double> oracle_trace;
  config.iteration_observer = [&](int, const ModelParams& params, double) {
    oracle_trace.push_back(oracle::common_penalty_objective(x, params, 3.0));
  };
  FitReport report = fit(x, 3, 3.0, PenaltyStrategy::AllOnes, config);
  REQUIRE(oracle_trace.size() == report.objective_trace.size());
  for (std::size_t i = 0; i < oracle_trace.size(); ++i) {
    double scale = std::max({1.0, std::abs(oracle_trace[i]), std::abs(report.objective_trace[i])});
    CHECK(std::abs(oracle_trace[i] - report.objective_trace[i]) / scale < 1e-12);
  }
}

TEST_CASE("label permutation of the starting partition relabels the fit") {
  auto sd = make_scenario("diff-edges", 65);
  Matrix x = sd.truth.x.topRows(300);
  FitConfig config;
  config.seed = 12;
  FitInit init = prepare_fit(x, 3, PenaltyStrategy::InverseWeight, config);

  std::vector<int> permuted = init.partition;
  for (int& l : permuted) l = (l + 1) % 3;
  FitConfig permuted_config = config;
  permuted_config.partition = permuted;

  FitConfig base_config = config;
  base_config.partition = init.partition;

  FitReport a = fit(x, 3, 6.0, PenaltyStrategy::InverseWeight, base_config);
  FitReport b = fit(x, 3, 6.0, PenaltyStrategy::InverseWeight, permuted_config);
  CHECK(a.penalized_loglik == doctest::Approx(b.penalized_loglik).epsilon(1e-10));
  CHECK(a.bic == doctest::Approx(b.bic).epsilon(1e-10));
  CHECK(ari(classify(x, a.params), classify(x, b.params)) == doctest::Approx(1.0));
}

TEST_CASE("fit_path single point equals fit") {
  auto sd = make_scenario("diff-edges", 66);
  Matrix x = sd.truth.x.topRows(200);
  FitConfig config;
  config.seed = 2;
  auto path = fit_path(x, 3, {4.0}, PenaltyStrategy::AllOnes, config);
  REQUIRE(path.size() == 1);
  REQUIRE(path[0].report.has_value());
  FitReport direct = fit(x, 3, 4.0, PenaltyStrategy::AllOnes, config);
  CHECK(path[0].report->penalized_loglik == direct.penalized_loglik);
  CHECK(path[0].report->bic == direct.bic);
}

TEST_CASE("model_search returns the full table and the best BIC fit") {
  auto sd = make_scenario("diff-edges", 67);
  Matrix x = sd.truth.x.topRows(350);
  FitConfig config;
  config.seed = 6;
  SearchResult result = model_search(x, {2, 3}, PenaltyStrategy::AllOnes, config, 4, 2);
  CHECK(result.table.size() == 8);
  double best_bic = -std::numeric_limits<double>::infinity();
  for (const SearchCandidate& c : result.table) {
    if (c.report) best_bic = std::max(best_bic, c.report->bic);
  }
  CHECK(result.best.bic == best_bic);

  // Single candidate reduces to a plain fit.
  SearchResult single = model_search(x, {3}, PenaltyStrategy::AllOnes, config, 1, 1);
  FitReport direct = fit(x, 3, 0.0, PenaltyStrategy::AllOnes, config);
  CHECK(single.best.penalized_loglik == direct.penalized_loglik);
}

TEST_CASE("model_search is deterministic across worker counts") {
  auto sd = make_scenario("diff-edges", 68);
  Matrix x = sd.truth.x.topRows(250);
  FitConfig config;
  config.seed = 10;
  SearchResult a = model_search(x, {2, 3, 4}, PenaltyStrategy::FrobeniusToDiag, config, 3, 1);
  SearchResult b = model_search(x, {2, 3, 4}, PenaltyStrategy::FrobeniusToDiag, config, 3, 8);
  REQUIRE(a.table.size() == b.table.size());
  for (std::size_t i = 0; i < a.table.size(); ++i) {
    CHECK(a.table[i].K == b.table[i].K);
    CHECK(a.table[i].lambda == b.table[i].lambda);
    CHECK(a.table[i].report.has_value() == b.table[i].report.has_value());
    if (a.table[i].report) {
      CHECK(a.table[i].report->bic == b.table[i].report->bic);
      CHECK(a.table[i].report->penalized_loglik == b.table[i].report->penalized_loglik);
    }
  }
}
