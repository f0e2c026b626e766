#include "sgmix/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "sgmix/util.hpp"

namespace sgmix {

Matrix random_sparse_precision(int p, double edge_prob, std::mt19937_64& rng,
                              const PrecisionGenOptions& options) {
  if (p < 1) throw std::invalid_argument("random_sparse_precision: p must be >= 1");
  if (edge_prob < 0.0 || edge_prob > 1.0) {
    throw std::invalid_argument("random_sparse_precision: edge_prob must be in [0, 1]");
  }
  if (options.weight_min <= 0.0 || options.weight_max < options.weight_min ||
      options.dominance_margin <= 0.0) {
    throw std::invalid_argument("random_sparse_precision: invalid generator options");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix omega = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      if (unit(rng) < edge_prob) {
        double mag = options.weight_min + unit(rng) * (options.weight_max - options.weight_min);
        double value = unit(rng) < 0.5 ? -mag : mag;
        omega(i, j) = value;
        omega(j, i) = value;
      }
    }
  }
  for (int i = 0; i < p; ++i) {
    omega(i, i) = omega.row(i).cwiseAbs().sum() + options.dominance_margin;
  }
  return omega;
}

GroundTruth sample_mixture(const SyntheticScenario& scenario, const std::vector<Matrix>& omegas) {
  const int n = scenario.n;
  const int p = scenario.p;
  const int K = scenario.K;
  if (n < 1 || p < 1 || K < 1) throw std::invalid_argument("sample_mixture: invalid scenario");
  if (scenario.pi.size() != K || scenario.means.size() != static_cast<std::size_t>(K) ||
      omegas.size() != static_cast<std::size_t>(K)) {
    throw std::invalid_argument("sample_mixture: component count mismatch");
  }
  if ((scenario.pi.array() < 0.0).any() || std::abs(scenario.pi.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("sample_mixture: pi is not a probability vector");
  }

  // Cholesky factors of the component covariances.
  std::vector<Matrix> chol;
  chol.reserve(static_cast<std::size_t>(K));
  for (const Matrix& omega : omegas) {
    if (omega.rows() != p) throw std::invalid_argument("sample_mixture: dimension mismatch");
    Matrix sigma = invert_spd(omega);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("sample_mixture: component covariance is not positive definite");
    }
    chol.push_back(llt.matrixL());
  }

  std::mt19937_64 rng(derive_seed(scenario.seed, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  GroundTruth truth;
  truth.omegas = omegas;
  truth.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double u = unit(rng);
    double acc = 0.0;
    int z = K - 1;
    for (int k = 0; k < K; ++k) {
      acc += scenario.pi[k];
      if (u < acc) {
        z = k;
        break;
      }
    }
    truth.labels[static_cast<std::size_t>(i)] = z;
  }
  truth.x.resize(n, p);
  Vector noise(p);
  for (int i = 0; i < n; ++i) {
    const int z = truth.labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < p; ++j) noise[j] = gauss(rng);
    truth.x.row(i) =
        (scenario.means[static_cast<std::size_t>(z)] + chol[static_cast<std::size_t>(z)] * noise)
            .transpose();
  }
  return truth;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "equal-edges", "diff-edges", "highdim-diff-edges", "zero-mean-diff-edges", "p-ge-n"};
  return names;
}

SyntheticScenario scenario_config(const std::string& name, std::uint64_t seed,
                                  int p_override) {
  SyntheticScenario sc;
  sc.seed = seed;
  sc.name = name;
  if (name == "equal-edges" || name == "diff-edges" || name == "zero-mean-diff-edges") {
    sc.n = 1500;
    sc.p = 20;
    sc.K = 3;
    sc.pi = Vector::Constant(3, 1.0 / 3.0);
    if (name == "equal-edges") {
      sc.edge_probs = {0.5, 0.5, 0.5};
    } else {
      sc.edge_probs = {0.1, 0.8, 0.4};
    }
    if (name == "zero-mean-diff-edges") {
      sc.means = {Vector::Zero(sc.p), Vector::Zero(sc.p), Vector::Zero(sc.p)};
    } else {
      sc.means = {Vector::Constant(sc.p, -1.5), Vector::Zero(sc.p), Vector::Constant(sc.p, 1.5)};
    }
  } else if (name == "highdim-diff-edges") {
    sc.n = 1500;
    sc.p = 100;
    sc.K = 3;
    sc.pi = Vector::Constant(3, 1.0 / 3.0);
    sc.edge_probs = {0.1, 0.8, 0.4};
    sc.means = {Vector::Constant(sc.p, 5.0), Vector::Zero(sc.p), Vector::Constant(sc.p, 5.0)};
  } else if (name == "p-ge-n") {
    sc.n = 100;
    sc.p = p_override > 0 ? p_override : 100;
    if (sc.p != 100 && sc.p != 200) {
      throw std::invalid_argument("make_scenario: p-ge-n supports p in {100, 200}");
    }
    sc.K = 2;
    sc.pi = Vector::Constant(2, 0.5);
    sc.edge_probs = {0.1, 0.8};
    sc.means = {Vector::Constant(sc.p, -1.5), Vector::Constant(sc.p, 1.5)};
  } else {
    throw std::invalid_argument("make_scenario: unknown scenario '" + name + "'");
  }
  if (p_override > 0 && name != "p-ge-n") {
    throw std::invalid_argument("make_scenario: p is fixed for scenario '" + name + "'");
  }
  return sc;
}

ScenarioData make_scenario(const std::string& name, std::uint64_t seed, int p_override) {
  SyntheticScenario sc = scenario_config(name, seed, p_override);
  ScenarioData data;
  data.scenario = sc;
  std::vector<Matrix> omegas;
  omegas.reserve(static_cast<std::size_t>(sc.K));
  for (int k = 0; k < sc.K; ++k) {
    std::mt19937_64 rng(derive_seed(seed, 100 + static_cast<std::uint64_t>(k)));
    omegas.push_back(
        random_sparse_precision(sc.p, sc.edge_probs[static_cast<std::size_t>(k)], rng));
  }
  data.truth = sample_mixture(sc, omegas);
  return data;
}

}  // namespace sgmix
