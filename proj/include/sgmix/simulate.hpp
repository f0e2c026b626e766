// Synthetic data generation: sparse precision matrices from Erdos-Renyi
// graph structures and labeled Gaussian mixture samples for the named
// benchmark scenarios.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sgmix/spd.hpp"

namespace sgmix {

struct PrecisionGenOptions {
  double weight_min = 0.5;
  double weight_max = 1.0;
  double dominance_margin = 0.1;
};

// Precision matrix whose zero pattern is exactly a G(p, edge_prob) draw.
// Edge weights are uniform on [-w_max, -w_min] U [w_min, w_max]; the
// diagonal is the row-wise absolute off-diagonal sum plus the dominance
// margin, so the matrix is strictly diagonally dominant and hence PD.
Matrix random_sparse_precision(int p, double edge_prob, std::mt19937_64& rng,
                              const PrecisionGenOptions& options = {});

struct SyntheticScenario {
  int n = 0;
  int p = 0;
  int K = 0;
  Vector pi;
  std::vector<Vector> means;
  std::vector<double> edge_probs;
  std::uint64_t seed = 0;
  std::string name;  // optional label
};

struct GroundTruth {
  std::vector<Matrix> omegas;
  std::vector<int> labels;  // 0-based component indices
  Matrix x;                 // n x p
};

// Labels ~ categorical(pi); x_i | k ~ N(mu_k, Omega_k^{-1}) sampled through
// the Cholesky factor of the covariance. Deterministic given scenario.seed.
GroundTruth sample_mixture(const SyntheticScenario& scenario, const std::vector<Matrix>& omegas);

struct ScenarioData {
  SyntheticScenario scenario;
  GroundTruth truth;
};

// Named configurations: equal-edges, diff-edges, highdim-diff-edges,
// zero-mean-diff-edges, p-ge-n. p_override applies to p-ge-n only
// (100 or 200); passing 0 keeps each scenario's default.
ScenarioData make_scenario(const std::string& name, std::uint64_t seed, int p_override = 0);

// Configuration of a named scenario without drawing any data.
SyntheticScenario scenario_config(const std::string& name, std::uint64_t seed,
                                  int p_override = 0);

const std::vector<std::string>& scenario_names();

}  // namespace sgmix
