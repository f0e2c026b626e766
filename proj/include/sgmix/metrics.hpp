// Evaluation metrics: edge-recovery F1, Adjusted Rand Index, optimal
// component-to-class matching and the median Frobenius distance between
// estimated and empirical class precisions.
#pragma once

#include <optional>
#include <vector>

#include "sgmix/spd.hpp"

namespace sgmix {

struct EdgeCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double f1 = 0.0;
};

// Edges are unordered off-diagonal pairs with |entry| > zero_tol. Both
// graphs empty counts as perfect recovery (f1 = 1).
EdgeCounts edge_f1(const Eigen::Ref<const Matrix>& omega_true,
                   const Eigen::Ref<const Matrix>& omega_hat, double zero_tol = 1e-12);

struct EdgeRecoveryReport {
  std::vector<EdgeCounts> per_component;
  double mean_f1 = 0.0;
};

struct ComponentMatching {
  // permutation[k] = index of the estimated component assigned to true
  // class k; a bijection on 0..K-1.
  std::vector<int> permutation;
  std::vector<std::vector<long long>> contingency;  // true class x estimated component
};

// Assignment maximizing the total matched count, by the Hungarian method on
// the negated contingency table; ties resolved to the lexicographically
// smallest permutation.
ComponentMatching match_components(const std::vector<int>& true_labels,
                                   const std::vector<int>& est_labels, int K);

// Per-true-class F1 of estimate[matching.permutation[k]] against truth[k].
EdgeRecoveryReport edge_recovery_report(const std::vector<Matrix>& truth,
                                        const std::vector<Matrix>& estimate,
                                        const ComponentMatching& matching,
                                        double zero_tol = 1e-12);

// Pair-counting adjusted-for-chance agreement between two partitions;
// labels may be arbitrary integers.
double ari(const std::vector<int>& a, const std::vector<int>& b);

struct MfdResult {
  double value = 0.0;  // NaN when every class was excluded
  int excluded = 0;    // classes whose empirical precision was unavailable
};

// Median over true classes k of ||omega_hat[perm(k)] - omega_bar[k]||_F;
// even counts use the midpoint convention. Entries of omega_bar without a
// value (singular empirical covariance) are excluded and counted.
MfdResult median_frobenius_distance(const std::vector<Matrix>& omega_hat,
                                    const std::vector<std::optional<Matrix>>& omega_bar,
                                    const ComponentMatching& matching);

// Inverse of each class MLE covariance computed from true labels; classes
// with fewer than 2 members or a singular covariance yield nullopt.
std::vector<std::optional<Matrix>> empirical_class_precisions(const Eigen::Ref<const Matrix>& x,
                                                              const std::vector<int>& labels,
                                                              int K);

}  // namespace sgmix
