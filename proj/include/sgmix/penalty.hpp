// Group-wise penalty construction: reference precision matrices estimated
// from labeled subsets or from an initial partition, and the per-component
// weight matrices P_k derived from them under each strategy.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sgmix/glasso.hpp"
#include "sgmix/spd.hpp"

namespace sgmix {

enum class PenaltyStrategy {
  AllOnes,               // common penalty, P_k = ones - I
  InverseWeight,         // P_k,ij = 1 / (|omega0_k,ij| + eps)
  FrobeniusToDiag,       // P_k = 1 / D_F(omega0_k, diag(omega0_k))
  RiemannianToDiag,      // P_k = 1 / D_R(omega0_k, diag(omega0_k))
  FrobeniusToIdentity,   // P_k = 1 / D_F(omega0_k, I)
  RiemannianToIdentity,  // P_k = 1 / D_R(omega0_k, I)
};

// CLI names: zhou | inverse | frob-diag | riem-diag | frob-id | riem-id.
std::string strategy_name(PenaltyStrategy strategy);
std::optional<PenaltyStrategy> parse_strategy(std::string_view name);

enum class InitMethod { KMeans, DiagGmm };

enum class ReferenceProvenance { LabeledSubsets, InitialPartition };

struct ReferenceConfig {
  InitMethod init_method = InitMethod::KMeans;
  int kmeans_restarts = 10;
  int kmeans_max_iterations = 100;
  std::uint64_t seed = 0;
  GlassoOptions glasso;  // used for the m_k <= p (or singular) fallback
};

struct ReferencePrecisions {
  std::vector<Matrix> omegas0;
  ReferenceProvenance provenance = ReferenceProvenance::InitialPartition;
  std::vector<int> per_class_sizes;
  std::vector<bool> from_glasso;

  int num_components() const { return static_cast<int>(omegas0.size()); }
  bool any_from_glasso() const;
};

struct PenaltyPlan {
  PenaltyStrategy strategy = PenaltyStrategy::AllOnes;
  std::vector<Matrix> weights;  // symmetric, entrywise >= 0, zero diagonal
  double lambda = 0.0;
};

struct DegeneratePartitionError : std::runtime_error {
  int component;
  explicit DegeneratePartitionError(int k, const std::string& what)
      : std::runtime_error(what), component(k) {}
};

inline constexpr int kUnlabeled = -1;

// Partition of the rows of x into K clusters: k-means with seeded restarts
// by default, or a diagonal-covariance Gaussian mixture when configured.
std::vector<int> initial_partition(const Eigen::Ref<const Matrix>& x, int K,
                                   const ReferenceConfig& config);

// Uniform rate-based penalty for reference estimation when the class sample
// covariance cannot be inverted: lambda0 = sqrt(log p / m_k) applied on the
// correlation scale, R_ij = lambda0 * sqrt(S_ii S_jj), zero diagonal.
Matrix reference_glasso_penalty(const Eigen::Ref<const Matrix>& s, int m_k);

// Reference precisions per class. `partition` may be complete, contain
// kUnlabeled entries (only labeled rows are used), or be empty (an initial
// partition is computed first). Classes with m_k > p and an invertible
// sample covariance use its inverse; otherwise a graphical-lasso estimate.
ReferencePrecisions init_reference_precisions(const Eigen::Ref<const Matrix>& x,
                                              const std::vector<int>& partition, int K,
                                              const ReferenceConfig& config);

std::vector<Matrix> build_penalty_matrices(const ReferencePrecisions& ref,
                                           PenaltyStrategy strategy,
                                           double epsilon_guard = 1e-8);

}  // namespace sgmix
