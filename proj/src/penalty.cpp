#include "sgmix/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sgmix/util.hpp"

namespace sgmix {

std::string strategy_name(PenaltyStrategy strategy) {
  switch (strategy) {
    case PenaltyStrategy::AllOnes: return "zhou";
    case PenaltyStrategy::InverseWeight: return "inverse";
    case PenaltyStrategy::FrobeniusToDiag: return "frob-diag";
    case PenaltyStrategy::RiemannianToDiag: return "riem-diag";
    case PenaltyStrategy::FrobeniusToIdentity: return "frob-id";
    case PenaltyStrategy::RiemannianToIdentity: return "riem-id";
  }
  return "unknown";
}

std::optional<PenaltyStrategy> parse_strategy(std::string_view name) {
  if (name == "zhou") return PenaltyStrategy::AllOnes;
  if (name == "inverse") return PenaltyStrategy::InverseWeight;
  if (name == "frob-diag") return PenaltyStrategy::FrobeniusToDiag;
  if (name == "riem-diag") return PenaltyStrategy::RiemannianToDiag;
  if (name == "frob-id") return PenaltyStrategy::FrobeniusToIdentity;
  if (name == "riem-id") return PenaltyStrategy::RiemannianToIdentity;
  return std::nullopt;
}

bool ReferencePrecisions::any_from_glasso() const {
  return std::find(from_glasso.begin(), from_glasso.end(), true) != from_glasso.end();
}

namespace {

struct KMeansResult {
  std::vector<int> labels;
  double wcss = std::numeric_limits<double>::infinity();
};

Matrix kmeanspp_centers(const Eigen::Ref<const Matrix>& x, int K, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Matrix centers(K, p);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::Index first = static_cast<Eigen::Index>(unit(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  centers.row(0) = x.row(first);
  Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < K; ++k) {
    double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = unit(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::min(static_cast<Eigen::Index>(unit(rng) * static_cast<double>(n)), n - 1);
    }
    centers.row(k) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }
  return centers;
}

KMeansResult lloyd(const Eigen::Ref<const Matrix>& x, int K, int max_iterations,
                   std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Matrix centers = kmeanspp_centers(x, K, rng);
  KMeansResult result;
  result.labels.assign(static_cast<std::size_t>(n), 0);
  Matrix dists(n, K);
  for (int iter = 0; iter < max_iterations; ++iter) {
    for (int k = 0; k < K; ++k) {
      dists.col(k) = (x.rowwise() - centers.row(k)).rowwise().squaredNorm();
    }
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      for (int k = 1; k < K; ++k) {
        if (dists(i, k) < dists(i, best)) best = k;
      }
      if (result.labels[static_cast<std::size_t>(i)] != best) {
        result.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    centers.setZero();
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(K), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int k = result.labels[static_cast<std::size_t>(i)];
      centers.row(k) += x.row(i);
      ++counts[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < K; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) {
        centers.row(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);
      } else {
        // Re-seed an empty cluster at the point farthest from its center.
        Eigen::Index worst = 0;
        double worst_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          int c = result.labels[static_cast<std::size_t>(i)];
          double d = (x.row(i) - centers.row(c)).squaredNorm();
          if (d > worst_d) {
            worst_d = d;
            worst = i;
          }
        }
        centers.row(k) = x.row(worst);
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
  }
  result.wcss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    result.wcss += (x.row(i) - centers.row(result.labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  (void)p;
  return result;
}

std::vector<int> kmeans_partition(const Eigen::Ref<const Matrix>& x, int K,
                                  const ReferenceConfig& config) {
  KMeansResult best;
  for (int restart = 0; restart < std::max(1, config.kmeans_restarts); ++restart) {
    std::mt19937_64 rng(derive_seed(config.seed, 0x6b6d0000ULL + static_cast<std::uint64_t>(restart)));
    KMeansResult run = lloyd(x, K, config.kmeans_max_iterations, rng);
    if (run.wcss < best.wcss) best = std::move(run);
  }
  return best.labels;
}

struct DiagGmmRun {
  std::vector<int> labels;
  double loglik = -std::numeric_limits<double>::infinity();
};

// One diagonal-covariance Gaussian mixture EM from a hard starting
// partition, MAP-hardened.
DiagGmmRun diag_gmm_em(const Eigen::Ref<const Matrix>& x, int K,
                       const std::vector<int>& start) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  std::vector<int> labels = start;

  Matrix mu(K, p);
  Matrix var(K, p);
  Vector pi(K);
  const Vector global_var =
      (x.rowwise() - x.colwise().mean()).array().square().colwise().mean().transpose();
  const Vector var_floor = (global_var.array() * 1e-6 + 1e-12).matrix();

  std::vector<Eigen::Index> counts(static_cast<std::size_t>(K), 0);
  mu.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    int k = labels[static_cast<std::size_t>(i)];
    mu.row(k) += x.row(i);
    ++counts[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < K; ++k) {
    double c = std::max<double>(1.0, static_cast<double>(counts[static_cast<std::size_t>(k)]));
    mu.row(k) /= c;
    pi[k] = c / static_cast<double>(n);
  }
  var.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    int k = labels[static_cast<std::size_t>(i)];
    var.row(k) += (x.row(i) - mu.row(k)).array().square().matrix();
  }
  for (int k = 0; k < K; ++k) {
    double c = std::max<double>(1.0, static_cast<double>(counts[static_cast<std::size_t>(k)]));
    var.row(k) = ((var.row(k) / c).transpose().cwiseMax(var_floor)).transpose();
  }

  Matrix logdens(n, K);
  Matrix z(n, K);
  DiagGmmRun run;
  double prev = -std::numeric_limits<double>::infinity();
  const double log2pi = std::log(2.0 * M_PI);
  for (int iter = 0; iter < 200; ++iter) {
    for (int k = 0; k < K; ++k) {
      double norm = -0.5 * (static_cast<double>(p) * log2pi + var.row(k).array().log().sum());
      logdens.col(k) =
          (((x.rowwise() - mu.row(k)).array().square().rowwise() / var.row(k).array()).rowwise().sum() *
           -0.5) +
          norm + std::log(pi[k]);
    }
    double loglik = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double m = logdens.row(i).maxCoeff();
      double lse = m + std::log((logdens.row(i).array() - m).exp().sum());
      loglik += lse;
      z.row(i) = (logdens.row(i).array() - lse).exp();
    }
    run.loglik = loglik;
    Vector nk = z.colwise().sum();
    for (int k = 0; k < K; ++k) {
      double c = std::max(nk[k], 1e-10);
      pi[k] = c / static_cast<double>(n);
      mu.row(k) = (z.col(k).transpose() * x) / c;
      var.row(k) =
          ((z.col(k).transpose() * (x.rowwise() - mu.row(k)).array().square().matrix()) / c)
              .cwiseMax(var_floor.transpose());
    }
    if (iter > 0 && std::abs(loglik - prev) < 1e-8 * std::abs(prev)) break;
    prev = loglik;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int k = 1; k < K; ++k) {
      if (logdens(i, k) > logdens(i, best)) best = k;
    }
    run.labels.push_back(best);
  }
  return run;
}

// Diagonal-covariance Gaussian mixture, restarted EM with each restart
// seeded by one k-means run, best log-likelihood kept. Used for data whose
// clusters differ in scale rather than location, where k-means alone is
// uninformative.
std::vector<int> diag_gmm_partition(const Eigen::Ref<const Matrix>& x, int K,
                                    const ReferenceConfig& config) {
  DiagGmmRun best;
  for (int restart = 0; restart < std::max(1, config.kmeans_restarts); ++restart) {
    std::mt19937_64 rng(
        derive_seed(config.seed, 0x6b6d0000ULL + static_cast<std::uint64_t>(restart)));
    KMeansResult seed_run = lloyd(x, K, config.kmeans_max_iterations, rng);
    DiagGmmRun run = diag_gmm_em(x, K, seed_run.labels);
    if (run.loglik > best.loglik) best = std::move(run);
  }
  return best.labels;
}

}  // namespace

std::vector<int> initial_partition(const Eigen::Ref<const Matrix>& x, int K,
                                   const ReferenceConfig& config) {
  if (K < 1) throw std::invalid_argument("initial_partition: K must be >= 1");
  if (x.rows() < K) throw std::invalid_argument("initial_partition: fewer rows than clusters");
  if (K == 1) return std::vector<int>(static_cast<std::size_t>(x.rows()), 0);
  if (config.init_method == InitMethod::DiagGmm) return diag_gmm_partition(x, K, config);
  return kmeans_partition(x, K, config);
}

Matrix reference_glasso_penalty(const Eigen::Ref<const Matrix>& s, int m_k) {
  const Eigen::Index p = s.rows();
  double lambda0 = std::sqrt(std::log(std::max<double>(2.0, static_cast<double>(p))) /
                             static_cast<double>(m_k));
  Matrix r(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      r(i, j) = (i == j) ? 0.0 : lambda0 * std::sqrt(s(i, i) * s(j, j));
    }
  }
  return r;
}

ReferencePrecisions init_reference_precisions(const Eigen::Ref<const Matrix>& x,
                                              const std::vector<int>& partition, int K,
                                              const ReferenceConfig& config) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (K < 1) throw std::invalid_argument("init_reference_precisions: K must be >= 1");
  if (n < K) throw std::invalid_argument("init_reference_precisions: fewer rows than classes");

  std::vector<int> labels;
  ReferencePrecisions ref;
  if (partition.empty()) {
    labels = initial_partition(x, K, config);
    ref.provenance = ReferenceProvenance::InitialPartition;
  } else {
    if (partition.size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument("init_reference_precisions: partition length mismatch");
    }
    labels = partition;
    ref.provenance = ReferenceProvenance::LabeledSubsets;
    for (int l : labels) {
      if (l != kUnlabeled && (l < 0 || l >= K)) {
        throw std::invalid_argument("init_reference_precisions: label out of range");
      }
    }
  }

  for (int k = 0; k < K; ++k) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] == k) members.push_back(i);
    }
    const int m_k = static_cast<int>(members.size());
    if (m_k < 2) {
      throw DegeneratePartitionError(
          k, "init_reference_precisions: class " + std::to_string(k) + " has " +
             std::to_string(m_k) + " member(s); at least 2 required");
    }
    Matrix xk(m_k, p);
    for (int i = 0; i < m_k; ++i) xk.row(i) = x.row(members[static_cast<std::size_t>(i)]);
    Eigen::RowVectorXd mean = xk.colwise().mean();
    Matrix centered = xk.rowwise() - mean;
    Matrix s = symmetrize((centered.transpose() * centered) / static_cast<double>(m_k));

    bool use_glasso = m_k <= p;
    Matrix omega;
    if (!use_glasso) {
      Eigen::LLT<Matrix> llt(s);
      if (llt.info() == Eigen::Success &&
          llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0) {
        omega = symmetrize(llt.solve(Matrix::Identity(p, p)));
      } else {
        use_glasso = true;
      }
    }
    if (use_glasso) {
      if ((s.diagonal().array() <= 0.0).any()) {
        throw DegeneratePartitionError(
            k, "init_reference_precisions: class " + std::to_string(k) +
               " has a zero-variance coordinate");
      }
      omega = weighted_glasso(s, reference_glasso_penalty(s, m_k), config.glasso).omega;
    }
    ref.omegas0.push_back(std::move(omega));
    ref.per_class_sizes.push_back(m_k);
    ref.from_glasso.push_back(use_glasso);
  }
  return ref;
}

std::vector<Matrix> build_penalty_matrices(const ReferencePrecisions& ref,
                                           PenaltyStrategy strategy, double epsilon_guard) {
  if (ref.omegas0.empty()) {
    throw std::invalid_argument("build_penalty_matrices: no reference precisions");
  }
  if (epsilon_guard <= 0.0) {
    throw std::invalid_argument("build_penalty_matrices: epsilon_guard must be positive");
  }
  const Eigen::Index p = ref.omegas0.front().rows();
  std::vector<Matrix> weights;
  weights.reserve(ref.omegas0.size());
  for (const Matrix& omega0 : ref.omegas0) {
    if (omega0.rows() != p || omega0.cols() != p) {
      throw std::invalid_argument("build_penalty_matrices: reference dimension mismatch");
    }
    if (!is_symmetric(omega0, 1e-8)) {
      throw std::invalid_argument("build_penalty_matrices: reference is not symmetric");
    }
    Matrix w = Matrix::Zero(p, p);
    switch (strategy) {
      case PenaltyStrategy::AllOnes:
        w.setOnes();
        break;
      case PenaltyStrategy::InverseWeight: {
        const double eps = ref.any_from_glasso() ? epsilon_guard : 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
          for (Eigen::Index i = 0; i < p; ++i) {
            // eps == 0 with a zero reference entry yields +inf; the solver
            // caps effective penalties, keeping arithmetic finite.
            w(i, j) = 1.0 / (std::abs(omega0(i, j)) + eps);
          }
        }
        break;
      }
      case PenaltyStrategy::FrobeniusToDiag:
      case PenaltyStrategy::RiemannianToDiag: {
        MetricKind metric = strategy == PenaltyStrategy::FrobeniusToDiag
                                ? MetricKind::Frobenius
                                : MetricKind::Riemannian;
        Matrix target = omega0.diagonal().asDiagonal();
        double d = spd_distance(omega0, target, metric);
        w.setConstant(1.0 / std::max(d, epsilon_guard));
        break;
      }
      case PenaltyStrategy::FrobeniusToIdentity:
      case PenaltyStrategy::RiemannianToIdentity: {
        MetricKind metric = strategy == PenaltyStrategy::FrobeniusToIdentity
                                ? MetricKind::Frobenius
                                : MetricKind::Riemannian;
        double d = spd_distance(omega0, Matrix::Identity(p, p), metric);
        w.setConstant(1.0 / std::max(d, epsilon_guard));
        break;
      }
    }
    w.diagonal().setZero();
    weights.push_back(std::move(w));
  }
  return weights;
}

}  // namespace sgmix
