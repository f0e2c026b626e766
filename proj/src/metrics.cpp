#include "sgmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace sgmix {

EdgeCounts edge_f1(const Eigen::Ref<const Matrix>& omega_true,
                   const Eigen::Ref<const Matrix>& omega_hat, double zero_tol) {
  const Eigen::Index p = omega_true.rows();
  if (omega_true.cols() != p || omega_hat.rows() != p || omega_hat.cols() != p) {
    throw std::invalid_argument("edge_f1: dimension mismatch");
  }
  EdgeCounts counts;
  for (Eigen::Index j = 1; j < p; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const bool in_true = std::abs(omega_true(i, j)) > zero_tol;
      const bool in_hat = std::abs(omega_hat(i, j)) > zero_tol;
      if (in_true && in_hat) ++counts.tp;
      else if (!in_true && in_hat) ++counts.fp;
      else if (in_true && !in_hat) ++counts.fn;
    }
  }
  if (counts.tp + counts.fp + counts.fn == 0) {
    counts.f1 = 1.0;
  } else {
    counts.f1 = static_cast<double>(counts.tp) /
                (static_cast<double>(counts.tp) + 0.5 * static_cast<double>(counts.fp + counts.fn));
  }
  return counts;
}

namespace {

// Hungarian algorithm (potentials formulation) minimizing the total cost of
// a square assignment. Returns assignment[row] = column.
std::vector<int> hungarian_min(const std::vector<std::vector<long long>>& cost) {
  const int n = static_cast<int>(cost.size());
  const long long inf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(static_cast<std::size_t>(n + 1), 0), v(static_cast<std::size_t>(n + 1), 0);
  std::vector<int> way(static_cast<std::size_t>(n + 1), 0), match(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<long long> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      int i0 = match[static_cast<std::size_t>(j0)], j1 = 0;
      long long delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        long long cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                        u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return assignment;
}

long long max_assignment_total(const std::vector<std::vector<long long>>& gain) {
  const int n = static_cast<int>(gain.size());
  long long top = 0;
  for (const auto& row : gain) {
    for (long long g : row) top = std::max(top, g);
  }
  std::vector<std::vector<long long>> cost(gain.size(),
                                           std::vector<long long>(gain.size(), 0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          top - gain[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  std::vector<int> assign = hungarian_min(cost);
  long long total = 0;
  for (int i = 0; i < n; ++i) {
    total += gain[static_cast<std::size_t>(i)][static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
  }
  return total;
}

}  // namespace

ComponentMatching match_components(const std::vector<int>& true_labels,
                                   const std::vector<int>& est_labels, int K) {
  if (true_labels.size() != est_labels.size()) {
    throw std::invalid_argument("match_components: label length mismatch");
  }
  if (K < 1) throw std::invalid_argument("match_components: K must be >= 1");
  ComponentMatching matching;
  matching.contingency.assign(static_cast<std::size_t>(K),
                              std::vector<long long>(static_cast<std::size_t>(K), 0));
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    int t = true_labels[i];
    int e = est_labels[i];
    if (t < 0 || t >= K || e < 0 || e >= K) {
      throw std::invalid_argument("match_components: label out of range");
    }
    ++matching.contingency[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)];
  }

  const long long best_total = max_assignment_total(matching.contingency);

  // Lexicographically smallest optimal permutation: fix columns greedily,
  // accepting a candidate only if the remaining subproblem can still reach
  // the optimum.
  matching.permutation.assign(static_cast<std::size_t>(K), -1);
  std::vector<bool> used(static_cast<std::size_t>(K), false);
  long long fixed_sum = 0;
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < K; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      std::vector<int> free_cols;
      for (int c = 0; c < K; ++c) {
        if (!used[static_cast<std::size_t>(c)] && c != j) free_cols.push_back(c);
      }
      long long rest = 0;
      if (!free_cols.empty()) {
        std::vector<std::vector<long long>> sub(free_cols.size(),
                                                std::vector<long long>(free_cols.size(), 0));
        for (int r = k + 1; r < K; ++r) {
          for (std::size_t c = 0; c < free_cols.size(); ++c) {
            sub[static_cast<std::size_t>(r - k - 1)][c] =
                matching.contingency[static_cast<std::size_t>(r)]
                                    [static_cast<std::size_t>(free_cols[c])];
          }
        }
        rest = max_assignment_total(sub);
      }
      long long candidate =
          fixed_sum + matching.contingency[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] +
          rest;
      if (candidate == best_total) {
        matching.permutation[static_cast<std::size_t>(k)] = j;
        used[static_cast<std::size_t>(j)] = true;
        fixed_sum += matching.contingency[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        break;
      }
    }
  }
  return matching;
}

EdgeRecoveryReport edge_recovery_report(const std::vector<Matrix>& truth,
                                        const std::vector<Matrix>& estimate,
                                        const ComponentMatching& matching, double zero_tol) {
  if (truth.size() != estimate.size() || truth.size() != matching.permutation.size()) {
    throw std::invalid_argument("edge_recovery_report: component count mismatch");
  }
  EdgeRecoveryReport report;
  double sum = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const int e = matching.permutation[k];
    report.per_component.push_back(edge_f1(truth[k], estimate[static_cast<std::size_t>(e)], zero_tol));
    sum += report.per_component.back().f1;
  }
  report.mean_f1 = sum / static_cast<double>(truth.size());
  return report;
}

double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("ari: label length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw std::invalid_argument("ari: need at least 2 observations");

  std::map<int, int> amap, bmap;
  for (int v : a) amap.emplace(v, static_cast<int>(amap.size()));
  for (int v : b) bmap.emplace(v, static_cast<int>(bmap.size()));
  const std::size_t ka = amap.size(), kb = bmap.size();
  std::vector<std::vector<long long>> table(ka, std::vector<long long>(kb, 0));
  for (std::size_t i = 0; i < n; ++i) {
    ++table[static_cast<std::size_t>(amap[a[i]])][static_cast<std::size_t>(bmap[b[i]])];
  }
  // Exact integer numerator and denominator with a single rounded division:
  // with doubled pair counts I2 = sum n_ij (n_ij - 1), A2/B2 the analogous
  // margin sums and N2 = n (n - 1),
  //   ARI = 2 (I2 N2 - A2 B2) / (N2 (A2 + B2) - 2 A2 B2).
  long long i2 = 0, a2 = 0, b2 = 0;
  std::vector<long long> rows(ka, 0), cols(kb, 0);
  for (std::size_t i = 0; i < ka; ++i) {
    for (std::size_t j = 0; j < kb; ++j) {
      i2 += table[i][j] * (table[i][j] - 1);
      rows[i] += table[i][j];
      cols[j] += table[i][j];
    }
  }
  for (long long r : rows) a2 += r * (r - 1);
  for (long long c : cols) b2 += c * (c - 1);
  const long long n2 = static_cast<long long>(n) * (static_cast<long long>(n) - 1);
  const __int128 numerator = 2 * (static_cast<__int128>(i2) * n2 - static_cast<__int128>(a2) * b2);
  const __int128 denominator =
      static_cast<__int128>(n2) * (a2 + b2) - 2 * static_cast<__int128>(a2) * b2;
  if (denominator == 0) {
    // Both partitions trivial in the same way (all-one-cluster or all
    // singletons); they are identical up to relabeling.
    return 1.0;
  }
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

MfdResult median_frobenius_distance(const std::vector<Matrix>& omega_hat,
                                    const std::vector<std::optional<Matrix>>& omega_bar,
                                    const ComponentMatching& matching) {
  if (omega_hat.size() != omega_bar.size() || omega_hat.size() != matching.permutation.size()) {
    throw std::invalid_argument("median_frobenius_distance: component count mismatch");
  }
  MfdResult result;
  std::vector<double> dists;
  for (std::size_t k = 0; k < omega_bar.size(); ++k) {
    if (!omega_bar[k]) {
      ++result.excluded;
      continue;
    }
    const Matrix& hat = omega_hat[static_cast<std::size_t>(matching.permutation[k])];
    if (hat.rows() != omega_bar[k]->rows()) {
      throw std::invalid_argument("median_frobenius_distance: dimension mismatch");
    }
    dists.push_back((hat - *omega_bar[k]).norm());
  }
  if (dists.empty()) {
    result.value = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  result.value = (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  return result;
}

std::vector<std::optional<Matrix>> empirical_class_precisions(const Eigen::Ref<const Matrix>& x,
                                                              const std::vector<int>& labels,
                                                              int K) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (labels.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("empirical_class_precisions: label length mismatch");
  }
  std::vector<std::optional<Matrix>> result(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] == k) members.push_back(i);
    }
    if (members.size() < 2) continue;
    Matrix xk(members.size(), p);
    for (std::size_t i = 0; i < members.size(); ++i) {
      xk.row(static_cast<Eigen::Index>(i)) = x.row(members[i]);
    }
    Eigen::RowVectorXd mean = xk.colwise().mean();
    Matrix centered = xk.rowwise() - mean;
    Matrix s = symmetrize((centered.transpose() * centered) / static_cast<double>(members.size()));
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) continue;
    Vector pivots = llt.matrixL().toDenseMatrix().diagonal();
    if (pivots.minCoeff() <= 0.0 || pivots.maxCoeff() / pivots.minCoeff() > 1e12) continue;
    result[static_cast<std::size_t>(k)] = symmetrize(llt.solve(Matrix::Identity(p, p)));
  }
  return result;
}

}  // namespace sgmix
