// Dense symmetric positive definite kernels: factorization, inversion and
// the two matrix distances used to build penalty weights. The upper
// triangle of every input is authoritative; the lower triangle is ignored.
#pragma once

#include <Eigen/Dense>

namespace sgmix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class MetricKind { Frobenius, Riemannian };

struct LogDetResult {
  double log_det = 0.0;
  bool is_pd = false;
};

// Full symmetric copy built from the upper triangle.
Matrix symmetric_part(const Eigen::Ref<const Matrix>& m);

// Exact symmetrization (m + m^T) / 2, for killing round-off asymmetry.
Matrix symmetrize(const Eigen::Ref<const Matrix>& m);

bool is_symmetric(const Eigen::Ref<const Matrix>& m, double tol = 1e-10);

// Cholesky log-determinant; is_pd is false when a pivot fails, in which
// case log_det is unspecified. Throws std::invalid_argument on non-finite
// entries.
LogDetResult cholesky_logdet(const Eigen::Ref<const Matrix>& m);

// Inverse of a positive definite matrix via Cholesky. Throws
// std::runtime_error when the factorization fails; warns on stderr when
// the pivot ratio exceeds 1e12 (ill-conditioned but still solvable).
Matrix invert_spd(const Eigen::Ref<const Matrix>& m);

// Frobenius: sqrt(sum_ij (A_ij - B_ij)^2).
// Riemannian: affine-invariant metric, sqrt(sum_i log^2 lambda_i) with
// lambda_i the generalized eigenvalues of the pencil (A, B); both inputs
// must be positive definite.
double spd_distance(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                    MetricKind metric);

}  // namespace sgmix
