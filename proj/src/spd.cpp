#include "sgmix/spd.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace sgmix {

namespace {

void require_square(const Eigen::Ref<const Matrix>& m, const char* who) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(who) + ": matrix is not square");
  }
}

void require_finite(const Eigen::Ref<const Matrix>& m, const char* who) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite entries");
  }
}

}  // namespace

Matrix symmetric_part(const Eigen::Ref<const Matrix>& m) {
  Matrix s = m.selfadjointView<Eigen::Upper>();
  return s;
}

Matrix symmetrize(const Eigen::Ref<const Matrix>& m) { return 0.5 * (m + m.transpose()); }

bool is_symmetric(const Eigen::Ref<const Matrix>& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

LogDetResult cholesky_logdet(const Eigen::Ref<const Matrix>& m) {
  require_square(m, "cholesky_logdet");
  require_finite(m, "cholesky_logdet");
  Eigen::LLT<Matrix> llt(symmetric_part(m));
  if (llt.info() != Eigen::Success) return {0.0, false};
  double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  if (!std::isfinite(log_det)) return {0.0, false};
  return {log_det, true};
}

Matrix invert_spd(const Eigen::Ref<const Matrix>& m) {
  require_square(m, "invert_spd");
  require_finite(m, "invert_spd");
  const Eigen::Index p = m.rows();
  Eigen::LLT<Matrix> llt(symmetric_part(m));
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("invert_spd: matrix is not positive definite");
  }
  Vector pivots = llt.matrixL().toDenseMatrix().diagonal();
  double ratio = pivots.maxCoeff() / pivots.minCoeff();
  if (ratio > 1e12) {
    std::cerr << "sgmix: invert_spd: pivot ratio " << ratio
              << " exceeds 1e12; result may be inaccurate\n";
  }
  Matrix inv = llt.solve(Matrix::Identity(p, p));
  return symmetrize(inv);
}

double spd_distance(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                    MetricKind metric) {
  require_square(a, "spd_distance");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("spd_distance: dimension mismatch");
  }
  require_finite(a, "spd_distance");
  require_finite(b, "spd_distance");
  Matrix sa = symmetric_part(a);
  Matrix sb = symmetric_part(b);
  if (metric == MetricKind::Frobenius) {
    return (sa - sb).norm();
  }
  if (!cholesky_logdet(sa).is_pd || !cholesky_logdet(sb).is_pd) {
    throw std::runtime_error("spd_distance: Riemannian metric requires positive definite inputs");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(sa, sb, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("spd_distance: generalized eigenvalue computation failed");
  }
  const Vector& ev = solver.eigenvalues();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= 0.0) {
      throw std::runtime_error("spd_distance: non-positive generalized eigenvalue");
    }
    double l = std::log(ev[i]);
    sum += l * l;
  }
  return std::sqrt(sum);
}

}  // namespace sgmix
