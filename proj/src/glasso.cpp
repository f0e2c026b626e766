#include "sgmix/glasso.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sgmix {

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Effective penalty: symmetrized, capped, diagonal zeroed unless requested.
Matrix effective_penalty(const Matrix& s, const Matrix& r, bool penalize_diagonal) {
  const Eigen::Index p = s.rows();
  double cap = glasso_penalty_cap(s);
  Matrix eff(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      double v = r(i, j);
      if (std::isnan(v) || v < 0.0) {
        throw std::invalid_argument("weighted_glasso: penalty entries must be nonnegative");
      }
      eff(i, j) = std::min(v, cap);
    }
  }
  eff = symmetrize(eff);
  if (!penalize_diagonal) eff.diagonal().setZero();
  return eff;
}

Matrix snap_zeros(Matrix omega) {
  const Eigen::Index p = omega.rows();
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i != j && std::abs(omega(i, j)) < kGlassoZeroTol) omega(i, j) = 0.0;
    }
  }
  return omega;
}

}  // namespace

double glasso_penalty_cap(const Eigen::Ref<const Matrix>& s) {
  return 1e3 * s.cwiseAbs().maxCoeff();
}

GlassoSolution weighted_glasso(const Eigen::Ref<const Matrix>& s_in,
                               const Eigen::Ref<const Matrix>& r_in,
                               const GlassoOptions& opts) {
  const Eigen::Index p = s_in.rows();
  if (s_in.cols() != p || r_in.rows() != p || r_in.cols() != p) {
    throw std::invalid_argument("weighted_glasso: dimension mismatch");
  }
  if (!s_in.allFinite()) {
    throw std::invalid_argument("weighted_glasso: non-finite covariance entries");
  }
  Matrix s = symmetric_part(s_in);
  if ((s.diagonal().array() <= 0.0).any()) {
    throw std::invalid_argument("weighted_glasso: covariance diagonal must be strictly positive");
  }
  if (opts.tolerance <= 0.0 || opts.max_iterations < 1) {
    throw std::invalid_argument("weighted_glasso: invalid options");
  }
  Matrix r = effective_penalty(s, symmetric_part(r_in), opts.penalize_diagonal);

  GlassoSolution sol;
  if (p == 1) {
    double sigma = s(0, 0) + r(0, 0);
    sol.sigma = Matrix::Constant(1, 1, sigma);
    sol.omega = Matrix::Constant(1, 1, 1.0 / sigma);
    sol.converged = true;
    return sol;
  }

  // Unpenalized off-diagonals admit the exact solution (S + diag(R))^{-1}.
  bool offdiag_penalized = false;
  for (Eigen::Index j = 0; j < p && !offdiag_penalized; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i != j && r(i, j) > 0.0) {
        offdiag_penalized = true;
        break;
      }
    }
  }
  if (!offdiag_penalized) {
    Matrix w = s;
    w.diagonal() += r.diagonal();
    Eigen::LLT<Matrix> llt(w);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error(
          "weighted_glasso: covariance is singular and off-diagonals are unpenalized");
    }
    sol.sigma = w;
    sol.omega = snap_zeros(symmetrize(llt.solve(Matrix::Identity(p, p))));
    sol.converged = true;
    return sol;
  }

  // Working covariance W and per-column lasso coefficients B. Column j of B
  // holds beta for the row problem of column j (entry at row j unused).
  Matrix w = s;
  w.diagonal() += r.diagonal();
  Matrix beta = Matrix::Zero(p, p);
  if (opts.warm_start) {
    const Matrix& omega0 = opts.warm_start->omega;
    const Matrix& sigma0 = opts.warm_start->sigma;
    if (omega0.rows() != p || sigma0.rows() != p) {
      throw std::invalid_argument("weighted_glasso: warm start dimension mismatch");
    }
    Matrix w_warm = symmetrize(sigma0);
    w_warm.diagonal() = s.diagonal() + r.diagonal();
    // Resetting the diagonal can break positive definiteness when the new
    // covariance differs a lot from the warm one; fall back to a cold start
    // in that case.
    if (Eigen::LLT<Matrix>(w_warm).info() == Eigen::Success) {
      w = std::move(w_warm);
      for (Eigen::Index j = 0; j < p; ++j) {
        double d = omega0(j, j);
        if (d <= 0.0) throw std::invalid_argument("weighted_glasso: warm start omega not PD");
        for (Eigen::Index i = 0; i < p; ++i) {
          if (i != j) beta(i, j) = -omega0(i, j) / d;
        }
      }
    }
  }

  const Eigen::Index offdiag_count = p * (p - 1);
  double mean_off = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i != j) mean_off += std::abs(s(i, j));
    }
  }
  mean_off /= static_cast<double>(offdiag_count);
  double thr = mean_off > 0.0 ? opts.tolerance * mean_off : 1e-10;
  double inner_thr = std::max(thr / 10.0, 1e-14);
  const int max_inner = 1000;

  std::vector<Eigen::Index> rows(static_cast<std::size_t>(p - 1));
  Vector v(p - 1), s12(p - 1), r12(p - 1), b(p - 1);

  int sweep = 0;
  int quiet_sweeps = 0;  // consecutive sweeps below threshold
  for (sweep = 1; sweep <= opts.max_iterations; ++sweep) {
    double delta_sum = 0.0;
    // Once movement stalls, the closing sweep solves the row problems to a
    // much tighter inner tolerance so warm and cold starts land together.
    const double inner_tol = quiet_sweeps > 0 ? inner_thr * 1e-3 : inner_thr;
    for (Eigen::Index j = 0; j < p; ++j) {
      Eigen::Index m = 0;
      for (Eigen::Index i = 0; i < p; ++i) {
        if (i != j) rows[static_cast<std::size_t>(m++)] = i;
      }
      for (Eigen::Index i = 0; i < p - 1; ++i) {
        s12[i] = s(rows[static_cast<std::size_t>(i)], j);
        r12[i] = r(rows[static_cast<std::size_t>(i)], j);
        b[i] = beta(rows[static_cast<std::size_t>(i)], j);
      }
      // v = W11 * beta, maintained incrementally through the lasso sweeps.
      v.setZero();
      for (Eigen::Index k = 0; k < p - 1; ++k) {
        if (b[k] == 0.0) continue;
        const double bk = b[k];
        const auto& col = w.col(rows[static_cast<std::size_t>(k)]);
        for (Eigen::Index i = 0; i < p - 1; ++i) {
          v[i] += bk * col(rows[static_cast<std::size_t>(i)]);
        }
      }
      for (int inner = 0; inner < max_inner; ++inner) {
        double max_step = 0.0;
        for (Eigen::Index i = 0; i < p - 1; ++i) {
          const Eigen::Index ri = rows[static_cast<std::size_t>(i)];
          const double vii = w(ri, ri);
          const double u = s12[i] - (v[i] - vii * b[i]);
          const double nb = soft_threshold(u, r12[i]) / vii;
          const double d = nb - b[i];
          if (d != 0.0) {
            b[i] = nb;
            const auto& col = w.col(ri);
            for (Eigen::Index t = 0; t < p - 1; ++t) {
              v[t] += d * col(rows[static_cast<std::size_t>(t)]);
            }
            max_step = std::max(max_step, std::abs(d));
          }
        }
        if (max_step <= inner_tol) break;
      }
      for (Eigen::Index i = 0; i < p - 1; ++i) {
        const Eigen::Index ri = rows[static_cast<std::size_t>(i)];
        delta_sum += std::abs(v[i] - w(ri, j));
        w(ri, j) = v[i];
        w(j, ri) = v[i];
        beta(ri, j) = b[i];
      }
    }
    if (delta_sum / static_cast<double>(offdiag_count) < thr) {
      ++quiet_sweeps;
      if (quiet_sweeps >= 2) {
        sol.converged = true;
        break;
      }
    } else {
      quiet_sweeps = 0;
    }
  }
  sol.outer_sweeps = std::min(sweep, opts.max_iterations);

  // Recover omega from the final (W, beta) pairs.
  Matrix omega(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double dot = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i != j) dot += w(i, j) * beta(i, j);
    }
    double denom = w(j, j) - dot;
    if (denom <= 0.0 || !std::isfinite(denom)) {
      throw std::runtime_error("weighted_glasso: working covariance lost positive definiteness");
    }
    omega(j, j) = 1.0 / denom;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i != j) omega(i, j) = -beta(i, j) / denom;
    }
  }
  sol.omega = snap_zeros(symmetrize(omega));
  sol.sigma = symmetrize(w);
  return sol;
}

double glasso_objective(const Eigen::Ref<const Matrix>& s, const Eigen::Ref<const Matrix>& omega,
                        const Eigen::Ref<const Matrix>& r) {
  LogDetResult ld = cholesky_logdet(omega);
  if (!ld.is_pd) return -std::numeric_limits<double>::infinity();
  double value = ld.log_det - s.cwiseProduct(omega).sum();
  for (Eigen::Index j = 0; j < omega.cols(); ++j) {
    for (Eigen::Index i = 0; i < omega.rows(); ++i) {
      double v = omega(i, j);
      if (v != 0.0) value -= r(i, j) * std::abs(v);
    }
  }
  return value;
}

double kkt_residual(const Eigen::Ref<const Matrix>& s, const Eigen::Ref<const Matrix>& omega,
                    const Eigen::Ref<const Matrix>& r) {
  const Eigen::Index p = s.rows();
  if (omega.rows() != p || omega.cols() != p || r.rows() != p || r.cols() != p ||
      s.cols() != p) {
    throw std::invalid_argument("kkt_residual: dimension mismatch");
  }
  Matrix sigma = invert_spd(omega);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i == j) continue;
      const double gap = s(i, j) - sigma(i, j);
      double viol;
      if (std::abs(omega(i, j)) <= kGlassoZeroTol) {
        viol = std::max(std::abs(gap) - r(i, j), 0.0);
      } else {
        viol = std::abs(gap + r(i, j) * (omega(i, j) > 0.0 ? 1.0 : -1.0));
      }
      worst = std::max(worst, viol);
    }
  }
  return worst;
}

}  // namespace sgmix
