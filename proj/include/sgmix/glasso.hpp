// Weighted graphical lasso: maximizes
//   log det(Omega) - tr(S Omega) - || R * Omega ||_1
// over positive definite Omega, with an element-wise nonnegative penalty
// matrix R. Block coordinate descent over columns, each column solved by a
// coordinate-descent lasso on the partitioned system, with the working
// covariance updated in place.
#pragma once

#include <optional>

#include "sgmix/spd.hpp"

namespace sgmix {

struct GlassoWarmStart {
  Matrix omega;
  Matrix sigma;
};

struct GlassoOptions {
  int max_iterations = 200;   // outer column sweeps
  double tolerance = 1e-4;    // relative mean abs change of working covariance off-diagonals
  bool penalize_diagonal = false;
  std::optional<GlassoWarmStart> warm_start;
};

struct GlassoSolution {
  Matrix omega;  // positive definite, exact zeros below 1e-12 magnitude
  Matrix sigma;  // working covariance maintained by the algorithm, ~ omega^{-1}
  int outer_sweeps = 0;
  bool converged = false;
};

// Magnitude below which an off-diagonal entry is snapped to exact zero.
inline constexpr double kGlassoZeroTol = 1e-12;

// Penalty entries above 1e3 * max|S| (including +inf from upstream
// divisions) are capped before solving; they behave as infinite but keep
// the arithmetic finite.
double glasso_penalty_cap(const Eigen::Ref<const Matrix>& s);

GlassoSolution weighted_glasso(const Eigen::Ref<const Matrix>& s,
                               const Eigen::Ref<const Matrix>& r,
                               const GlassoOptions& opts = {});

// log det(omega) - tr(S omega) - ||R * omega||_1. Exact-zero entries of
// omega contribute nothing to the penalty even under infinite weights.
double glasso_objective(const Eigen::Ref<const Matrix>& s, const Eigen::Ref<const Matrix>& omega,
                        const Eigen::Ref<const Matrix>& r);

// Max KKT violation over off-diagonal entries, with sigma = omega^{-1}:
// zero entries contribute max(|S_ij - sigma_ij| - R_ij, 0), nonzero entries
// |S_ij - sigma_ij + R_ij sign(omega_ij)|. Test oracle for the solver.
double kkt_residual(const Eigen::Ref<const Matrix>& s, const Eigen::Ref<const Matrix>& omega,
                    const Eigen::Ref<const Matrix>& r);

}  // namespace sgmix
