#pragma once

#include "kubecs/linear_op.hpp"

namespace kubecs {

struct SolveOptions {
  int max_iterations = 2000;
  /// Stop once ||theta s - y|| / max(1, ||y||) is below this.
  double feasibility_tol = 1e-6;
  /// Relative duality gap at which weighted_bp declares optimality.
  double objective_tol = 1e-4;
  /// ADMM penalty, in units where the least-norm solution has unit peak.
  double admm_rho = 8.0;
  /// Over-relaxation factor in (0, 2).
  double admm_relaxation = 1.6;
  /// Iterations between optimality checks.
  int check_interval = 10;
  double rwl1_epsilon = 0.1;
  int rwl1_rounds = 4;
};

struct SolveReport {
  Vector coefficients;
  double residual_norm = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// IRLS only: a ridge was needed to factor the weighted normal equations.
  bool regularized = false;
};

/// Equality constraint theta * s = y prepared for repeated projections.
///
/// Holds an operator Q with orthonormal rows spanning the row space of theta,
/// and a whitening map G with theta s = y  <=>  Q s = G y for consistent y.
/// Kronecker-structured theta is factored per factor, so Q and G stay
/// Kronecker. Immutable after construction; share freely across threads.
class ConstraintSystem {
 public:
  explicit ConstraintSystem(LinearOpPtr theta);

  const LinearOp& theta() const { return *theta_; }
  const LinearOp& orthonormal() const { return *ortho_; }
  Index rank() const { return ortho_->rows(); }
  Index rows() const { return theta_->rows(); }
  Index cols() const { return theta_->cols(); }

  Vector whiten(const Vector& y) const { return whiten_->apply(y); }

  /// Euclidean projection of v onto { s : Q s = y_white }.
  Vector project(const Vector& v, const Vector& y_white) const;

 private:
  LinearOpPtr theta_;
  LinearOpPtr ortho_;
  LinearOpPtr whiten_;
};

/// min sum_i w_i |s_i|  s.t.  theta s = y, by ADMM on the weighted problem.
/// Non-convergence is reported through SolveReport::converged; only shape
/// errors and non-positive weights throw.
SolveReport weighted_bp(const ConstraintSystem& system, const Vector& y, const Vector& w,
                        const SolveOptions& opts = {});
SolveReport weighted_bp(LinearOpPtr theta, const Vector& y, const Vector& w,
                        const SolveOptions& opts = {});

SolveReport basis_pursuit(const ConstraintSystem& system, const Vector& y,
                          const SolveOptions& opts = {});

/// 1 / (|s_i| + eps).
Vector rwl1_weights(const Vector& s, double eps);

/// Reweighted l1: rounds of weighted_bp, reweighting from the previous
/// solution measured in units of max|y|.
SolveReport rwl1(const ConstraintSystem& system, const Vector& y, const SolveOptions& opts = {});

/// Iteratively reweighted least squares for the l1 problem.
SolveReport irls(const ConstraintSystem& system, const Vector& y, const SolveOptions& opts = {});

}  // namespace kubecs
