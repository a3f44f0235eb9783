#include "kubecs/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kubecs/errors.hpp"

namespace kubecs {

namespace {

struct RowBasis {
  Matrix ortho;   // r x n, orthonormal rows
  Matrix whiten;  // r x m
};

// A^T P = Q R  =>  A = P R^T Q^T. With rank r, A s = y  <=>  Q_r^T s = pinv(R_r^T) P^T y.
RowBasis row_basis(const Matrix& a) {
  const Index m = a.rows();
  const Index n = a.cols();
  Eigen::ColPivHouseholderQR<Matrix> qr(a.transpose());
  const Index r = qr.rank();
  RowBasis basis;
  const Matrix q = qr.householderQ() * Matrix::Identity(n, r);
  basis.ortho = q.transpose();

  Matrix rr = qr.matrixQR().topRows(r);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < std::min(i, m); ++j) rr(i, j) = 0.0;
  }
  const Matrix pt = qr.colsPermutation().transpose() * Matrix::Identity(m, m);
  if (r == m) {
    basis.whiten = rr.transpose().triangularView<Eigen::Lower>().solve(pt);
  } else {
    const Matrix rt = rr.transpose();
    basis.whiten = rt.completeOrthogonalDecomposition().pseudoInverse() * pt;
  }
  return basis;
}

// Checks between unconditional crossover attempts.
constexpr int kCrossoverChecks = 20;

double weighted_l1(const Vector& w, const Vector& s) { return (w.array() * s.array().abs()).sum(); }

// Basis crossover from an ADMM iterate. The starting basis is the support of
// z (largest first) completed with the columns whose dual constraints are
// closest to tight. Primal simplex pivots on the split problem
// s = s+ - s- then walk to an optimal vertex, whose duals certify optimality
// exactly. The pivot budget bounds the cost when the guess is poor; the last
// vertex is returned either way.
struct Crossover {
  Vector primal;
  Vector dual;  // in the row space of Q, length rank
};

// Pivots between refactorizations of the basis inverse.
constexpr int kRefactorEvery = 256;
// Consecutive zero-length pivots before falling back to Bland's rule.
constexpr int kDegenerateLimit = 20;

std::optional<Crossover> crossover(const LinearOp& q, const Vector& b, const Vector& w,
                                   const Vector& z, const Vector& g) {
  const Index r = q.rows();
  const Index n = q.cols();
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  // Nonzeros of z by magnitude, then the rest by dual tightness.
  std::sort(order.begin(), order.end(), [&](Index a, Index c) {
    const bool za = z(a) != 0.0;
    const bool zc = z(c) != 0.0;
    if (za != zc) return za;
    if (za) return std::abs(z(a)) > std::abs(z(c));
    return std::abs(g(a)) / w(a) > std::abs(g(c)) / w(c);
  });
  // Keep the first r linearly independent columns in that order; structured
  // operators make many supports singular otherwise.
  Matrix span(r, r);
  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(r));
  for (Index i : order) {
    const auto k = static_cast<Index>(chosen.size());
    if (k == r) break;
    const Vector col = q.column(i);
    Vector res = col - span.leftCols(k) * (span.leftCols(k).transpose() * col);
    res -= span.leftCols(k) * (span.leftCols(k).transpose() * res);
    const double norm = res.norm();
    if (norm <= 1e-6 * col.norm()) continue;
    span.col(k) = res / norm;
    chosen.push_back(i);
  }
  if (static_cast<Index>(chosen.size()) < r) return std::nullopt;
  order = std::move(chosen);

  std::vector<char> in_basis(static_cast<std::size_t>(n), 0);
  for (Index i : order) in_basis[static_cast<std::size_t>(i)] = 1;
  Vector sigma(r);
  for (Index k = 0; k < r; ++k) {
    const Index i = order[static_cast<std::size_t>(k)];
    sigma(k) = (z(i) != 0.0 ? z(i) : g(i)) < 0.0 ? -1.0 : 1.0;
  }

  Matrix inv;
  auto refactor = [&] {
    Matrix basis(r, r);
    for (Index k = 0; k < r; ++k) basis.col(k) = q.column(order[static_cast<std::size_t>(k)]);
    Eigen::PartialPivLU<Matrix> lu(basis);
    if (!(lu.rcond() > 1e-12)) return false;
    inv = lu.inverse();
    return true;
  };
  if (!refactor()) return std::nullopt;

  // Optimal vertices of sparse problems are highly degenerate. Pivoting
  // against a slightly perturbed right-hand side keeps steps nonzero; the
  // final basis is then evaluated on the true b, and its duals do not depend
  // on b at all.
  constexpr double kTol = 1e-9;
  constexpr double kPerturbation = 1e-6;
  const double b_scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  Vector bp(r);
  for (Index k = 0; k < r; ++k) {
    const double frac = std::fmod(0.6180339887498949 * static_cast<double>(k + 1), 1.0);
    bp(k) = b(k) + kPerturbation * b_scale * (0.5 + frac);
  }
  const int max_pivots = static_cast<int>(50 + 10 * r);
  Vector xb = inv * bp;
  Vector dual;
  int degenerate_run = 0;
  for (int pivot = 0;; ++pivot) {
    const double peak = std::max(xb.cwiseAbs().maxCoeff(), 1e-300);
    for (Index k = 0; k < r; ++k) {
      if (std::abs(xb(k)) > kTol * peak) sigma(k) = xb(k) > 0.0 ? 1.0 : -1.0;
    }
    Vector cb(r);
    for (Index k = 0; k < r; ++k) cb(k) = w(order[static_cast<std::size_t>(k)]) * sigma(k);
    dual = inv.transpose() * cb;
    if (pivot == max_pivots) break;

    // Most violated dual constraint enters; after a run of degenerate pivots
    // switch to Bland's lowest-index rule, which cannot cycle.
    const Vector reduced = q.apply_adjoint(dual);
    const bool bland = degenerate_run >= kDegenerateLimit;
    Index enter = -1;
    double worst = kTol;
    for (Index j = 0; j < n; ++j) {
      if (in_basis[static_cast<std::size_t>(j)]) continue;
      const double excess = std::abs(reduced(j)) / w(j) - 1.0;
      if (excess > worst) {
        enter = j;
        worst = excess;
        if (bland) break;
      }
    }
    if (enter < 0) break;
    const double dir = reduced(enter) > 0.0 ? 1.0 : -1.0;
    const Vector alpha = inv * q.column(enter);

    // Ratio test: first basic variable driven to zero as s_enter grows.
    Index leave = -1;
    double step = std::numeric_limits<double>::infinity();
    const double alpha_peak = alpha.cwiseAbs().maxCoeff();
    for (Index k = 0; k < r; ++k) {
      const double rate = dir * sigma(k) * alpha(k);  // decrease of sigma_k x_k per unit step
      if (rate <= kTol * alpha_peak) continue;
      const double t = std::max(0.0, sigma(k) * xb(k)) / rate;
      if (t < step || (t == step && order[static_cast<std::size_t>(k)] <
                                        order[static_cast<std::size_t>(leave)])) {
        step = t;
        leave = k;
      }
    }
    if (leave < 0) break;  // unbounded direction; cannot happen for positive weights
    degenerate_run = step == 0.0 ? degenerate_run + 1 : 0;

    const double pivot_value = alpha(leave);
    xb -= (dir * step) * alpha;
    xb(leave) = dir * step;
    in_basis[static_cast<std::size_t>(order[static_cast<std::size_t>(leave)])] = 0;
    in_basis[static_cast<std::size_t>(enter)] = 1;
    order[static_cast<std::size_t>(leave)] = enter;
    sigma(leave) = dir;
    if ((pivot + 1) % kRefactorEvery == 0) {
      if (!refactor()) return std::nullopt;
      xb = inv * bp;
    } else {
      const Vector row = inv.row(leave) / pivot_value;
      inv -= alpha * row.transpose();
      inv.row(leave) = row;
    }
  }

  if (!refactor()) return std::nullopt;
  xb = inv * b;
  for (Index k = 0; k < r; ++k) {
    const Index i = order[static_cast<std::size_t>(k)];
    dual(k) = w(i) * sigma(k);
  }
  dual = inv.transpose() * dual;
  Crossover out;
  out.primal = Vector::Zero(n);
  for (Index k = 0; k < r; ++k) out.primal(order[static_cast<std::size_t>(k)]) = xb(k);
  out.dual = std::move(dual);
  return out;
}

// b . nu after shrinking nu until |Q^T nu| <= w holds componentwise; a valid
// lower bound on the optimal objective.
double dual_bound(const LinearOp& q, const Vector& b, const Vector& w, const Vector& nu) {
  const Vector g = q.apply_adjoint(nu);
  double c = 1.0;
  for (Index i = 0; i < g.size(); ++i) {
    const double a = std::abs(g(i));
    if (a > w(i)) c = std::min(c, w(i) / a);
  }
  return c * b.dot(nu);
}

void check_shapes(const ConstraintSystem& system, const Vector& y) {
  if (y.size() != system.rows()) {
    throw DimensionError("solver: measurement length " + std::to_string(y.size()) +
                         " != operator rows " + std::to_string(system.rows()));
  }
}

}  // namespace

ConstraintSystem::ConstraintSystem(LinearOpPtr theta) : theta_(std::move(theta)) {
  if (!theta_) throw DimensionError("ConstraintSystem: null operator");
  if (const auto* kron = dynamic_cast<const KronOp*>(theta_.get())) {
    std::vector<Matrix> ortho;
    std::vector<Matrix> whiten;
    for (const auto& f : kron->kronecker().factors()) {
      RowBasis b = row_basis(f);
      if (b.ortho.rows() == 0) throw DimensionError("ConstraintSystem: zero factor");
      ortho.push_back(std::move(b.ortho));
      whiten.push_back(std::move(b.whiten));
    }
    ortho_ = make_kron(std::move(ortho));
    whiten_ = make_kron(std::move(whiten));
  } else {
    RowBasis b = row_basis(theta_->materialize());
    if (b.ortho.rows() == 0) throw DimensionError("ConstraintSystem: zero operator");
    ortho_ = make_dense(std::move(b.ortho));
    whiten_ = make_dense(std::move(b.whiten));
  }
}

Vector ConstraintSystem::project(const Vector& v, const Vector& y_white) const {
  return v - ortho_->apply_adjoint(ortho_->apply(v) - y_white);
}

SolveReport weighted_bp(const ConstraintSystem& system, const Vector& y, const Vector& w,
                        const SolveOptions& opts) {
  check_shapes(system, y);
  const Index n = system.cols();
  if (w.size() != n) {
    throw DimensionError("weighted_bp: weight length " + std::to_string(w.size()) +
                         " != operator cols " + std::to_string(n));
  }
  if (!w.allFinite() || (w.array() <= 0.0).any()) {
    throw DimensionError("weighted_bp: weights must be finite and positive");
  }

  SolveReport report;
  const double feasible_at = opts.feasibility_tol * std::max(1.0, y.norm());
  auto finish = [&](Vector s) {
    report.residual_norm = (system.theta().apply(s) - y).norm();
    report.objective = weighted_l1(w, s);
    report.coefficients = std::move(s);
    return report;
  };

  if (y.isZero(0.0)) {
    report.converged = true;
    return finish(Vector::Zero(n));
  }

  // Work in units where the least-norm solution has unit peak and the largest
  // weight is one; both rescalings leave the minimizer unchanged.
  const LinearOp& q = system.orthonormal();
  const Vector wn = w / w.maxCoeff();
  const Vector yw = system.whiten(y);
  Vector least = q.apply_adjoint(yw);
  const double sigma = least.cwiseAbs().maxCoeff();
  if (sigma == 0.0) {
    finish(Vector::Zero(n));
    report.converged = report.residual_norm <= feasible_at;
    return report;
  }
  const Vector b = yw / sigma;
  least /= sigma;

  const double rho = opts.admm_rho;
  const double alpha = opts.admm_relaxation;
  const Vector thresh = wn / rho;
  const int check_every = std::max(1, opts.check_interval);
  const int crossover_every = kCrossoverChecks * check_every;

  Vector z = least;
  Vector u = Vector::Zero(n);
  Vector best = least;
  double best_obj = weighted_l1(wn, least);
  double best_lower = -std::numeric_limits<double>::infinity();

  std::vector<signed char> pattern(static_cast<std::size_t>(n));
  std::vector<signed char> last_pattern;
  std::vector<signed char> tried_pattern;

  int it = 0;
  for (it = 1; it <= opts.max_iterations; ++it) {
    const Vector x = system.project(z - u, b);
    const Vector v = alpha * x + (1.0 - alpha) * z + u;
    z = v.array().sign() * (v.array().abs() - thresh.array()).max(0.0);
    u = v - z;

    if (it % check_every != 0 && it != opts.max_iterations) continue;

    const double x_obj = weighted_l1(wn, x);
    if (x_obj < best_obj) {
      best = x;
      best_obj = x_obj;
    }
    // rho * u approximates a subgradient of the objective; its component in
    // the row space of Q is a dual candidate.
    const Vector nu = q.apply(rho * u);
    best_lower = std::max(best_lower, dual_bound(q, b, wn, nu));

    // Crossover pays off once the active set has settled; retry periodically
    // in case it never fully does.
    for (Index i = 0; i < n; ++i) pattern[static_cast<std::size_t>(i)] = (z(i) > 0) - (z(i) < 0);
    const bool settled = pattern == last_pattern && pattern != tried_pattern;
    last_pattern = pattern;
    if (settled || it % crossover_every == 0) {
      tried_pattern = pattern;
      if (auto cross = crossover(q, b, wn, z, q.apply_adjoint(nu))) {
        const double c_obj = weighted_l1(wn, cross->primal);
        if (c_obj < best_obj) {
          best = std::move(cross->primal);
          best_obj = c_obj;
        }
        best_lower = std::max(best_lower, dual_bound(q, b, wn, cross->dual));
      }
    }

    if (best_obj - best_lower <= opts.objective_tol * best_obj) {
      if ((system.theta().apply(sigma * best) - y).norm() <= feasible_at) {
        report.converged = true;
        break;
      }
    }
  }
  report.iterations = std::min(it, opts.max_iterations);
  return finish(sigma * best);
}

SolveReport weighted_bp(LinearOpPtr theta, const Vector& y, const Vector& w,
                        const SolveOptions& opts) {
  const ConstraintSystem system(std::move(theta));
  return weighted_bp(system, y, w, opts);
}

SolveReport basis_pursuit(const ConstraintSystem& system, const Vector& y,
                          const SolveOptions& opts) {
  return weighted_bp(system, y, Vector::Ones(system.cols()), opts);
}

Vector rwl1_weights(const Vector& s, double eps) {
  return (s.array().abs() + eps).inverse().matrix();
}

SolveReport rwl1(const ConstraintSystem& system, const Vector& y, const SolveOptions& opts) {
  check_shapes(system, y);
  const double scale = y.cwiseAbs().maxCoeff();
  Vector w = Vector::Ones(system.cols());
  std::optional<SolveReport> last_good;
  int total_iterations = 0;
  const int rounds = std::max(1, opts.rwl1_rounds);
  for (int round = 0; round < rounds; ++round) {
    SolveReport rep = weighted_bp(system, y, w, opts);
    total_iterations += rep.iterations;
    if (!rep.converged) {
      SolveReport out = last_good ? *last_good : rep;
      out.converged = false;
      out.iterations = total_iterations;
      return out;
    }
    if (round + 1 < rounds) {
      const Vector normalized = scale > 0.0 ? Vector(rep.coefficients / scale) : rep.coefficients;
      w = rwl1_weights(normalized, opts.rwl1_epsilon);
    }
    last_good = std::move(rep);
  }
  last_good->iterations = total_iterations;
  return *last_good;
}

SolveReport irls(const ConstraintSystem& system, const Vector& y, const SolveOptions& opts) {
  check_shapes(system, y);
  const Index n = system.cols();
  SolveReport report;
  const double feasible_at = opts.feasibility_tol * std::max(1.0, y.norm());
  auto finish = [&](Vector s) {
    report.residual_norm = (system.theta().apply(s) - y).norm();
    report.objective = s.lpNorm<1>();
    report.coefficients = std::move(s);
    return report;
  };
  if (y.isZero(0.0)) {
    report.converged = true;
    return finish(Vector::Zero(n));
  }

  const Matrix q = system.orthonormal().materialize();
  const Vector yw = system.whiten(y);
  Vector s = q.transpose() * yw;
  const double sigma = s.cwiseAbs().maxCoeff();
  if (sigma == 0.0) {
    finish(Vector::Zero(n));
    report.converged = report.residual_norm <= feasible_at;
    return report;
  }
  const Vector b = yw / sigma;
  s /= sigma;

  constexpr double kDecay = 0.5;
  constexpr double kFloor = 1e-8;
  constexpr double kRidge = 1e-10;
  double eps = 1.0;
  bool settled = false;
  int it = 0;
  for (it = 1; it <= opts.max_iterations; ++it) {
    const Vector d = s.cwiseAbs().array() + eps;
    const Matrix qd = q * d.asDiagonal();
    Matrix gram = qd * q.transpose();
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
      gram.diagonal().array() += kRidge;
      llt.compute(gram);
      report.regularized = true;
    }
    const Vector next = qd.transpose() * llt.solve(b);
    const double change = (next - s).norm();
    s = next;
    eps = std::max(eps * kDecay, kFloor);
    if (change <= 1e-10 * std::max(1.0, s.norm())) {
      settled = true;
      break;
    }
  }
  report.iterations = std::min(it, opts.max_iterations);
  finish(sigma * s);
  report.converged = settled && report.residual_norm <= feasible_at;
  return report;
}

}  // namespace kubecs
