#include "kubecs/linear_op.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kubecs/errors.hpp"

namespace kubecs {

Vector LinearOp::column(Index j) const {
  if (j < 0 || j >= cols()) throw DimensionError("column index out of range");
  Vector e = Vector::Zero(cols());
  e(j) = 1.0;
  return apply(e);
}

Matrix LinearOp::materialize(std::size_t cap) const {
  if (static_cast<std::size_t>(rows()) * static_cast<std::size_t>(cols()) > cap) {
    throw DimensionError("materialize: operator exceeds entry cap");
  }
  Matrix m(rows(), cols());
  for (Index j = 0; j < cols(); ++j) m.col(j) = column(j);
  return m;
}

DenseOp::DenseOp(Matrix a) : a_(std::move(a)) {
  if (a_.rows() < 1 || a_.cols() < 1) throw DimensionError("DenseOp: empty matrix");
  if (!a_.allFinite()) throw DimensionError("DenseOp: non-finite entry");
}

Vector DenseOp::apply(const Vector& x) const {
  if (x.size() != a_.cols()) {
    throw DimensionError("DenseOp::apply: expected length " + std::to_string(a_.cols()) +
                         ", got " + std::to_string(x.size()));
  }
  return a_ * x;
}

Vector DenseOp::apply_adjoint(const Vector& y) const {
  if (y.size() != a_.rows()) {
    throw DimensionError("DenseOp::apply_adjoint: expected length " + std::to_string(a_.rows()) +
                         ", got " + std::to_string(y.size()));
  }
  return a_.transpose() * y;
}

Vector DenseOp::column(Index j) const {
  if (j < 0 || j >= a_.cols()) throw DimensionError("column index out of range");
  return a_.col(j);
}

Matrix DenseOp::materialize(std::size_t cap) const {
  if (static_cast<std::size_t>(a_.size()) > cap) {
    throw DimensionError("materialize: operator exceeds entry cap");
  }
  return a_;
}

Vector KronOp::column(Index j) const {
  if (j < 0 || j >= cols()) throw DimensionError("column index out of range");
  // Column j of A1 (x) ... (x) Ak is the Kronecker product of one column per
  // factor; the last factor owns the fastest digit of j.
  const auto& fs = k_.factors();
  std::vector<Index> digit(fs.size());
  Index rem = j;
  for (std::size_t f = fs.size(); f-- > 0;) {
    digit[f] = rem % fs[f].cols();
    rem /= fs[f].cols();
  }
  Vector acc = fs.front().col(digit.front());
  for (std::size_t f = 1; f < fs.size(); ++f) {
    const auto c = fs[f].col(digit[f]);
    Vector next(acc.size() * c.size());
    for (Index i = 0; i < acc.size(); ++i) next.segment(i * c.size(), c.size()) = acc(i) * c;
    acc.swap(next);
  }
  return acc;
}

ComposedOp::ComposedOp(LinearOpPtr outer, LinearOpPtr inner)
    : outer_(std::move(outer)), inner_(std::move(inner)) {
  if (!outer_ || !inner_) throw DimensionError("ComposedOp: null operand");
  if (outer_->cols() != inner_->rows()) {
    throw DimensionError("ComposedOp: inner rows " + std::to_string(inner_->rows()) +
                         " != outer cols " + std::to_string(outer_->cols()));
  }
}

LinearOpPtr make_dense(Matrix a) { return std::make_shared<DenseOp>(std::move(a)); }

LinearOpPtr make_kron(std::vector<Matrix> factors) {
  return std::make_shared<KronOp>(KroneckerOperator(std::move(factors)));
}

LinearOpPtr make_identity(Index n) { return make_kron({Matrix::Identity(n, n)}); }

double check_adjoint(const LinearOp& op, Rng& rng, int trials) {
  constexpr double tiny = std::numeric_limits<double>::min();
  double worst = 0.0;
  for (int t = 0; t < std::max(trials, 1); ++t) {
    Vector x(op.cols());
    Vector y(op.rows());
    for (Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    for (Index i = 0; i < y.size(); ++i) y(i) = rng.normal();
    const Vector ax = op.apply(x);
    const Vector aty = op.apply_adjoint(y);
    const double gap = std::abs(ax.dot(y) - x.dot(aty));
    worst = std::max(worst, gap / (ax.norm() * y.norm() + tiny));
  }
  return worst;
}

}  // namespace kubecs
