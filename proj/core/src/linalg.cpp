#include "kubecs/linalg.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kubecs/errors.hpp"

namespace kubecs {

Matrix dct_matrix(Index n) {
  if (n < 1) throw DimensionError("dct_matrix: n must be >= 1");
  Matrix d(n, n);
  const double dc = std::sqrt(1.0 / static_cast<double>(n));
  const double ac = std::sqrt(2.0 / static_cast<double>(n));
  for (Index k = 0; k < n; ++k) {
    const double scale = k == 0 ? dc : ac;
    for (Index i = 0; i < n; ++i) {
      d(i, k) = scale * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    }
  }
  return d;
}

Matrix gaussian_sensing(Index m, Index n, Rng& rng) {
  if (m < 1 || n < 1 || m > n) {
    throw DimensionError("gaussian_sensing: need 1 <= m <= n, got m=" + std::to_string(m) +
                         " n=" + std::to_string(n));
  }
  const double sd = 1.0 / std::sqrt(static_cast<double>(m));
  Matrix a(m, n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) a(i, j) = sd * rng.normal();
  }
  return a;
}

Vector vec(const Matrix& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

Matrix unvec(const Vector& x, Index rows, Index cols) {
  if (rows < 0 || cols < 0 || rows * cols != x.size()) {
    throw DimensionError("unvec: length " + std::to_string(x.size()) + " != " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  return Eigen::Map<const Matrix>(x.data(), rows, cols);
}

KroneckerOperator::KroneckerOperator(std::vector<Matrix> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw DimensionError("KroneckerOperator: no factors");
  for (const auto& f : factors_) {
    if (f.rows() < 1 || f.cols() < 1) throw DimensionError("KroneckerOperator: empty factor");
    if (!f.allFinite()) throw DimensionError("KroneckerOperator: non-finite factor entry");
    input_dim_ *= f.cols();
    output_dim_ *= f.rows();
  }
}

namespace {

// Applies each factor along its own mode of the tensor view of x. Mode k
// (0-based, k = last is fastest) sees x as [left, n_k, right] with left the
// product of the (current) extents of faster modes.
Vector apply_factors(const std::vector<Matrix>& factors, bool transpose, const Vector& x) {
  const std::size_t k = factors.size();
  std::vector<Index> extent(k);
  for (std::size_t i = 0; i < k; ++i) {
    extent[i] = transpose ? factors[i].rows() : factors[i].cols();
  }
  Vector cur = x;
  Vector next;
  // Fastest mode first: there left == 1 and the step is a single GEMM.
  for (std::size_t step = 0; step < k; ++step) {
    const std::size_t mode = k - 1 - step;
    const Index in = extent[mode];
    const Index out = transpose ? factors[mode].cols() : factors[mode].rows();
    Index left = 1;
    for (std::size_t i = mode + 1; i < k; ++i) left *= extent[i];
    const Index right = cur.size() / (left * in);
    next.resize(left * out * right);
    if (left == 1) {
      Eigen::Map<const Matrix> xs(cur.data(), in, right);
      Eigen::Map<Matrix> ys(next.data(), out, right);
      if (transpose) {
        ys.noalias() = factors[mode].transpose() * xs;
      } else {
        ys.noalias() = factors[mode] * xs;
      }
    } else {
      for (Index r = 0; r < right; ++r) {
        Eigen::Map<const Matrix> xs(cur.data() + r * left * in, left, in);
        Eigen::Map<Matrix> ys(next.data() + r * left * out, left, out);
        if (transpose) {
          ys.noalias() = xs * factors[mode];
        } else {
          ys.noalias() = xs * factors[mode].transpose();
        }
      }
    }
    extent[mode] = out;
    cur.swap(next);
  }
  return cur;
}

}  // namespace

Vector KroneckerOperator::apply(const Vector& x) const {
  if (x.size() != input_dim_) {
    throw DimensionError("kron_apply: expected length " + std::to_string(input_dim_) + ", got " +
                         std::to_string(x.size()));
  }
  return apply_factors(factors_, false, x);
}

Vector KroneckerOperator::apply_transpose(const Vector& y) const {
  if (y.size() != output_dim_) {
    throw DimensionError("kron_apply_transpose: expected length " + std::to_string(output_dim_) +
                         ", got " + std::to_string(y.size()));
  }
  return apply_factors(factors_, true, y);
}

KroneckerOperator KroneckerOperator::transposed() const {
  std::vector<Matrix> t;
  t.reserve(factors_.size());
  for (const auto& f : factors_) t.emplace_back(f.transpose());
  return KroneckerOperator(std::move(t));
}

Vector kron_apply(const KroneckerOperator& op, const Vector& x) { return op.apply(x); }

Matrix kron_materialize(const KroneckerOperator& op, std::size_t cap) {
  const auto entries =
      static_cast<std::size_t>(op.output_dim()) * static_cast<std::size_t>(op.input_dim());
  if (entries > cap) {
    throw DimensionError("kron_materialize: " + std::to_string(entries) +
                         " entries exceeds cap " + std::to_string(cap));
  }
  Matrix acc = op.factors().front();
  for (std::size_t f = 1; f < op.factors().size(); ++f) {
    const Matrix& b = op.factors()[f];
    Matrix next(acc.rows() * b.rows(), acc.cols() * b.cols());
    for (Index i = 0; i < acc.rows(); ++i) {
      for (Index j = 0; j < acc.cols(); ++j) {
        next.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = acc(i, j) * b;
      }
    }
    acc.swap(next);
  }
  return acc;
}

}  // namespace kubecs
