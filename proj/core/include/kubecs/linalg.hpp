#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "kubecs/rng.hpp"

namespace kubecs {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default ceiling on entries produced by kron_materialize (2^24).
inline constexpr std::size_t kMaterializeCap = std::size_t{1} << 24;

/// Orthonormal DCT-II synthesis basis. Column k is the k-th basis vector, so
/// a signal is recovered from coefficients as x = D * c.
Matrix dct_matrix(Index n);

/// m x n matrix with i.i.d. N(0, 1/m) entries, drawn row by row.
/// Throws DimensionError unless 1 <= m <= n.
Matrix gaussian_sensing(Index m, Index n, Rng& rng);

/// Column-major stacking.
Vector vec(const Matrix& x);
Matrix unvec(const Vector& x, Index rows, Index cols);

/// A1 (x) A2 (x) ... (x) Ak held as its factors and applied without forming
/// the product. With column-major vec the last factor acts on the fastest
/// varying index.
class KroneckerOperator {
 public:
  explicit KroneckerOperator(std::vector<Matrix> factors);

  const std::vector<Matrix>& factors() const { return factors_; }
  Index input_dim() const { return input_dim_; }
  Index output_dim() const { return output_dim_; }

  Vector apply(const Vector& x) const;
  Vector apply_transpose(const Vector& y) const;

  KroneckerOperator transposed() const;

 private:
  std::vector<Matrix> factors_;
  Index input_dim_ = 1;
  Index output_dim_ = 1;
};

Vector kron_apply(const KroneckerOperator& op, const Vector& x);

/// Explicit product; throws DimensionError when output_dim * input_dim > cap.
Matrix kron_materialize(const KroneckerOperator& op, std::size_t cap = kMaterializeCap);

}  // namespace kubecs
