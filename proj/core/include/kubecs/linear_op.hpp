#pragma once

#include <memory>

#include "kubecs/linalg.hpp"
#include "kubecs/rng.hpp"

namespace kubecs {

/// Real linear map R^cols -> R^rows with forward and adjoint application.
class LinearOp {
 public:
  virtual ~LinearOp() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;

  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector apply_adjoint(const Vector& y) const = 0;

  /// A * e_j.
  virtual Vector column(Index j) const;

  /// Explicit matrix, built column by column unless the operator stores one.
  virtual Matrix materialize(std::size_t cap = kMaterializeCap) const;
};

using LinearOpPtr = std::shared_ptr<const LinearOp>;

class DenseOp final : public LinearOp {
 public:
  explicit DenseOp(Matrix a);

  const Matrix& matrix() const { return a_; }

  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  Vector apply(const Vector& x) const override;
  Vector apply_adjoint(const Vector& y) const override;
  Vector column(Index j) const override;
  Matrix materialize(std::size_t cap = kMaterializeCap) const override;

 private:
  Matrix a_;
};

class KronOp final : public LinearOp {
 public:
  explicit KronOp(KroneckerOperator k) : k_(std::move(k)) {}

  const KroneckerOperator& kronecker() const { return k_; }

  Index rows() const override { return k_.output_dim(); }
  Index cols() const override { return k_.input_dim(); }
  Vector apply(const Vector& x) const override { return k_.apply(x); }
  Vector apply_adjoint(const Vector& y) const override { return k_.apply_transpose(y); }
  Vector column(Index j) const override;
  Matrix materialize(std::size_t cap = kMaterializeCap) const override {
    return kron_materialize(k_, cap);
  }

 private:
  KroneckerOperator k_;
};

/// outer * inner.
class ComposedOp final : public LinearOp {
 public:
  ComposedOp(LinearOpPtr outer, LinearOpPtr inner);

  Index rows() const override { return outer_->rows(); }
  Index cols() const override { return inner_->cols(); }
  Vector apply(const Vector& x) const override { return outer_->apply(inner_->apply(x)); }
  Vector apply_adjoint(const Vector& y) const override {
    return inner_->apply_adjoint(outer_->apply_adjoint(y));
  }

 private:
  LinearOpPtr outer_;
  LinearOpPtr inner_;
};

LinearOpPtr make_dense(Matrix a);
LinearOpPtr make_kron(std::vector<Matrix> factors);
LinearOpPtr make_identity(Index n);

/// Largest |<Ax, y> - <x, A^T y>| / (|Ax| |y| + tiny) over `trials` random
/// Gaussian pairs.
double check_adjoint(const LinearOp& op, Rng& rng, int trials = 10);

}  // namespace kubecs
