#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kubecs/errors.hpp"
#include "kubecs/linalg.hpp"
#include "kubecs/linear_op.hpp"
#include "kubecs/rng.hpp"
#include "kubecs/solvers.hpp"
#include "oracles.hpp"

using namespace kubecs;

namespace {

Vector vec_of(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Vector sparse_signal(Index n, int k, Rng& rng) {
  Vector s = Vector::Zero(n);
  for (int placed = 0; placed < k;) {
    const auto i = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(n));
    if (s(i) != 0.0) continue;
    s(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    ++placed;
  }
  return s;
}

Vector positive_weights(Index n, Rng& rng) {
  Vector w(n);
  for (Index i = 0; i < n; ++i) w(i) = 0.2 + 1.8 * rng.uniform();
  return w;
}

bool feasible(const SolveReport& r, const Vector& y, const SolveOptions& o = {}) {
  return r.residual_norm <= o.feasibility_tol * std::max(1.0, y.norm());
}

double snr_db(const Vector& ref, const Vector& est) {
  return 20.0 * std::log10(ref.norm() / (ref - est).norm());
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("weighted_bp examples") {
  SUBCASE("identity") {
    const auto r = weighted_bp(make_identity(2), vec_of({3, 0}), Vector::Ones(2));
    CHECK(r.converged);
    CHECK((r.coefficients - vec_of({3, 0})).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(r.objective == doctest::Approx(3.0).epsilon(1e-9));
  }
  SUBCASE("one equation, unequal weights") {
    Matrix a(1, 2);
    a << 1, 1;
    const auto r = weighted_bp(make_dense(a), vec_of({2}), vec_of({1, 2}));
    CHECK(r.converged);
    CHECK((r.coefficients - vec_of({2, 0})).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-6));
  }
  SUBCASE("zero measurements") {
    Rng rng(1);
    const auto r = weighted_bp(make_dense(gaussian_sensing(4, 9, rng)), Vector::Zero(4),
                               positive_weights(9, rng));
    CHECK(r.converged);
    CHECK(r.coefficients.isZero(0.0));
    CHECK(r.objective == 0.0);
  }
}

TEST_CASE("weighted_bp argument errors") {
  const auto eye = make_identity(3);
  CHECK_THROWS_AS(weighted_bp(eye, Vector::Ones(2), Vector::Ones(3)), DimensionError);
  CHECK_THROWS_AS(weighted_bp(eye, Vector::Ones(3), Vector::Ones(4)), DimensionError);
  CHECK_THROWS_AS(weighted_bp(eye, Vector::Ones(3), vec_of({1, 0, 1})), DimensionError);
  CHECK_THROWS_AS(weighted_bp(eye, Vector::Ones(3), vec_of({1, -1, 1})), DimensionError);
}

TEST_CASE("weighted_bp reports non-convergence instead of failing") {
  Rng rng(5);
  const Matrix a = gaussian_sensing(12, 30, rng);
  const Vector y = a * sparse_signal(30, 8, rng);
  SolveOptions o;
  o.max_iterations = 3;
  const auto r = weighted_bp(make_dense(a), y, Vector::Ones(30), o);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
  CHECK(r.coefficients.size() == 30);
}

TEST_CASE("weighted_bp matches the LP reference") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = static_cast<Index>(2 + rng.next_u64() % 23);
    const auto n = static_cast<Index>(m + 1 + rng.next_u64() % static_cast<std::uint64_t>(32 - m));
    const Matrix a = gaussian_sensing(m, n, rng);
    Vector x0(n);
    for (Index i = 0; i < n; ++i) x0(i) = rng.normal();
    const Vector y = a * x0;
    const Vector w = positive_weights(n, rng);
    const auto ref = oracle::weighted_l1_min(a, y, w);
    REQUIRE(ref.has_value());
    const auto r = weighted_bp(make_dense(a), y, w);
    CAPTURE(trial);
    CAPTURE(m);
    CAPTURE(n);
    CHECK(r.converged);
    CHECK(feasible(r, y));
    CHECK(std::abs(r.objective - *ref) <= 1e-4 * *ref);
  }
}

TEST_CASE("converged reports are feasible") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = gaussian_sensing(10, 24, rng);
    const Vector y = a * sparse_signal(24, 3, rng);
    const auto r = weighted_bp(make_dense(a), y, positive_weights(24, rng));
    if (r.converged) CHECK(feasible(r, y));
    CHECK(r.residual_norm == doctest::Approx((a * r.coefficients - y).norm()));
  }
}

TEST_CASE("weight scaling leaves the minimizer unchanged") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = gaussian_sensing(12, 28, rng);
    const Vector y = a * sparse_signal(28, 4, rng);
    const Vector w = positive_weights(28, rng);
    const auto base = weighted_bp(make_dense(a), y, w);
    for (double c : {0.5, 3.0}) {
      const auto scaled = weighted_bp(make_dense(a), y, c * w);
      CHECK((scaled.coefficients - base.coefficients).cwiseAbs().maxCoeff() <= 1e-5);
      CHECK(std::abs(scaled.objective - c * base.objective) <= 1e-5 * std::max(1.0, c * base.objective));
    }
  }
}

TEST_CASE("unit weights reduce to basis pursuit") {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = gaussian_sensing(10, 20, rng);
    const Vector y = a * sparse_signal(20, 3, rng);
    const ConstraintSystem sys(make_dense(a));
    const auto w = weighted_bp(sys, y, Vector::Ones(20));
    const auto bp = basis_pursuit(sys, y);
    CHECK((w.coefficients - bp.coefficients).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(std::abs(w.objective - bp.objective) <= 1e-6);
  }
}

TEST_CASE("basis pursuit recovers sparse spikes") {
  int recovered = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + static_cast<std::uint64_t>(seed));
    const Matrix a = gaussian_sensing(32, 64, rng);
    const Vector s = sparse_signal(64, 3, rng);
    const auto r = basis_pursuit(ConstraintSystem(make_dense(a)), a * s);
    recovered += (r.coefficients - s).cwiseAbs().maxCoeff() <= 1e-4 ? 1 : 0;
  }
  CHECK(recovered >= 19);
}

TEST_CASE("constraint system handles rank-deficient operators") {
  Rng rng(3);
  Matrix a(4, 6);
  a.topRows(2) = gaussian_sensing(2, 6, rng);
  a.row(2) = a.row(0) + a.row(1);
  a.row(3) = 2.0 * a.row(0);
  const ConstraintSystem sys(make_dense(a));
  CHECK(sys.rank() == 2);
  Vector x0(6);
  for (Index i = 0; i < 6; ++i) x0(i) = rng.normal();
  const Vector y = a * x0;
  Vector v(6);
  for (Index i = 0; i < 6; ++i) v(i) = rng.normal();
  const Vector p = sys.project(v, sys.whiten(y));
  CHECK((a * p - y).norm() <= 1e-10 * y.norm());
  // Projection is idempotent and orthogonal.
  CHECK((sys.project(p, sys.whiten(y)) - p).norm() <= 1e-12);
  const Vector p2 = sys.project(x0, sys.whiten(y));
  CHECK((p2 - x0).norm() <= 1e-10);

  const auto r = weighted_bp(make_dense(a), y, Vector::Ones(6));
  const auto ref = oracle::weighted_l1_min(a, y, Vector::Ones(6));
  CHECK(r.converged);
  CHECK(std::abs(r.objective - *ref) <= 1e-4 * *ref);
}

TEST_CASE("constraint system keeps Kronecker structure") {
  Rng rng(4);
  const Matrix a = gaussian_sensing(3, 4, rng);
  const Matrix b = gaussian_sensing(2, 5, rng);
  const auto theta = make_kron({a, b});
  const ConstraintSystem sys(theta);
  CHECK(sys.rank() == 6);
  CHECK(dynamic_cast<const KronOp*>(&sys.orthonormal()) != nullptr);
  const Matrix q = sys.orthonormal().materialize();
  CHECK((q * q.transpose() - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-12);
  Vector s(20);
  for (Index i = 0; i < 20; ++i) s(i) = rng.normal();
  const Vector y = theta->apply(s);
  CHECK((q * s - sys.whiten(y)).norm() <= 1e-10 * y.norm());
}

TEST_CASE("rwl1 weights") {
  const Vector w = rwl1_weights(vec_of({2, 0}), 0.1);
  CHECK(w(0) == doctest::Approx(1.0 / 2.1));
  CHECK(w(1) == doctest::Approx(10.0));
}

TEST_CASE("rwl1 with one round is basis pursuit") {
  Rng rng(41);
  const Matrix a = gaussian_sensing(10, 24, rng);
  const Vector y = a * sparse_signal(24, 4, rng);
  const ConstraintSystem sys(make_dense(a));
  SolveOptions o;
  o.rwl1_rounds = 1;
  const auto r = rwl1(sys, y, o);
  const auto bp = basis_pursuit(sys, y, o);
  CHECK(r.coefficients == bp.coefficients);
  CHECK(r.converged == bp.converged);
}

TEST_CASE("rwl1 recovers a 1-sparse signal") {
  Rng rng(42);
  const Matrix a = gaussian_sensing(8, 20, rng);
  Vector s = Vector::Zero(20);
  s(13) = -2.5;
  const Vector y = a * s;
  const auto r = rwl1(ConstraintSystem(make_dense(a)), y);
  CHECK(r.converged);
  CHECK(feasible(r, y));
  CHECK((r.coefficients - s).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("rwl1 flags a failed round") {
  Rng rng(43);
  const Matrix a = gaussian_sensing(12, 30, rng);
  const Vector y = a * sparse_signal(30, 8, rng);
  SolveOptions o;
  o.max_iterations = 2;
  const auto r = rwl1(ConstraintSystem(make_dense(a)), y, o);
  CHECK_FALSE(r.converged);
}

TEST_CASE("rwl1 beats basis pursuit on compressible signals") {
  std::vector<double> gain_rw, gain_bp;
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(500 + static_cast<std::uint64_t>(seed));
    const Index n = 64;
    const Matrix a = gaussian_sensing(24, n, rng);
    // Power-law magnitudes |s|_(k) = k^-1.5 in random order with random signs.
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    Vector s(n);
    for (Index k = 0; k < n; ++k) {
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      s(perm[static_cast<std::size_t>(k)]) = sign * std::pow(static_cast<double>(k + 1), -1.5);
    }
    const Vector y = a * s;
    const ConstraintSystem sys(make_dense(a));
    gain_bp.push_back(snr_db(s, basis_pursuit(sys, y).coefficients));
    gain_rw.push_back(snr_db(s, rwl1(sys, y).coefficients));
  }
  auto med = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  CHECK(med(gain_rw) >= med(gain_bp));
}

TEST_CASE("irls examples") {
  SUBCASE("identity operator") {
    const Vector y = vec_of({1.5, -2, 0.25});
    const auto r = irls(ConstraintSystem(make_identity(3)), y);
    CHECK(r.iterations == 1);
    CHECK(r.converged);
    CHECK((r.coefficients - y).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("one equation") {
    Matrix a(1, 2);
    a << 1, 1;
    const auto r = irls(ConstraintSystem(make_dense(a)), vec_of({2}));
    CHECK(r.converged);
    CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(std::abs(r.coefficients.sum() - 2.0) <= 1e-9);
  }
  SUBCASE("zero measurements") {
    Rng rng(2);
    const auto r = irls(ConstraintSystem(make_dense(gaussian_sensing(3, 7, rng))), Vector::Zero(3));
    CHECK(r.coefficients.isZero(0.0));
    CHECK(r.converged);
  }
}

TEST_CASE("irls recovers sparse spikes") {
  int ok = 0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(900 + static_cast<std::uint64_t>(seed));
    const Matrix a = gaussian_sensing(20, 40, rng);
    const Vector s = sparse_signal(40, 3, rng);
    const auto r = irls(ConstraintSystem(make_dense(a)), a * s);
    CHECK(feasible(r, a * s));
    ok += (r.coefficients - s).cwiseAbs().maxCoeff() <= 1e-4 ? 1 : 0;
  }
  CHECK(ok >= 9);
}

TEST_CASE("irls regularizes a singular weighted system") {
  // The start point is exactly sparse, so with the floor on eps the Gram
  // matrix stays definite; a zero column makes it singular instead.
  Matrix a(2, 3);
  a << 1, 0, 0, 0, 0, 0;
  const auto r = irls(ConstraintSystem(make_dense(a)), vec_of({1, 0}));
  CHECK((a * r.coefficients - vec_of({1, 0})).norm() <= 1e-6);
}

}  // TEST_SUITE
