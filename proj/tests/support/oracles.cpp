#include "oracles.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <unistd.h>

namespace oracle {

Matrix dct(int n) {
  Matrix d(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      d(i, k) = scale * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
    }
  }
  return d;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

namespace {

constexpr double kTol = 1e-10;

// Tableau rows 0..m-1 hold constraints, row m the reduced costs; the last
// column is the right-hand side (negated objective in row m).
struct Tableau {
  Matrix t;
  std::vector<Eigen::Index> basis;
  Eigen::Index m = 0;
  Eigen::Index rhs = 0;

  void pivot(Eigen::Index r, Eigen::Index s) {
    t.row(r) /= t(r, s);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != r && t(i, s) != 0.0) t.row(i) -= t(i, s) * t.row(r);
    }
    basis[static_cast<std::size_t>(r)] = s;
  }

  // Returns false when unbounded.
  bool run(Eigen::Index allowed_cols) {
    for (;;) {
      Eigen::Index s = -1;
      for (Eigen::Index j = 0; j < allowed_cols; ++j) {
        if (t(m, j) < -kTol) {
          s = j;
          break;
        }
      }
      if (s < 0) return true;
      Eigen::Index r = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (t(i, s) <= kTol) continue;
        const double ratio = t(i, rhs) / t(i, s);
        if (r < 0 || ratio < best - kTol ||
            (std::abs(ratio - best) <= kTol &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(r)])) {
          r = i;
          best = ratio;
        }
      }
      if (r < 0) return false;
      pivot(r, s);
    }
  }
};

}  // namespace

std::optional<double> lp_min(const Matrix& a, const Vector& b, const Vector& c) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  Tableau tab;
  tab.m = m;
  tab.rhs = n + m;
  tab.t = Matrix::Zero(m + 1, n + m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0 ? -1.0 : 1.0;
    tab.t.block(i, 0, 1, n) = sign * a.row(i);
    tab.t(i, n + i) = 1.0;
    tab.t(i, tab.rhs) = sign * b(i);
    tab.basis.push_back(n + i);
  }

  // Phase 1: minimize the sum of artificials.
  for (Eigen::Index i = 0; i < m; ++i) {
    tab.t.block(m, 0, 1, n) -= tab.t.block(i, 0, 1, n);
    tab.t(m, tab.rhs) -= tab.t(i, tab.rhs);
  }
  tab.run(n + m);
  if (-tab.t(m, tab.rhs) > 1e-8 * std::max(1.0, b.cwiseAbs().sum())) return std::nullopt;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < n) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(tab.t(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
    }
  }

  // Phase 2 over the original columns only.
  tab.t.row(m).setZero();
  tab.t.block(m, 0, 1, n) = c.transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index k = tab.basis[static_cast<std::size_t>(i)];
    if (k >= n) continue;
    const double ck = c(k);
    if (ck != 0.0) tab.t.row(m) -= ck * tab.t.row(i);
  }
  if (!tab.run(n)) return -std::numeric_limits<double>::infinity();
  return -tab.t(m, tab.rhs);
}

std::optional<double> weighted_l1_min(const Matrix& a, const Vector& y, const Vector& w) {
  const Eigen::Index n = a.cols();
  Matrix split(a.rows(), 2 * n);
  split << a, -a;
  Vector c(2 * n);
  c << w, w;
  return lp_min(split, y, c);
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("kubecs-" + tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter.fetch_add(1)));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace oracle
