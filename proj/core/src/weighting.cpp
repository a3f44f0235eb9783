#include "kubecs/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "kubecs/errors.hpp"

namespace kubecs {

Matrix jpeg_luminance_q() {
  Matrix q(8, 8);
  q << 16, 11, 10, 16, 24, 40, 51, 61,
       12, 12, 14, 19, 26, 58, 60, 55,
       14, 13, 16, 24, 40, 57, 69, 56,
       14, 17, 22, 29, 51, 87, 80, 62,
       18, 22, 37, 56, 68, 109, 103, 77,
       24, 35, 55, 64, 81, 104, 113, 92,
       49, 64, 78, 87, 103, 121, 120, 101,
       72, 92, 95, 98, 112, 100, 103, 99;
  return q;
}

Matrix interpolate_quant(const Matrix& q, Index size) {
  if (q.rows() != q.cols() || q.rows() < 1) throw DimensionError("quantization table must be square");
  if (size < 1) throw DimensionError("interpolate_quant: size must be >= 1");
  const Index n = q.rows();
  if (size == n) return q;
  const double scale = static_cast<double>(n) / static_cast<double>(size);
  auto sample_coord = [&](Index i) {
    const double c = (static_cast<double>(i) + 0.5) * scale - 0.5;
    return std::clamp(c, 0.0, static_cast<double>(n - 1));
  };
  Matrix out(size, size);
  for (Index i = 0; i < size; ++i) {
    const double r = sample_coord(i);
    const auto r0 = static_cast<Index>(std::floor(r));
    const Index r1 = std::min(r0 + 1, n - 1);
    const double fr = r - static_cast<double>(r0);
    for (Index j = 0; j < size; ++j) {
      const double c = sample_coord(j);
      const auto c0 = static_cast<Index>(std::floor(c));
      const Index c1 = std::min(c0 + 1, n - 1);
      const double fc = c - static_cast<double>(c0);
      out(i, j) = (1 - fr) * ((1 - fc) * q(r0, c0) + fc * q(r0, c1)) +
                  fr * ((1 - fc) * q(r1, c0) + fc * q(r1, c1));
    }
  }
  return out;
}

Matrix flip_transpose(const Matrix& q) {
  // D * Q^T * D with D the anti-identity.
  return q.transpose().colwise().reverse().rowwise().reverse();
}

Vector perceptual_weights(const Matrix& q, Index block_size) {
  if (block_size < 2) throw DimensionError("perceptual_weights: block size must be >= 2");
  if (q.rows() != q.cols()) throw DimensionError("quantization table must be square");
  if (!q.allFinite() || (q.array() <= 0.0).any()) {
    throw DataError("quantization table entries must be finite and positive");
  }
  const Matrix inverse_weights = flip_transpose(interpolate_quant(q, block_size));
  return vec(inverse_weights).cwiseInverse();
}

Vector extend_temporal(const Vector& w, Index frames) {
  if (frames < 1) throw DimensionError("extend_temporal: frame count must be >= 1");
  return w.replicate(frames, 1);
}

Vector normalize_max(const Vector& w) {
  if (w.size() == 0) return w;
  const double top = w.maxCoeff();
  if (!(top > 0.0)) throw DataError("normalize_max: weights must be positive");
  return w / top;
}

Matrix load_quant_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open quantization table '" + path.string() + "'");
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      throw DataError(path.string() + ": not a number: '" + token + "'");
    }
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DataError(path.string() + ": entries must be positive, got " + token);
    }
    values.push_back(v);
  }
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(values.size()))));
  if (side < 2 || static_cast<std::size_t>(side * side) != values.size()) {
    throw DataError(path.string() + ": expected a square table, got " +
                    std::to_string(values.size()) + " entries");
  }
  Matrix q(side, side);
  for (Index i = 0; i < side; ++i) {
    for (Index j = 0; j < side; ++j) q(i, j) = values[static_cast<std::size_t>(i * side + j)];
  }
  return q;
}

}  // namespace kubecs
