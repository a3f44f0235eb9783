#pragma once

#include <filesystem>

#include "kubecs/linalg.hpp"

namespace kubecs {

/// ITU-T T.81 Annex K luminance quantization table (8x8).
Matrix jpeg_luminance_q();

/// Resamples a quantization table to size x size. Samples sit at cell
/// centers of a uniform grid; coordinates are clamped at the borders. The
/// identity when size equals the input size.
Matrix interpolate_quant(const Matrix& q, Index size);

/// Q'(i, j) = Q(n-1-j, n-1-i): transpose followed by an up-down and
/// left-right flip.
Matrix flip_transpose(const Matrix& q);

/// Spatial weight diagonal for a block of side block_size, indexed like the
/// column-major vec of a block's 2-D DCT coefficients (row = vertical
/// frequency). Returns 1 / vec(Q'), where Q' is the flipped transpose of the
/// (interpolated) table. Throws DimensionError for block_size < 2 and
/// DataError for non-positive entries.
Vector perceptual_weights(const Matrix& q, Index block_size);

/// Diagonal of I_T (x) W: w repeated once per frame.
Vector extend_temporal(const Vector& w, Index frames);

/// Scales w so its largest entry is 1.
Vector normalize_max(const Vector& w);

/// Reads whitespace-separated positive numbers (row-major square table).
Matrix load_quant_table(const std::filesystem::path& path);

}  // namespace kubecs
