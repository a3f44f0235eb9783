#pragma once

#include <cstdint>

#include "kubecs/pipeline.hpp"

namespace kubecs {

struct SynthOptions {
  Index width = 32;
  Index height = 32;
  Index frames = 8;
  /// Standard deviation of additive Gaussian pixel noise (0 disables).
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// A bright square drifting diagonally by one pixel per frame over a
/// smooth gradient background with area-antialiased edges; values are
/// quantized to integers in [0, 255].
Gop synth_moving_square(const SynthOptions& opts);

}  // namespace kubecs
