#include "kubecs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kubecs/errors.hpp"

namespace kubecs {

namespace {

// Length of [a, b) covered by [lo, hi).
double overlap(double a, double b, double lo, double hi) {
  return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}

}  // namespace

Gop synth_moving_square(const SynthOptions& opts) {
  if (opts.width < 1 || opts.height < 1 || opts.frames < 1) {
    throw DataError("synthetic GoP needs positive width, height and frame count");
  }
  const double w = static_cast<double>(opts.width);
  const double h = static_cast<double>(opts.height);
  const double side = std::max(2.0, std::round(std::min(w, h) / 4.0));
  constexpr double kSquare = 220.0;
  constexpr double kSpeed = 1.0;

  Rng rng(opts.seed);
  Gop gop;
  gop.frames.reserve(static_cast<std::size_t>(opts.frames));
  for (Index t = 0; t < opts.frames; ++t) {
    const double top = h / 4.0 + kSpeed * static_cast<double>(t);
    const double left = w / 4.0 + kSpeed * static_cast<double>(t);
    Matrix f(opts.height, opts.width);
    for (Index r = 0; r < opts.height; ++r) {
      const double y = (static_cast<double>(r) + 0.5) / h;
      for (Index c = 0; c < opts.width; ++c) {
        const double x = (static_cast<double>(c) + 0.5) / w;
        const double background =
            50.0 + 70.0 * x + 40.0 * y + 12.0 * std::sin(std::numbers::pi * (x + 2.0 * y));
        const double cover = overlap(static_cast<double>(r), r + 1.0, top, top + side) *
                             overlap(static_cast<double>(c), c + 1.0, left, left + side);
        double v = (1.0 - cover) * background + cover * kSquare;
        if (opts.noise_sigma > 0.0) v += opts.noise_sigma * rng.normal();
        f(r, c) = std::clamp(std::round(v), 0.0, 255.0);
      }
    }
    gop.frames.push_back(std::move(f));
  }
  return gop;
}

}  // namespace kubecs
