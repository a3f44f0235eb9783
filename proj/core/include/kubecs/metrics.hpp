#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "kubecs/pipeline.hpp"

namespace kubecs {

/// PSNR value reported for a zero-error reconstruction.
inline constexpr double kExactPsnr = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) over all pixels of all frames; kExactPsnr when the
/// inputs are identical. Throws DimensionError on shape mismatch.
double psnr(const Gop& reference, const Gop& test, double peak = 255.0);
double psnr(const std::vector<Gop>& reference, const std::vector<Gop>& test, double peak = 255.0);

struct SweepSpec {
  std::vector<double> rates;
  std::vector<Variant> variants;
  std::vector<Weighting> weightings;
  std::vector<std::uint64_t> seeds;
  /// Input video already split into GoPs.
  std::vector<Gop> input;
  Index block_size = 8;
  PipelineOptions pipeline;
};

/// Throws DataError for empty lists or rates that are not strictly increasing
/// inside (0, 1].
void validate_sweep(const SweepSpec& spec);

struct SweepRow {
  Variant variant = Variant::Kcs;
  Weighting weighting = Weighting::None;
  double rate = 0.0;
  std::uint64_t seed = 0;
  double psnr_db = 0.0;
  long long iterations = 0;
  double wall_ms = 0.0;
  double converged_fraction = 0.0;
};

struct SweepOptions {
  int workers = 1;
  /// Wall-clock times make the output run-dependent; when false wall_ms is 0.
  bool record_timing = false;
};

/// One row per (variant, weighting, rate, seed), in that nesting order.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepOptions& opts = {});

/// Six significant digits; "inf" for +infinity.
std::string format_real(double v);

inline constexpr std::string_view kCsvHeader =
    "variant,weighting,rate,seed,psnr_db,iters,wall_ms,converged_frac";

std::string emit_csv(const std::vector<SweepRow>& rows);
/// Throws DataError on a malformed document.
std::vector<SweepRow> parse_csv(std::string_view text);

/// Two-column "rate median_psnr" blocks, one per (variant, weighting) series,
/// separated by blank lines so gnuplot can address them with `index`.
std::string emit_gnuplot(const std::vector<SweepRow>& rows);

/// Median of a non-empty list (mean of the middle pair for even sizes).
double median(std::vector<double> values);

}  // namespace kubecs
