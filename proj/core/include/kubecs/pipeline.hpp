#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kubecs/linear_op.hpp"
#include "kubecs/solvers.hpp"

namespace kubecs {

/// Measurement / sparsifying-basis structure per cube.
enum class Variant {
  CsIndependent,  // Phi = I (x) Phi_s,   Psi = I (x) Psi_s
  Kcs,            // Phi = I (x) Phi_s,   Psi = Psi_t (x) Psi_s
  GlobalKcs,      // Phi = Phi_t (x) Phi_s, Psi = Psi_t (x) Psi_s
  Cube3d,         // Phi = dense Phi_3,   Psi = Psi_t (x) Psi_s
};

enum class Weighting { None, Perceptual, Rwl1, Irls };

enum class PadMode { Error, EdgeReplicate };

std::string_view to_string(Variant v);
std::string_view to_string(Weighting w);
std::string_view to_string(PadMode p);
/// Parse the names produced by to_string; throw DataError otherwise.
Variant parse_variant(std::string_view name);
Weighting parse_weighting(std::string_view name);
PadMode parse_pad_mode(std::string_view name);

/// T grayscale frames of identical size; each frame is height x width.
struct Gop {
  std::vector<Matrix> frames;

  Index frame_count() const { return static_cast<Index>(frames.size()); }
  Index height() const { return frames.empty() ? 0 : frames.front().rows(); }
  Index width() const { return frames.empty() ? 0 : frames.front().cols(); }
};

/// Throws DataError for empty or ragged GoPs.
void validate_gop(const Gop& gop);

struct GopGeometry {
  Index width = 0;
  Index height = 0;
  Index frames = 0;
  Index block = 0;
  Index padded_width = 0;
  Index padded_height = 0;

  Index blocks_down() const { return padded_height / block; }
  Index blocks_across() const { return padded_width / block; }
  Index cube_count() const { return blocks_down() * blocks_across(); }
  Index cube_length() const { return block * block * frames; }
};

GopGeometry make_geometry(const Gop& gop, Index block, PadMode pad);

/// B x B x T block. `data` is vectorized column-major within a frame with
/// frames stacked slowest, so its length is B*B*T.
struct Cube {
  Index index = 0;
  Index row = 0;
  Index col = 0;
  Vector data;
};

/// Cubes in raster order over the block grid.
std::vector<Cube> partition_gop(const Gop& gop, Index block, PadMode pad);

/// Inverse of partition_gop: places each cube at its origin and crops the
/// padding away.
Gop assemble_gop(const std::vector<Vector>& cube_data, const GopGeometry& geometry);

struct SensingConfig {
  Variant variant = Variant::Kcs;
  double rate = 0.5;
  Index block_size = 8;
  Index gop_len = 8;
  std::uint64_t seed = 1;
  Weighting weighting = Weighting::None;
};

struct MeasurementCounts {
  Index spatial = 0;   // rows of Phi_s (0 for Cube3d)
  Index temporal = 0;  // rows of Phi_t, or T when time is not sensed
  Index total = 0;     // rows of Phi
};

/// Per-frame variants use round(rate B^2) rows per frame. GlobalKcs senses
/// round(sqrt(rate) T) temporal rows and round(rate B^2 T / temporal) spatial
/// rows. Cube3d uses round(rate B^2 T).
/// Throws DimensionError when any count would be zero.
MeasurementCounts measurement_counts(const SensingConfig& cfg);

struct SensingOperators {
  LinearOpPtr phi;    // measurement, cube -> y
  LinearOpPtr psi;    // synthesis, coefficients -> cube
  LinearOpPtr theta;  // phi * psi
};

/// Gaussian factors are drawn from Rng(cfg.seed): Phi_s, then Phi_t, then Phi_3.
SensingOperators build_operators(const SensingConfig& cfg);

/// phi * cube.data.
Vector sample_cube(const Cube& cube, const LinearOp& phi);

/// Seed of the Gaussian factors for one cube. A negative cube index selects
/// the single matrix shared by all cubes.
std::uint64_t operator_seed(std::uint64_t global_seed, Variant variant, Index cube_index);

inline constexpr double kPixelOffset = 128.0;

struct PipelineOptions {
  SolveOptions solve;
  bool shared_phi = true;
  PadMode pad = PadMode::Error;
  /// Quantization table for perceptual weights; the JPEG luminance table if
  /// unset.
  std::optional<Matrix> quant_table;
  int workers = 1;
};

struct SampledGop {
  GopGeometry geometry;
  /// Global index of this GoP's first cube; per-cube seeds use it.
  Index first_cube_index = 0;
  std::vector<Vector> measurements;
};

/// Partitions, centers pixels around kPixelOffset and senses every cube.
/// The GoP's own frame count replaces cfg.gop_len.
SampledGop sample_gop(const Gop& gop, const SensingConfig& cfg, const PipelineOptions& opts,
                      Index first_cube_index = 0);

struct CubeResult {
  Index index = 0;
  Vector reconstructed;  // clipped to [0, 255], same layout as Cube::data
  SolveReport report;
  double wall_ms = 0.0;
};

struct Reconstruction {
  Gop gop;
  std::vector<CubeResult> cubes;
};

/// Solves every cube independently on opts.workers threads. Output does not
/// depend on the worker count.
Reconstruction reconstruct_gop(const SampledGop& sampled, const SensingConfig& cfg,
                               const PipelineOptions& opts);

}  // namespace kubecs
