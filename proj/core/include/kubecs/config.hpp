#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kubecs/metrics.hpp"
#include "kubecs/pipeline.hpp"

namespace kubecs {

/// Where frames come from. `path` is a PGM file, a directory of PGM frames,
/// a raw planar file, or the literal "synth:moving-square".
struct InputSpec {
  std::string path;
  Index width = 0;   // raw and synthetic inputs
  Index height = 0;  // raw and synthetic inputs
  Index frames = 0;  // raw and synthetic inputs
  double synth_noise = 0.0;
  std::uint64_t synth_seed = 0;
};

inline constexpr std::string_view kSynthInput = "synth:moving-square";

/// Parsed `key = value` run configuration. Lists are comma separated; `#`
/// starts a comment.
///
/// Keys: input, width, height, frames, synth_noise, synth_seed, block_size,
/// gop, variant, weighting, rate, seed (each of those four accepts a list and
/// a plural alias), workers, pad_mode, shared_phi, quant_table,
/// max_iterations, feasibility_tol, objective_tol, admm_rho,
/// admm_relaxation, check_interval, rwl1_epsilon, rwl1_rounds, output.
struct RunConfig {
  InputSpec input;
  Index block_size = 8;
  Index gop = 8;
  std::vector<Variant> variants{Variant::Kcs};
  std::vector<Weighting> weightings{Weighting::None};
  std::vector<double> rates{0.5};
  std::vector<std::uint64_t> seeds{1};
  int workers = 0;  // 0: default_workers()
  PadMode pad = PadMode::Error;
  bool shared_phi = true;
  std::optional<std::string> quant_table;
  SolveOptions solve;
  std::optional<std::string> output;
};

/// Relative paths are resolved against base_dir. Unknown keys, duplicate
/// keys and malformed values throw DataError.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

std::vector<Gop> load_input(const RunConfig& cfg);

/// The single sensing configuration of a sample/reconstruct run; throws
/// DataError when a list key holds more than one value.
SensingConfig single_sensing_config(const RunConfig& cfg);

PipelineOptions pipeline_options(const RunConfig& cfg, int workers);

SweepSpec sweep_spec(const RunConfig& cfg, std::vector<Gop> input);

}  // namespace kubecs
