#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kubecs/pipeline.hpp"

namespace kubecs {

namespace fs = std::filesystem;

/// Clip to [0, 255], then round half away from zero.
double to_pixel(double v);

/// Binary PGM (P5) with maxval 255.
Matrix read_pgm(const fs::path& path);
void write_pgm(const fs::path& path, const Matrix& frame);
Matrix decode_pgm(const std::string& bytes, const std::string& origin = "<memory>");
std::string encode_pgm(const Matrix& frame);

/// Planar 8-bit grayscale frames back to back.
std::vector<Matrix> read_raw(const fs::path& path, Index width, Index height, Index frames);
void write_raw(const fs::path& path, const std::vector<Matrix>& frames);

struct VideoSource {
  enum class Kind { Raw, PgmDirectory, PgmFile };
  Kind kind = Kind::PgmFile;
  fs::path path;
  // Raw only.
  Index width = 0;
  Index height = 0;
  Index frames = 0;
};

/// A directory is a PGM sequence, a *.pgm file a single image, anything else
/// raw (which then needs the raw dimensions).
VideoSource detect_source(const fs::path& path, Index width = 0, Index height = 0, Index frames = 0);

std::vector<Matrix> load_frames(const VideoSource& src);

/// Consecutive GoPs of gop_len frames; a trailing remainder forms a shorter
/// final GoP.
std::vector<Gop> split_gops(std::vector<Matrix> frames, Index gop_len);

std::vector<Gop> load_video(const VideoSource& src, Index gop_len);

/// Writes frame_00000.pgm, frame_00001.pgm, ... numbering across GoPs.
void save_video(const std::vector<Gop>& gops, const fs::path& dir);

/// Self-describing container for sensed measurements: a text header followed
/// by little-endian float64 measurement vectors in cube-index order.
struct MeasurementBundle {
  static constexpr int kVersion = 1;

  struct GopEntry {
    Index frames = 0;
    Index cubes = 0;
    Index length = 0;  // measurements per cube
  };

  Variant variant = Variant::Kcs;
  double rate = 0.0;
  Index block_size = 0;
  Index gop_len = 0;
  std::uint64_t seed = 0;
  bool shared_phi = true;
  PadMode pad = PadMode::Error;
  std::uint64_t fingerprint = 0;
  Index width = 0;
  Index height = 0;
  Index frames = 0;
  std::vector<GopEntry> gops;
  std::vector<Vector> measurements;
};

/// FNV-1a over the canonical text of every setting that shapes the
/// measurement operators.
std::uint64_t sensing_fingerprint(const SensingConfig& cfg, bool shared_phi, PadMode pad);

void write_bundle(std::ostream& out, const MeasurementBundle& bundle);
MeasurementBundle read_bundle(std::istream& in);
void write_bundle(const fs::path& path, const MeasurementBundle& bundle);
MeasurementBundle read_bundle(const fs::path& path);

}  // namespace kubecs
