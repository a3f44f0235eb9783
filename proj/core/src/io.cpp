#include "kubecs/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "kubecs/errors.hpp"

namespace kubecs {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::string& bytes, std::size_t& pos, const std::string& origin) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw DataError(origin + ": truncated PGM header");
  return bytes.substr(start, pos - start);
}

Index pgm_number(const std::string& token, const std::string& origin) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw DataError(origin + ": malformed PGM header field '" + token + "'");
  }
  return std::stoll(token);
}

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string exact_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr std::string_view kBundleMagic = "KUBECS-MEASUREMENTS";

}  // namespace

double to_pixel(double v) { return std::round(std::clamp(v, 0.0, 255.0)); }

Matrix decode_pgm(const std::string& bytes, const std::string& origin) {
  std::size_t pos = 0;
  if (pgm_token(bytes, pos, origin) != "P5") throw DataError(origin + ": not a binary PGM (P5)");
  const Index width = pgm_number(pgm_token(bytes, pos, origin), origin);
  const Index height = pgm_number(pgm_token(bytes, pos, origin), origin);
  const Index maxval = pgm_number(pgm_token(bytes, pos, origin), origin);
  if (width < 1 || height < 1) throw DataError(origin + ": PGM has zero size");
  if (maxval != 255) throw DataError(origin + ": PGM maxval must be 255, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw DataError(origin + ": truncated PGM header");
  }
  ++pos;
  const auto expected = static_cast<std::size_t>(width * height);
  if (bytes.size() - pos != expected) {
    throw DataError(origin + ": PGM pixel data has " + std::to_string(bytes.size() - pos) +
                    " bytes, expected " + std::to_string(expected));
  }
  Matrix frame(height, width);
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) {
      frame(r, c) = static_cast<unsigned char>(bytes[pos++]);
    }
  }
  return frame;
}

std::string encode_pgm(const Matrix& frame) {
  std::string out = "P5\n" + std::to_string(frame.cols()) + " " + std::to_string(frame.rows()) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(frame.size()));
  for (Index r = 0; r < frame.rows(); ++r) {
    for (Index c = 0; c < frame.cols(); ++c) {
      out.push_back(static_cast<char>(static_cast<unsigned char>(to_pixel(frame(r, c)))));
    }
  }
  return out;
}

Matrix read_pgm(const fs::path& path) { return decode_pgm(read_file(path), path.string()); }

void write_pgm(const fs::path& path, const Matrix& frame) { write_file(path, encode_pgm(frame)); }

std::vector<Matrix> read_raw(const fs::path& path, Index width, Index height, Index frames) {
  if (width < 1 || height < 1 || frames < 1) {
    throw DataError(path.string() + ": raw input needs positive width, height and frame count");
  }
  const std::string bytes = read_file(path);
  const auto expected = static_cast<std::size_t>(width * height * frames);
  if (bytes.size() != expected) {
    throw DataError(path.string() + ": raw file has " + std::to_string(bytes.size()) +
                    " bytes, expected " + std::to_string(expected) + " (" + std::to_string(width) +
                    "x" + std::to_string(height) + "x" + std::to_string(frames) + ")");
  }
  std::vector<Matrix> out;
  std::size_t pos = 0;
  for (Index t = 0; t < frames; ++t) {
    Matrix f(height, width);
    for (Index r = 0; r < height; ++r) {
      for (Index c = 0; c < width; ++c) f(r, c) = static_cast<unsigned char>(bytes[pos++]);
    }
    out.push_back(std::move(f));
  }
  return out;
}

void write_raw(const fs::path& path, const std::vector<Matrix>& frames) {
  std::string bytes;
  for (const auto& f : frames) {
    for (Index r = 0; r < f.rows(); ++r) {
      for (Index c = 0; c < f.cols(); ++c) {
        bytes.push_back(static_cast<char>(static_cast<unsigned char>(to_pixel(f(r, c)))));
      }
    }
  }
  write_file(path, bytes);
}

VideoSource detect_source(const fs::path& path, Index width, Index height, Index frames) {
  VideoSource src;
  src.path = path;
  if (fs::is_directory(path)) {
    src.kind = VideoSource::Kind::PgmDirectory;
  } else if (path.extension() == ".pgm") {
    src.kind = VideoSource::Kind::PgmFile;
  } else {
    src.kind = VideoSource::Kind::Raw;
    src.width = width;
    src.height = height;
    src.frames = frames;
  }
  return src;
}

std::vector<Matrix> load_frames(const VideoSource& src) {
  switch (src.kind) {
    case VideoSource::Kind::Raw:
      return read_raw(src.path, src.width, src.height, src.frames);
    case VideoSource::Kind::PgmFile:
      return {read_pgm(src.path)};
    case VideoSource::Kind::PgmDirectory: {
      if (!fs::is_directory(src.path)) throw DataError("'" + src.path.string() + "' is not a directory");
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(src.path)) {
        if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      if (files.empty()) throw DataError("'" + src.path.string() + "' holds no .pgm frames");
      std::vector<Matrix> frames;
      for (const auto& f : files) {
        frames.push_back(read_pgm(f));
        if (frames.back().rows() != frames.front().rows() || frames.back().cols() != frames.front().cols()) {
          throw DataError(f.string() + ": frame size differs from " + files.front().string());
        }
      }
      return frames;
    }
  }
  return {};
}

std::vector<Gop> split_gops(std::vector<Matrix> frames, Index gop_len) {
  if (gop_len < 1) throw DataError("GoP length must be >= 1");
  std::vector<Gop> gops;
  for (std::size_t i = 0; i < frames.size(); i += static_cast<std::size_t>(gop_len)) {
    Gop g;
    const std::size_t end = std::min(frames.size(), i + static_cast<std::size_t>(gop_len));
    for (std::size_t t = i; t < end; ++t) g.frames.push_back(std::move(frames[t]));
    gops.push_back(std::move(g));
  }
  return gops;
}

std::vector<Gop> load_video(const VideoSource& src, Index gop_len) {
  return split_gops(load_frames(src), gop_len);
}

void save_video(const std::vector<Gop>& gops, const fs::path& dir) {
  if (gops.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
  std::size_t n = 0;
  for (const auto& g : gops) {
    for (const auto& f : g.frames) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05zu.pgm", n++);
      write_pgm(dir / name, f);
    }
  }
}

std::uint64_t sensing_fingerprint(const SensingConfig& cfg, bool shared_phi, PadMode pad) {
  const std::string canon = "variant=" + std::string(to_string(cfg.variant)) +
                            ";rate=" + exact_real(cfg.rate) +
                            ";block=" + std::to_string(cfg.block_size) +
                            ";gop=" + std::to_string(cfg.gop_len) +
                            ";seed=" + std::to_string(cfg.seed) +
                            ";shared=" + (shared_phi ? "1" : "0") +
                            ";pad=" + std::string(to_string(pad));
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_bundle(std::ostream& out, const MeasurementBundle& b) {
  std::string header;
  header += std::string(kBundleMagic) + " " + std::to_string(MeasurementBundle::kVersion) + "\n";
  header += "variant " + std::string(to_string(b.variant)) + "\n";
  header += "rate " + exact_real(b.rate) + "\n";
  header += "block_size " + std::to_string(b.block_size) + "\n";
  header += "gop " + std::to_string(b.gop_len) + "\n";
  header += "seed " + std::to_string(b.seed) + "\n";
  header += std::string("shared_phi ") + (b.shared_phi ? "1" : "0") + "\n";
  header += "pad_mode " + std::string(to_string(b.pad)) + "\n";
  header += "fingerprint " + hex64(b.fingerprint) + "\n";
  header += "video " + std::to_string(b.width) + " " + std::to_string(b.height) + " " +
            std::to_string(b.frames) + "\n";
  header += "gops " + std::to_string(b.gops.size()) + "\n";
  std::size_t expected_vectors = 0;
  for (std::size_t i = 0; i < b.gops.size(); ++i) {
    const auto& g = b.gops[i];
    header += "gop_entry " + std::to_string(i) + " " + std::to_string(g.frames) + " " +
              std::to_string(g.cubes) + " " + std::to_string(g.length) + "\n";
    expected_vectors += static_cast<std::size_t>(g.cubes);
  }
  header += "data\n";
  if (expected_vectors != b.measurements.size()) {
    throw DataError("bundle: gop entries describe " + std::to_string(expected_vectors) +
                    " cubes but " + std::to_string(b.measurements.size()) + " vectors were given");
  }
  std::string payload;
  std::size_t k = 0;
  for (const auto& g : b.gops) {
    for (Index c = 0; c < g.cubes; ++c, ++k) {
      const Vector& y = b.measurements[k];
      if (y.size() != g.length) throw DataError("bundle: measurement vector length mismatch");
      for (Index i = 0; i < y.size(); ++i) put_u64_le(payload, std::bit_cast<std::uint64_t>(y(i)));
    }
  }
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("bundle: write failed");
}

MeasurementBundle read_bundle(std::istream& in) {
  MeasurementBundle b;
  auto next_line = [&](const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(std::string("bundle: missing ") + what);
    return line;
  };
  auto field = [&](const char* key) {
    std::istringstream ls(next_line(key));
    std::string name;
    ls >> name;
    if (name != key) throw DataError(std::string("bundle: expected '") + key + "', got '" + name + "'");
    std::string rest;
    std::getline(ls >> std::ws, rest);
    return rest;
  };
  auto as_index = [](const std::string& s, const char* key) {
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || v < 0) {
      throw DataError(std::string("bundle: bad value for ") + key + ": '" + s + "'");
    }
    return static_cast<Index>(v);
  };

  {
    std::istringstream ls(next_line("magic"));
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != kBundleMagic) throw DataError("bundle: not a measurements bundle");
    if (version != MeasurementBundle::kVersion) {
      throw DataError("bundle: unsupported version " + std::to_string(version));
    }
  }
  b.variant = parse_variant(field("variant"));
  {
    const std::string r = field("rate");
    try {
      b.rate = std::stod(r);
    } catch (const std::exception&) {
      throw DataError("bundle: bad rate '" + r + "'");
    }
  }
  b.block_size = as_index(field("block_size"), "block_size");
  b.gop_len = as_index(field("gop"), "gop");
  {
    const std::string s = field("seed");
    std::size_t used = 0;
    try {
      b.seed = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw DataError("bundle: bad seed '" + s + "'");
  }
  const std::string shared = field("shared_phi");
  if (shared != "0" && shared != "1") throw DataError("bundle: bad shared_phi '" + shared + "'");
  b.shared_phi = shared == "1";
  b.pad = parse_pad_mode(field("pad_mode"));
  {
    const std::string f = field("fingerprint");
    std::size_t used = 0;
    try {
      b.fingerprint = std::stoull(f, &used, 16);
    } catch (const std::exception&) {
      used = 0;
    }
    if (f.size() != 16 || used != 16) throw DataError("bundle: bad fingerprint '" + f + "'");
  }
  {
    std::istringstream ls(field("video"));
    long long w = -1, h = -1, t = -1;
    ls >> w >> h >> t;
    if (!ls || w < 1 || h < 1 || t < 1) throw DataError("bundle: bad video geometry");
    b.width = w;
    b.height = h;
    b.frames = t;
  }
  const Index count = as_index(field("gops"), "gops");
  std::size_t total_values = 0;
  for (Index i = 0; i < count; ++i) {
    std::istringstream ls(field("gop_entry"));
    long long idx = -1, frames = -1, cubes = -1, length = -1;
    ls >> idx >> frames >> cubes >> length;
    if (!ls || idx != i || frames < 1 || cubes < 1 || length < 1) {
      throw DataError("bundle: bad gop_entry " + std::to_string(i));
    }
    b.gops.push_back({frames, cubes, length});
    total_values += static_cast<std::size_t>(cubes * length);
  }
  if (next_line("data marker") != "data") throw DataError("bundle: missing data marker");

  std::string payload{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (payload.size() != total_values * 8) {
    throw DataError("bundle: payload has " + std::to_string(payload.size()) + " bytes, expected " +
                    std::to_string(total_values * 8));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  for (const auto& g : b.gops) {
    for (Index c = 0; c < g.cubes; ++c) {
      Vector y(g.length);
      for (Index i = 0; i < g.length; ++i, p += 8) y(i) = std::bit_cast<double>(get_u64_le(p));
      b.measurements.push_back(std::move(y));
    }
  }
  return b;
}

void write_bundle(const fs::path& path, const MeasurementBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_bundle(out, bundle);
}

MeasurementBundle read_bundle(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return read_bundle(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace kubecs
