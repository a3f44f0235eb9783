#include "kubecs/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <string>

#include "kubecs/errors.hpp"
#include "kubecs/parallel.hpp"
#include "kubecs/weighting.hpp"

namespace kubecs {

int default_workers() {
  if (const char* env = std::getenv("KUBECS_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::CsIndependent: return "cs-independent";
    case Variant::Kcs: return "kcs";
    case Variant::GlobalKcs: return "global-kcs";
    case Variant::Cube3d: return "cube3d";
  }
  return "?";
}

std::string_view to_string(Weighting w) {
  switch (w) {
    case Weighting::None: return "none";
    case Weighting::Perceptual: return "perceptual";
    case Weighting::Rwl1: return "rwl1";
    case Weighting::Irls: return "irls";
  }
  return "?";
}

std::string_view to_string(PadMode p) { return p == PadMode::Error ? "error" : "edge"; }

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::CsIndependent, Variant::Kcs, Variant::GlobalKcs, Variant::Cube3d}) {
    if (name == to_string(v)) return v;
  }
  throw DataError("unknown variant '" + std::string(name) +
                  "' (expected cs-independent, kcs, global-kcs or cube3d)");
}

Weighting parse_weighting(std::string_view name) {
  for (auto w : {Weighting::None, Weighting::Perceptual, Weighting::Rwl1, Weighting::Irls}) {
    if (name == to_string(w)) return w;
  }
  throw DataError("unknown weighting '" + std::string(name) +
                  "' (expected none, perceptual, rwl1 or irls)");
}

PadMode parse_pad_mode(std::string_view name) {
  if (name == "error") return PadMode::Error;
  if (name == "edge") return PadMode::EdgeReplicate;
  throw DataError("unknown pad mode '" + std::string(name) + "' (expected error or edge)");
}

void validate_gop(const Gop& gop) {
  if (gop.frames.empty()) throw DataError("GoP has no frames");
  const Index h = gop.height();
  const Index w = gop.width();
  if (h < 1 || w < 1) throw DataError("GoP frames are empty");
  for (const auto& f : gop.frames) {
    if (f.rows() != h || f.cols() != w) throw DataError("GoP frames differ in size");
  }
}

GopGeometry make_geometry(const Gop& gop, Index block, PadMode pad) {
  validate_gop(gop);
  if (block < 2) throw DimensionError("block size must be >= 2");
  GopGeometry g;
  g.width = gop.width();
  g.height = gop.height();
  g.frames = gop.frame_count();
  g.block = block;
  if (pad == PadMode::Error && (g.width % block != 0 || g.height % block != 0)) {
    throw DataError("frame size " + std::to_string(g.width) + "x" + std::to_string(g.height) +
                    " is not a multiple of block size " + std::to_string(block));
  }
  g.padded_width = (g.width + block - 1) / block * block;
  g.padded_height = (g.height + block - 1) / block * block;
  return g;
}

std::vector<Cube> partition_gop(const Gop& gop, Index block, PadMode pad) {
  const GopGeometry g = make_geometry(gop, block, pad);
  std::vector<Cube> cubes;
  cubes.reserve(static_cast<std::size_t>(g.cube_count()));
  for (Index br = 0; br < g.blocks_down(); ++br) {
    for (Index bc = 0; bc < g.blocks_across(); ++bc) {
      Cube cube;
      cube.index = static_cast<Index>(cubes.size());
      cube.row = br * block;
      cube.col = bc * block;
      cube.data.resize(g.cube_length());
      Index k = 0;
      for (Index t = 0; t < g.frames; ++t) {
        const Matrix& f = gop.frames[static_cast<std::size_t>(t)];
        for (Index c = 0; c < block; ++c) {
          const Index sc = std::min(cube.col + c, g.width - 1);
          for (Index r = 0; r < block; ++r) {
            const Index sr = std::min(cube.row + r, g.height - 1);
            cube.data(k++) = f(sr, sc);
          }
        }
      }
      cubes.push_back(std::move(cube));
    }
  }
  return cubes;
}

Gop assemble_gop(const std::vector<Vector>& cube_data, const GopGeometry& g) {
  if (static_cast<Index>(cube_data.size()) != g.cube_count()) {
    throw DimensionError("assemble_gop: expected " + std::to_string(g.cube_count()) +
                         " cubes, got " + std::to_string(cube_data.size()));
  }
  Gop gop;
  gop.frames.assign(static_cast<std::size_t>(g.frames), Matrix::Zero(g.height, g.width));
  for (Index j = 0; j < g.cube_count(); ++j) {
    const Vector& d = cube_data[static_cast<std::size_t>(j)];
    if (d.size() != g.cube_length()) throw DimensionError("assemble_gop: cube length mismatch");
    const Index row0 = (j / g.blocks_across()) * g.block;
    const Index col0 = (j % g.blocks_across()) * g.block;
    Index k = 0;
    for (Index t = 0; t < g.frames; ++t) {
      Matrix& f = gop.frames[static_cast<std::size_t>(t)];
      for (Index c = 0; c < g.block; ++c) {
        for (Index r = 0; r < g.block; ++r, ++k) {
          const Index rr = row0 + r;
          const Index cc = col0 + c;
          if (rr < g.height && cc < g.width) f(rr, cc) = d(k);
        }
      }
    }
  }
  return gop;
}

MeasurementCounts measurement_counts(const SensingConfig& cfg) {
  if (!(cfg.rate > 0.0 && cfg.rate <= 1.0)) {
    throw DimensionError("rate must lie in (0, 1], got " + std::to_string(cfg.rate));
  }
  if (cfg.block_size < 2) throw DimensionError("block size must be >= 2");
  if (cfg.gop_len < 1) throw DimensionError("GoP length must be >= 1");
  const Index b2 = cfg.block_size * cfg.block_size;
  const Index t = cfg.gop_len;
  MeasurementCounts m;
  switch (cfg.variant) {
    case Variant::CsIndependent:
    case Variant::Kcs:
      m.spatial = std::llround(cfg.rate * static_cast<double>(b2));
      m.temporal = t;
      break;
    case Variant::GlobalKcs: {
      // sqrt(rate) of the frames, then as many spatial rows as keep the
      // product closest to rate * B^2 * T.
      m.temporal = std::max<Index>(1, std::llround(std::sqrt(cfg.rate) * static_cast<double>(t)));
      m.spatial = std::min<Index>(
          b2, std::llround(cfg.rate * static_cast<double>(b2 * t) / static_cast<double>(m.temporal)));
      break;
    }
    case Variant::Cube3d:
      m.spatial = 0;
      m.temporal = t;
      m.total = std::llround(cfg.rate * static_cast<double>(b2 * t));
      if (m.total < 1) throw DimensionError("rate yields no measurements for this cube");
      return m;
  }
  if (m.spatial < 1 || m.temporal < 1) {
    throw DimensionError("rate " + std::to_string(cfg.rate) +
                         " yields no measurements per frame at block size " +
                         std::to_string(cfg.block_size));
  }
  m.total = m.spatial * m.temporal;
  return m;
}

SensingOperators build_operators(const SensingConfig& cfg) {
  const MeasurementCounts counts = measurement_counts(cfg);
  const Index b = cfg.block_size;
  const Index t = cfg.gop_len;
  const Matrix d = dct_matrix(b);
  const Matrix psi_t = dct_matrix(t);
  const Matrix psi_s = kron_materialize(KroneckerOperator({d, d}));
  const Matrix eye_t = Matrix::Identity(t, t);

  Rng rng(cfg.seed);
  SensingOperators ops;
  if (cfg.variant == Variant::Cube3d) {
    Matrix phi3 = gaussian_sensing(counts.total, b * b * t, rng);
    ops.psi = make_kron({psi_t, d, d});
    Matrix theta(phi3.rows(), phi3.cols());
    for (Index r = 0; r < phi3.rows(); ++r) {
      theta.row(r) = ops.psi->apply_adjoint(phi3.row(r).transpose()).transpose();
    }
    ops.phi = make_dense(std::move(phi3));
    ops.theta = make_dense(std::move(theta));
    return ops;
  }

  const Matrix phi_s = gaussian_sensing(counts.spatial, b * b, rng);
  const Matrix theta_s = phi_s * psi_s;
  switch (cfg.variant) {
    case Variant::CsIndependent:
      ops.phi = make_kron({eye_t, phi_s});
      ops.psi = make_kron({eye_t, d, d});
      ops.theta = make_kron({eye_t, theta_s});
      break;
    case Variant::Kcs:
      ops.phi = make_kron({eye_t, phi_s});
      ops.psi = make_kron({psi_t, d, d});
      ops.theta = make_kron({psi_t, theta_s});
      break;
    case Variant::GlobalKcs: {
      const Matrix phi_t = gaussian_sensing(counts.temporal, t, rng);
      ops.phi = make_kron({phi_t, phi_s});
      ops.psi = make_kron({psi_t, d, d});
      ops.theta = make_kron({phi_t * psi_t, theta_s});
      break;
    }
    case Variant::Cube3d:
      break;
  }
  return ops;
}

Vector sample_cube(const Cube& cube, const LinearOp& phi) {
  if (cube.data.size() != phi.cols()) {
    throw DimensionError("sample_cube: cube length " + std::to_string(cube.data.size()) +
                         " != operator cols " + std::to_string(phi.cols()));
  }
  return phi.apply(cube.data);
}

std::uint64_t operator_seed(std::uint64_t global_seed, Variant variant, Index cube_index) {
  const auto tag = cube_index < 0 ? ~std::uint64_t{0} : static_cast<std::uint64_t>(cube_index);
  return derive_seed(global_seed, static_cast<std::uint64_t>(variant) + 1, tag);
}

namespace {

SensingConfig config_for(const SensingConfig& cfg, Index frames, std::uint64_t seed) {
  SensingConfig local = cfg;
  local.gop_len = frames;
  local.seed = seed;
  return local;
}

Index seed_index(const PipelineOptions& opts, Index global_cube) {
  return opts.shared_phi ? Index{-1} : global_cube;
}

}  // namespace

SampledGop sample_gop(const Gop& gop, const SensingConfig& cfg, const PipelineOptions& opts,
                      Index first_cube_index) {
  SampledGop out;
  out.geometry = make_geometry(gop, cfg.block_size, opts.pad);
  out.first_cube_index = first_cube_index;
  std::vector<Cube> cubes = partition_gop(gop, cfg.block_size, opts.pad);

  std::shared_ptr<const SensingOperators> shared;
  if (opts.shared_phi) {
    shared = std::make_shared<const SensingOperators>(build_operators(config_for(
        cfg, out.geometry.frames, operator_seed(cfg.seed, cfg.variant, -1))));
  }
  out.measurements.resize(cubes.size());
  parallel_for(opts.workers, cubes.size(), [&](std::size_t j) {
    Cube& cube = cubes[j];
    cube.data.array() -= kPixelOffset;
    if (shared) {
      out.measurements[j] = sample_cube(cube, *shared->phi);
    } else {
      const Index global = first_cube_index + static_cast<Index>(j);
      const SensingOperators ops = build_operators(config_for(
          cfg, out.geometry.frames, operator_seed(cfg.seed, cfg.variant, seed_index(opts, global))));
      out.measurements[j] = sample_cube(cube, *ops.phi);
    }
  });
  return out;
}

Reconstruction reconstruct_gop(const SampledGop& sampled, const SensingConfig& cfg,
                               const PipelineOptions& opts) {
  const GopGeometry& g = sampled.geometry;
  if (static_cast<Index>(sampled.measurements.size()) != g.cube_count()) {
    throw DataError("reconstruct_gop: expected " + std::to_string(g.cube_count()) +
                    " measurement vectors, got " + std::to_string(sampled.measurements.size()));
  }

  struct Prepared {
    SensingOperators ops;
    ConstraintSystem system;
  };
  auto prepare = [&](Index seed_idx) {
    SensingOperators ops = build_operators(
        config_for(cfg, g.frames, operator_seed(cfg.seed, cfg.variant, seed_idx)));
    ConstraintSystem system(ops.theta);
    return std::make_shared<const Prepared>(Prepared{std::move(ops), std::move(system)});
  };
  std::shared_ptr<const Prepared> shared;
  if (opts.shared_phi) shared = prepare(-1);

  Vector weights;
  if (cfg.weighting == Weighting::Perceptual) {
    const Matrix q = opts.quant_table ? *opts.quant_table : jpeg_luminance_q();
    weights = normalize_max(extend_temporal(perceptual_weights(q, g.block), g.frames));
  }

  Reconstruction out;
  out.cubes.resize(static_cast<std::size_t>(g.cube_count()));
  parallel_for(opts.workers, out.cubes.size(), [&](std::size_t j) {
    const auto start = std::chrono::steady_clock::now();
    const Index global = sampled.first_cube_index + static_cast<Index>(j);
    const std::shared_ptr<const Prepared> prep = shared ? shared : prepare(global);
    const Vector& y = sampled.measurements[j];
    if (y.size() != prep->system.rows()) {
      throw DataError("cube " + std::to_string(j) + ": measurement length " +
                      std::to_string(y.size()) + " != " + std::to_string(prep->system.rows()));
    }
    SolveReport report;
    switch (cfg.weighting) {
      case Weighting::None:
        report = basis_pursuit(prep->system, y, opts.solve);
        break;
      case Weighting::Perceptual:
        report = weighted_bp(prep->system, y, weights, opts.solve);
        break;
      case Weighting::Rwl1:
        report = rwl1(prep->system, y, opts.solve);
        break;
      case Weighting::Irls:
        report = irls(prep->system, y, opts.solve);
        break;
    }
    CubeResult& result = out.cubes[j];
    result.index = static_cast<Index>(j);
    result.reconstructed =
        (prep->ops.psi->apply(report.coefficients).array() + kPixelOffset).cwiseMax(0.0).cwiseMin(255.0);
    result.report = std::move(report);
    result.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });

  std::vector<Vector> data;
  data.reserve(out.cubes.size());
  for (const auto& c : out.cubes) data.push_back(c.reconstructed);
  out.gop = assemble_gop(data, g);
  return out;
}

}  // namespace kubecs
