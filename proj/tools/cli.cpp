#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kubecs/config.hpp"
#include "kubecs/errors.hpp"
#include "kubecs/io.hpp"
#include "kubecs/metrics.hpp"
#include "kubecs/parallel.hpp"
#include "kubecs/pipeline.hpp"
#include "kubecs/synth.hpp"

namespace kubecs::cli {

namespace {

// Bad argument values found after CLI11 accepted the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  int workers = 0;
  bool strict = false;
};

int resolve_workers(const Common& common, const RunConfig& cfg) {
  if (common.workers > 0) return common.workers;
  if (cfg.workers > 0) return cfg.workers;
  return default_workers();
}

fs::path output_path(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (cfg.output) return *cfg.output;
  throw UsageError("no output given: pass --out or set `output` in the config");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw DataError("write failed for '" + path.string() + "'");
}

// --- sample ---------------------------------------------------------------

struct SampleArgs {
  std::string config;
  std::string out;
};

int cmd_sample(const SampleArgs& a, const Common& common, std::ostream& err) {
  const RunConfig cfg = load_config(a.config);
  const SensingConfig sensing = single_sensing_config(cfg);
  const PipelineOptions popts = pipeline_options(cfg, resolve_workers(common, cfg));
  const fs::path out = output_path(a.out, cfg);
  const std::vector<Gop> gops = load_input(cfg);

  MeasurementBundle bundle;
  bundle.variant = sensing.variant;
  bundle.rate = sensing.rate;
  bundle.block_size = sensing.block_size;
  bundle.gop_len = sensing.gop_len;
  bundle.seed = sensing.seed;
  bundle.shared_phi = cfg.shared_phi;
  bundle.pad = cfg.pad;
  bundle.fingerprint = sensing_fingerprint(sensing, cfg.shared_phi, cfg.pad);
  Index first = 0;
  for (const Gop& g : gops) {
    SampledGop s = sample_gop(g, sensing, popts, first);
    bundle.width = s.geometry.width;
    bundle.height = s.geometry.height;
    bundle.frames += s.geometry.frames;
    const Index length = s.measurements.empty() ? 0 : s.measurements.front().size();
    bundle.gops.push_back({s.geometry.frames, s.geometry.cube_count(), length});
    first += s.geometry.cube_count();
    for (auto& y : s.measurements) bundle.measurements.push_back(std::move(y));
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_bundle(out, bundle);
  err << "sampled " << bundle.measurements.size() << " cubes from " << bundle.frames
      << " frames into " << out.string() << "\n";
  return kOk;
}

// --- reconstruct ------------------------------------------------------------

struct ReconstructArgs {
  std::string config;
  std::string measurements;
  std::string out;
};

GopGeometry bundle_geometry(const MeasurementBundle& b, Index frames) {
  GopGeometry g;
  g.width = b.width;
  g.height = b.height;
  g.frames = frames;
  g.block = b.block_size;
  g.padded_width = (b.width + b.block_size - 1) / b.block_size * b.block_size;
  g.padded_height = (b.height + b.block_size - 1) / b.block_size * b.block_size;
  return g;
}

int cmd_reconstruct(const ReconstructArgs& a, const Common& common, std::ostream& err) {
  const RunConfig cfg = load_config(a.config);
  const SensingConfig sensing = single_sensing_config(cfg);
  const PipelineOptions popts = pipeline_options(cfg, resolve_workers(common, cfg));
  const fs::path out = output_path(a.out, cfg);
  const MeasurementBundle bundle = read_bundle(fs::path(a.measurements));

  const std::uint64_t expected = sensing_fingerprint(sensing, cfg.shared_phi, cfg.pad);
  if (bundle.fingerprint != expected) {
    std::ostringstream msg;
    msg << a.measurements << ": sensed with variant " << to_string(bundle.variant) << ", rate "
        << format_real(bundle.rate) << ", seed " << bundle.seed
        << "; the config does not match (fingerprint " << std::hex << bundle.fingerprint
        << " != " << expected << ")";
    throw DataError(msg.str());
  }

  std::vector<Gop> frames;
  std::ostringstream report;
  report << "gop,cube,iterations,converged,residual_norm,objective\n";
  std::size_t failed = 0;
  std::size_t total = 0;
  Index first = 0;
  for (std::size_t gi = 0; gi < bundle.gops.size(); ++gi) {
    const auto& entry = bundle.gops[gi];
    SampledGop s;
    s.geometry = bundle_geometry(bundle, entry.frames);
    if (s.geometry.cube_count() != entry.cubes) {
      throw DataError(a.measurements + ": GoP " + std::to_string(gi) + " lists " +
                      std::to_string(entry.cubes) + " cubes, geometry implies " +
                      std::to_string(s.geometry.cube_count()));
    }
    s.first_cube_index = first;
    s.measurements.assign(bundle.measurements.begin() + first,
                          bundle.measurements.begin() + first + entry.cubes);
    first += entry.cubes;

    Reconstruction r = reconstruct_gop(s, sensing, popts);
    for (const CubeResult& c : r.cubes) {
      report << gi << ',' << c.index << ',' << c.report.iterations << ','
             << (c.report.converged ? 1 : 0) << ',' << format_real(c.report.residual_norm) << ','
             << format_real(c.report.objective) << '\n';
      failed += c.report.converged ? 0 : 1;
      ++total;
    }
    frames.push_back(std::move(r.gop));
  }

  fs::create_directories(out);
  save_video(frames, out);
  write_text(out / "cube_report.csv", report.str());
  err << "reconstructed " << total << " cubes into " << out.string() << "; " << failed
      << " did not converge\n";
  if (common.strict && failed > 0) {
    err << "strict: " << failed << " of " << total << " cubes did not converge\n";
    return kNotConverged;
  }
  return kOk;
}

// --- sweep ------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::string out;
  std::string gnuplot;
  bool timing = false;
};

int cmd_sweep(const SweepArgs& a, const Common& common, std::ostream& err) {
  const RunConfig cfg = load_config(a.config);
  const fs::path out = output_path(a.out, cfg);
  SweepSpec spec = sweep_spec(cfg, load_input(cfg));
  SweepOptions sopts;
  sopts.workers = resolve_workers(common, cfg);
  sopts.record_timing = a.timing;
  const std::vector<SweepRow> rows = run_sweep(spec, sopts);

  write_text(out, emit_csv(rows));
  if (!a.gnuplot.empty()) write_text(a.gnuplot, emit_gnuplot(rows));

  std::size_t partial = 0;
  for (const auto& r : rows) partial += r.converged_fraction < 1.0 ? 1 : 0;
  err << "wrote " << rows.size() << " rows to " << out.string() << "\n";
  if (common.strict && partial > 0) {
    err << "strict: " << partial << " of " << rows.size()
        << " cells had cubes that did not converge\n";
    return kNotConverged;
  }
  return kOk;
}

// --- psnr -------------------------------------------------------------------

struct PsnrArgs {
  std::string ref;
  std::string test;
  Index width = 0;
  Index height = 0;
  Index frames = 0;
};

int cmd_psnr(const PsnrArgs& a, std::ostream& out) {
  auto load = [&](const std::string& path) {
    Gop g;
    g.frames = load_frames(detect_source(path, a.width, a.height, a.frames));
    return g;
  };
  out << format_real(psnr(load(a.ref), load(a.test))) << "\n";
  return kOk;
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string kind = "moving-square";
  Index frames = 8;
  std::string size = "32x32";
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

std::pair<Index, Index> parse_size(const std::string& s) {
  const auto x = s.find_first_of("xX");
  auto number = [&](const std::string& part) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size() || v < 1) {
      throw UsageError("--size: expected WxH with positive integers, got '" + s + "'");
    }
    return static_cast<Index>(v);
  };
  if (x == std::string::npos) number("");
  return {number(s.substr(0, x)), number(s.substr(x + 1))};
}

int cmd_synth(const SynthArgs& a, std::ostream& err) {
  const auto [w, h] = parse_size(a.size);
  SynthOptions o;
  o.width = w;
  o.height = h;
  o.frames = a.frames;
  o.noise_sigma = a.noise;
  o.seed = a.seed;
  save_video({synth_moving_square(o)}, a.out);
  err << "wrote " << a.frames << " frames of " << w << "x" << h << " to " << a.out << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cube-based weighted Kronecker compressive sensing for video", "kubecs"};
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);

  Common common;
  app.add_option("--workers", common.workers,
                 "Worker threads (default: config `workers`, then KUBECS_WORKERS, then all cores)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--strict", common.strict, "Exit with code 3 if any cube fails to converge");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Partition and sense a video into a measurements file");
  sample_cmd->add_option("--config", sample.config, "Run configuration")->required();
  sample_cmd->add_option("--out", sample.out, "Measurements file");

  ReconstructArgs recon;
  auto* recon_cmd = app.add_subcommand("reconstruct", "Solve every cube of a measurements file");
  recon_cmd->add_option("--config", recon.config, "Run configuration")->required();
  recon_cmd->add_option("--measurements", recon.measurements, "Measurements file")->required();
  recon_cmd->add_option("--out", recon.out, "Output directory for frames and cube_report.csv");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "PSNR over variants, weightings, rates and seeds");
  sweep_cmd->add_option("--config", sweep.config, "Run configuration")->required();
  sweep_cmd->add_option("--out", sweep.out, "CSV output");
  sweep_cmd->add_option("--gnuplot", sweep.gnuplot, "Also write median-PSNR series for gnuplot");
  sweep_cmd->add_flag("--timing", sweep.timing, "Record wall_ms (output then varies per run)");

  PsnrArgs ps;
  auto* psnr_cmd = app.add_subcommand("psnr", "PSNR in dB between two videos or images");
  psnr_cmd->add_option("--ref", ps.ref, "Reference: PGM file, PGM directory or raw file")->required();
  psnr_cmd->add_option("--test", ps.test, "Test input, same kinds as --ref")->required();
  psnr_cmd->add_option("--width", ps.width, "Raw inputs: frame width");
  psnr_cmd->add_option("--height", ps.height, "Raw inputs: frame height");
  psnr_cmd->add_option("--frames", ps.frames, "Raw inputs: frame count");

  SynthArgs syn;
  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic test sequence as PGM frames");
  synth_cmd->add_option("--kind", syn.kind, "Sequence kind")
      ->check(CLI::IsMember({std::string("moving-square")}))
      ->capture_default_str();
  synth_cmd->add_option("--frames", syn.frames, "Frame count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth_cmd->add_option("--size", syn.size, "Frame size WxH")->capture_default_str();
  synth_cmd->add_option("--noise", syn.noise, "Gaussian noise sigma")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth_cmd->add_option("--seed", syn.seed, "Noise seed")->capture_default_str();
  synth_cmd->add_option("--out", syn.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sample_cmd) return cmd_sample(sample, common, err);
    if (*recon_cmd) return cmd_reconstruct(recon, common, err);
    if (*sweep_cmd) return cmd_sweep(sweep, common, err);
    if (*psnr_cmd) return cmd_psnr(ps, out);
    if (*synth_cmd) return cmd_synth(syn, err);
  } catch (const UsageError& e) {
    err << "kubecs: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const std::exception& e) {
    err << "kubecs: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace kubecs::cli
