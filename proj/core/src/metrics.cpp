#include "kubecs/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "kubecs/errors.hpp"
#include "kubecs/parallel.hpp"

namespace kubecs {

namespace {

struct SquaredError {
  double sum = 0.0;
  double count = 0.0;
};

void accumulate(const Gop& reference, const Gop& test, SquaredError& acc) {
  if (reference.frame_count() != test.frame_count()) {
    throw DimensionError("psnr: frame counts differ");
  }
  for (std::size_t t = 0; t < reference.frames.size(); ++t) {
    const Matrix& a = reference.frames[t];
    const Matrix& b = test.frames[t];
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("psnr: frame sizes differ");
    acc.sum += (a - b).squaredNorm();
    acc.count += static_cast<double>(a.size());
  }
}

double to_db(const SquaredError& acc, double peak) {
  if (acc.count == 0.0) throw DimensionError("psnr: empty input");
  const double mse = acc.sum / acc.count;
  if (mse == 0.0) return kExactPsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

double parse_real(const std::string& s) {
  if (s == "inf") return kExactPsnr;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw DataError("csv: not a number: '" + s + "'");
  return v;
}

template <typename Int>
Int parse_integer(const std::string& s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("csv: not an integer: '" + s + "'");
  }
  return v;
}

}  // namespace

double psnr(const Gop& reference, const Gop& test, double peak) {
  SquaredError acc;
  accumulate(reference, test, acc);
  return to_db(acc, peak);
}

double psnr(const std::vector<Gop>& reference, const std::vector<Gop>& test, double peak) {
  if (reference.size() != test.size()) throw DimensionError("psnr: GoP counts differ");
  SquaredError acc;
  for (std::size_t i = 0; i < reference.size(); ++i) accumulate(reference[i], test[i], acc);
  return to_db(acc, peak);
}

void validate_sweep(const SweepSpec& spec) {
  if (spec.rates.empty() || spec.variants.empty() || spec.weightings.empty() ||
      spec.seeds.empty()) {
    throw DataError("sweep: rates, variants, weightings and seeds must be non-empty");
  }
  for (std::size_t i = 0; i < spec.rates.size(); ++i) {
    const double r = spec.rates[i];
    if (!(r > 0.0 && r <= 1.0)) throw DataError("sweep: rate " + format_real(r) + " outside (0, 1]");
    if (i > 0 && !(r > spec.rates[i - 1])) throw DataError("sweep: rates must be strictly increasing");
  }
  if (spec.input.empty()) throw DataError("sweep: no input GoPs");
  for (const auto& g : spec.input) validate_gop(g);
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SweepOptions& opts) {
  validate_sweep(spec);
  std::vector<SweepRow> rows;
  for (auto v : spec.variants) {
    for (auto w : spec.weightings) {
      for (double r : spec.rates) {
        for (auto s : spec.seeds) {
          SweepRow row;
          row.variant = v;
          row.weighting = w;
          row.rate = r;
          row.seed = s;
          rows.push_back(row);
        }
      }
    }
  }

  PipelineOptions inner = spec.pipeline;
  inner.workers = 1;
  parallel_for(opts.workers, rows.size(), [&](std::size_t i) {
    SweepRow& row = rows[i];
    const auto start = std::chrono::steady_clock::now();
    SensingConfig cfg;
    cfg.variant = row.variant;
    cfg.weighting = row.weighting;
    cfg.rate = row.rate;
    cfg.seed = row.seed;
    cfg.block_size = spec.block_size;
    std::vector<Gop> recon;
    recon.reserve(spec.input.size());
    Index first_cube = 0;
    Index converged = 0;
    Index cubes = 0;
    for (const auto& gop : spec.input) {
      cfg.gop_len = gop.frame_count();
      const SampledGop sampled = sample_gop(gop, cfg, inner, first_cube);
      Reconstruction rec = reconstruct_gop(sampled, cfg, inner);
      first_cube += sampled.geometry.cube_count();
      for (const auto& c : rec.cubes) {
        row.iterations += c.report.iterations;
        converged += c.report.converged ? 1 : 0;
        ++cubes;
      }
      recon.push_back(std::move(rec.gop));
    }
    row.psnr_db = psnr(spec.input, recon);
    row.converged_fraction = static_cast<double>(converged) / static_cast<double>(cubes);
    if (opts.record_timing) {
      row.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  });
  return rows;
}

std::string format_real(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string emit_csv(const std::vector<SweepRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::string(to_string(r.variant)) + ',' + std::string(to_string(r.weighting)) + ',' +
           format_real(r.rate) + ',' + std::to_string(r.seed) + ',' + format_real(r.psnr_db) + ',' +
           std::to_string(r.iterations) + ',' + format_real(r.wall_ms) + ',' +
           format_real(r.converged_fraction) + '\n';
  }
  return out;
}

std::vector<SweepRow> parse_csv(std::string_view text) {
  std::vector<SweepRow> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kCsvHeader) throw DataError("csv: unexpected header '" + std::string(line) + "'");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw DataError("csv: expected 8 fields in '" + std::string(line) + "'");
    SweepRow r;
    r.variant = parse_variant(f[0]);
    r.weighting = parse_weighting(f[1]);
    r.rate = parse_real(f[2]);
    r.seed = parse_integer<std::uint64_t>(f[3]);
    r.psnr_db = parse_real(f[4]);
    r.iterations = parse_integer<long long>(f[5]);
    r.wall_ms = parse_real(f[6]);
    r.converged_fraction = parse_real(f[7]);
    rows.push_back(r);
  }
  if (header) throw DataError("csv: missing header");
  return rows;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string emit_gnuplot(const std::vector<SweepRow>& rows) {
  using SeriesKey = std::pair<Variant, Weighting>;
  std::vector<SeriesKey> order;
  std::map<SeriesKey, std::map<double, std::vector<double>>> series;
  for (const auto& r : rows) {
    const SeriesKey key{r.variant, r.weighting};
    if (!series.contains(key)) order.push_back(key);
    series[key][r.rate].push_back(r.psnr_db);
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) out << "\n\n";
    out << "# " << to_string(order[i].first) << ' ' << to_string(order[i].second) << '\n';
    for (const auto& [rate, values] : series[order[i]]) {
      out << format_real(rate) << ' ' << format_real(median(values)) << '\n';
    }
  }
  return out.str();
}

}  // namespace kubecs
