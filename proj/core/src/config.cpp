#include "kubecs/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "kubecs/errors.hpp"
#include "kubecs/io.hpp"
#include "kubecs/synth.hpp"
#include "kubecs/weighting.hpp"

namespace kubecs {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value, const std::string& key) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw DataError("config: empty list item in '" + key + "'");
    out.push_back(item);
  }
  if (out.empty()) throw DataError("config: '" + key + "' needs a value");
  if (trim(value).back() == ',') throw DataError("config: empty list item in '" + key + "'");
  return out;
}

double to_real(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw DataError("config: '" + key + "' expects a number, got '" + s + "'");
  }
  return v;
}

long long to_integer(const std::string& s, const std::string& key, long long min) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw DataError("config: '" + key + "' expects an integer, got '" + s + "'");
  }
  if (v < min) throw DataError("config: '" + key + "' must be >= " + std::to_string(min));
  return v;
}

std::uint64_t to_seed(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  unsigned long long v = 0;
  if (!s.empty() && s.front() == '-') used = 0;
  else {
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
  }
  if (used == 0 || used != s.size()) {
    throw DataError("config: '" + key + "' expects a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool to_bool(const std::string& s, const std::string& key) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "1" || l == "true" || l == "yes" || l == "on") return true;
  if (l == "0" || l == "false" || l == "no" || l == "off") return false;
  throw DataError("config: '" + key + "' expects a boolean, got '" + s + "'");
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"input", [&](const std::string& k, const std::string& v) {
         if (v.empty()) throw DataError("config: '" + k + "' needs a value");
         cfg.input.path = v == kSynthInput ? v : resolve(v, base_dir);
       }},
      {"width", [&](const std::string& k, const std::string& v) { cfg.input.width = to_integer(v, k, 1); }},
      {"height", [&](const std::string& k, const std::string& v) { cfg.input.height = to_integer(v, k, 1); }},
      {"frames", [&](const std::string& k, const std::string& v) { cfg.input.frames = to_integer(v, k, 1); }},
      {"synth_noise", [&](const std::string& k, const std::string& v) {
         cfg.input.synth_noise = to_real(v, k);
         if (cfg.input.synth_noise < 0) throw DataError("config: 'synth_noise' must be >= 0");
       }},
      {"synth_seed", [&](const std::string& k, const std::string& v) { cfg.input.synth_seed = to_seed(v, k); }},
      {"block_size", [&](const std::string& k, const std::string& v) { cfg.block_size = to_integer(v, k, 2); }},
      {"gop", [&](const std::string& k, const std::string& v) { cfg.gop = to_integer(v, k, 1); }},
      {"variant", [&](const std::string& k, const std::string& v) {
         cfg.variants.clear();
         for (const auto& s : split_list(v, k)) cfg.variants.push_back(parse_variant(s));
       }},
      {"weighting", [&](const std::string& k, const std::string& v) {
         cfg.weightings.clear();
         for (const auto& s : split_list(v, k)) cfg.weightings.push_back(parse_weighting(s));
       }},
      {"rate", [&](const std::string& k, const std::string& v) {
         cfg.rates.clear();
         for (const auto& s : split_list(v, k)) {
           const double r = to_real(s, k);
           if (!(r > 0.0 && r <= 1.0)) throw DataError("config: rate " + s + " outside (0, 1]");
           cfg.rates.push_back(r);
         }
       }},
      {"seed", [&](const std::string& k, const std::string& v) {
         cfg.seeds.clear();
         for (const auto& s : split_list(v, k)) cfg.seeds.push_back(to_seed(s, k));
       }},
      {"workers", [&](const std::string& k, const std::string& v) {
         cfg.workers = static_cast<int>(to_integer(v, k, 1));
       }},
      {"pad_mode", [&](const std::string&, const std::string& v) { cfg.pad = parse_pad_mode(v); }},
      {"shared_phi", [&](const std::string& k, const std::string& v) { cfg.shared_phi = to_bool(v, k); }},
      {"quant_table", [&](const std::string&, const std::string& v) { cfg.quant_table = resolve(v, base_dir); }},
      {"max_iterations", [&](const std::string& k, const std::string& v) {
         cfg.solve.max_iterations = static_cast<int>(to_integer(v, k, 1));
       }},
      {"feasibility_tol", [&](const std::string& k, const std::string& v) {
         cfg.solve.feasibility_tol = to_real(v, k);
         if (!(cfg.solve.feasibility_tol > 0)) throw DataError("config: 'feasibility_tol' must be > 0");
       }},
      {"objective_tol", [&](const std::string& k, const std::string& v) {
         cfg.solve.objective_tol = to_real(v, k);
         if (!(cfg.solve.objective_tol > 0)) throw DataError("config: 'objective_tol' must be > 0");
       }},
      {"admm_rho", [&](const std::string& k, const std::string& v) {
         cfg.solve.admm_rho = to_real(v, k);
         if (!(cfg.solve.admm_rho > 0)) throw DataError("config: 'admm_rho' must be > 0");
       }},
      {"admm_relaxation", [&](const std::string& k, const std::string& v) {
         cfg.solve.admm_relaxation = to_real(v, k);
         if (!(cfg.solve.admm_relaxation > 0 && cfg.solve.admm_relaxation < 2)) {
           throw DataError("config: 'admm_relaxation' must lie in (0, 2)");
         }
       }},
      {"check_interval", [&](const std::string& k, const std::string& v) {
         cfg.solve.check_interval = static_cast<int>(to_integer(v, k, 1));
       }},
      {"rwl1_epsilon", [&](const std::string& k, const std::string& v) {
         cfg.solve.rwl1_epsilon = to_real(v, k);
         if (!(cfg.solve.rwl1_epsilon > 0)) throw DataError("config: 'rwl1_epsilon' must be > 0");
       }},
      {"rwl1_rounds", [&](const std::string& k, const std::string& v) {
         cfg.solve.rwl1_rounds = static_cast<int>(to_integer(v, k, 1));
       }},
      {"output", [&](const std::string&, const std::string& v) { cfg.output = resolve(v, base_dir); }},
  };
  const std::map<std::string, std::string> aliases = {
      {"variants", "variant"}, {"weightings", "weighting"}, {"rates", "rate"}, {"seeds", "seed"}};

  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (const auto a = aliases.find(key); a != aliases.end()) key = a->second;
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw DataError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw DataError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    it->second(key, value);
  }
  if (cfg.input.path.empty()) throw DataError("config: 'input' is required");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), path.parent_path());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<Gop> load_input(const RunConfig& cfg) {
  if (cfg.input.path == kSynthInput) {
    SynthOptions s;
    if (cfg.input.width > 0) s.width = cfg.input.width;
    if (cfg.input.height > 0) s.height = cfg.input.height;
    if (cfg.input.frames > 0) s.frames = cfg.input.frames;
    s.noise_sigma = cfg.input.synth_noise;
    s.seed = cfg.input.synth_seed;
    Gop g = synth_moving_square(s);
    return split_gops(std::move(g.frames), cfg.gop);
  }
  const VideoSource src =
      detect_source(cfg.input.path, cfg.input.width, cfg.input.height, cfg.input.frames);
  return load_video(src, cfg.gop);
}

SensingConfig single_sensing_config(const RunConfig& cfg) {
  if (cfg.variants.size() != 1 || cfg.weightings.size() != 1 || cfg.rates.size() != 1 ||
      cfg.seeds.size() != 1) {
    throw DataError("config: variant, weighting, rate and seed must each hold one value here");
  }
  SensingConfig s;
  s.variant = cfg.variants.front();
  s.weighting = cfg.weightings.front();
  s.rate = cfg.rates.front();
  s.seed = cfg.seeds.front();
  s.block_size = cfg.block_size;
  s.gop_len = cfg.gop;
  return s;
}

PipelineOptions pipeline_options(const RunConfig& cfg, int workers) {
  PipelineOptions p;
  p.solve = cfg.solve;
  p.shared_phi = cfg.shared_phi;
  p.pad = cfg.pad;
  p.workers = workers;
  if (cfg.quant_table) p.quant_table = load_quant_table(*cfg.quant_table);
  return p;
}

SweepSpec sweep_spec(const RunConfig& cfg, std::vector<Gop> input) {
  SweepSpec spec;
  spec.rates = cfg.rates;
  spec.variants = cfg.variants;
  spec.weightings = cfg.weightings;
  spec.seeds = cfg.seeds;
  spec.input = std::move(input);
  spec.block_size = cfg.block_size;
  spec.pipeline = pipeline_options(cfg, 1);
  return spec;
}

}  // namespace kubecs
