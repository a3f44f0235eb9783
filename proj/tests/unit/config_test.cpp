#include <doctest.h>

#include <fstream>

#include "kubecs/config.hpp"
#include "kubecs/errors.hpp"
#include "kubecs/io.hpp"
#include "oracles.hpp"

using namespace kubecs;

TEST_SUITE("config") {

TEST_CASE("minimal config takes defaults") {
  const RunConfig c = parse_config("input = synth:moving-square\n");
  CHECK(c.input.path == kSynthInput);
  CHECK(c.block_size == 8);
  CHECK(c.gop == 8);
  CHECK(c.variants == std::vector<Variant>{Variant::Kcs});
  CHECK(c.weightings == std::vector<Weighting>{Weighting::None});
  CHECK(c.rates == std::vector<double>{0.5});
  CHECK(c.seeds == std::vector<std::uint64_t>{1});
  CHECK(c.shared_phi);
  CHECK(c.pad == PadMode::Error);
  CHECK(c.solve.max_iterations == SolveOptions{}.max_iterations);
}

TEST_CASE("full config") {
  const std::string text = R"(
# sweep over the synthetic sequence
input = synth:moving-square
width = 48
height = 40
frames = 12
synth_noise = 2.5
synth_seed = 9
block_size = 8
gop = 4
variants = kcs, cube3d
weighting = none,perceptual , rwl1
rates = 0.2, 0.3
seeds = 1, 2, 3
workers = 3
pad_mode = edge
shared_phi = false
max_iterations = 500
feasibility_tol = 1e-7
objective_tol = 1e-3
admm_rho = 4
admm_relaxation = 1.5
check_interval = 5
rwl1_epsilon = 0.05
rwl1_rounds = 3
output = results/out.csv   # trailing comment
)";
  const RunConfig c = parse_config(text, "/base");
  CHECK(c.input.width == 48);
  CHECK(c.input.height == 40);
  CHECK(c.input.frames == 12);
  CHECK(c.input.synth_noise == 2.5);
  CHECK(c.input.synth_seed == 9);
  CHECK(c.gop == 4);
  CHECK(c.variants == std::vector<Variant>{Variant::Kcs, Variant::Cube3d});
  CHECK(c.weightings ==
        std::vector<Weighting>{Weighting::None, Weighting::Perceptual, Weighting::Rwl1});
  CHECK(c.rates == std::vector<double>{0.2, 0.3});
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(c.workers == 3);
  CHECK(c.pad == PadMode::EdgeReplicate);
  CHECK_FALSE(c.shared_phi);
  CHECK(c.solve.max_iterations == 500);
  CHECK(c.solve.feasibility_tol == 1e-7);
  CHECK(c.solve.objective_tol == 1e-3);
  CHECK(c.solve.admm_rho == 4);
  CHECK(c.solve.admm_relaxation == 1.5);
  CHECK(c.solve.check_interval == 5);
  CHECK(c.solve.rwl1_epsilon == 0.05);
  CHECK(c.solve.rwl1_rounds == 3);
  REQUIRE(c.output.has_value());
  CHECK(fs::path(*c.output) == fs::path("/base/results/out.csv"));
}

TEST_CASE("invalid configs are rejected") {
  const std::string in = "input = synth:moving-square\n";
  CHECK_THROWS_AS(parse_config(""), DataError);
  CHECK_THROWS_AS(parse_config(in + "colour = red\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "rate = 0.2\nrates = 0.3\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "rate 0.2\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "rate = 0\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "rate = 1.5\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "rate = abc\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "block_size = 1\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "variant = kcs,\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "variant = dct\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "shared_phi = maybe\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "admm_relaxation = 2\n"), DataError);
  CHECK_THROWS_AS(parse_config(in + "seed = -1\n"), DataError);
}

TEST_CASE("single sensing configuration") {
  RunConfig c = parse_config("input = synth:moving-square\nvariant = cube3d\nrate = 0.4\nseed = 7\n");
  const SensingConfig s = single_sensing_config(c);
  CHECK(s.variant == Variant::Cube3d);
  CHECK(s.rate == 0.4);
  CHECK(s.seed == 7);
  c.rates = {0.2, 0.4};
  CHECK_THROWS_AS(single_sensing_config(c), DataError);
}

TEST_CASE("loading configs and inputs from disk") {
  oracle::TempDir dir("config");
  fs::create_directories(dir / "frames");
  write_pgm(dir / "frames" / "a.pgm", Matrix::Constant(8, 16, 5.0));
  write_pgm(dir / "frames" / "b.pgm", Matrix::Constant(8, 16, 6.0));
  {
    std::ofstream f(dir / "run.cfg");
    f << "input = frames\ngop = 1\n";
  }
  const RunConfig c = load_config(dir / "run.cfg");
  CHECK(fs::path(c.input.path) == dir / "frames");
  const auto gops = load_input(c);
  REQUIRE(gops.size() == 2);
  CHECK(gops[1].frames[0](0, 0) == 6.0);

  {
    std::ofstream f(dir / "bad.cfg");
    f << "input = frames\nbogus = 1\n";
  }
  try {
    load_config(dir / "bad.cfg");
    FAIL("unknown key accepted");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config(dir / "missing.cfg"), DataError);
}

TEST_CASE("synthetic input honours its dimensions") {
  const RunConfig c =
      parse_config("input = synth:moving-square\nwidth = 24\nheight = 16\nframes = 10\ngop = 4\n");
  const auto gops = load_input(c);
  REQUIRE(gops.size() == 3);
  CHECK(gops[0].width() == 24);
  CHECK(gops[0].height() == 16);
  CHECK(gops[2].frame_count() == 2);
}

TEST_CASE("sweep spec carries solver and pipeline settings") {
  const RunConfig c = parse_config(
      "input = synth:moving-square\nrates = 0.2,0.4\nmax_iterations = 77\nshared_phi = false\n");
  const SweepSpec s = sweep_spec(c, load_input(c));
  CHECK(s.rates == c.rates);
  CHECK(s.pipeline.solve.max_iterations == 77);
  CHECK_FALSE(s.pipeline.shared_phi);
  CHECK(s.input.size() == 1);
}

}  // TEST_SUITE
