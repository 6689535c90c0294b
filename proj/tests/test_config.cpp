#include <doctest.h>

#include <filesystem>
#include <random>

#include "slicesim/config.hpp"

using namespace slicesim;
namespace fs = std::filesystem;

namespace {

std::size_t error_line(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  FAIL("no ConfigError for: " << text);
  return 0;
}

}  // namespace

TEST_CASE("defaults render and parse back") {
  const ExperimentConfig d;
  CHECK(parse_config(render_config(d)) == d);
  CHECK(parse_config("") == d);
  CHECK(parse_config("# only a comment\n\n   \t\n") == d);
}

TEST_CASE("shipped configs are canonical") {
  const fs::path dir = fs::path(SLICESIM_SOURCE_DIR) / "config";
  const auto c = load_config(dir / "reproduce.conf");
  CHECK(c.m2.has_value());
  CHECK(c.architectures.size() == 2);
  CHECK(render_config(c) == render_config(parse_config(render_config(c))));
  const auto r = load_config(dir / "rates.conf");
  CHECK(r.rates == default_rates());
  CHECK_THROWS_AS(load_config(dir / "missing.conf"), std::runtime_error);
}

TEST_CASE("keys apply on top of a base") {
  const auto c = parse_config(
      "experiment.architectures = baseline\n"
      "scale.m2 = 3,3,3,3,3,3,3,3,3\n"
      "sweep.start = 0\n"
      "sweep.stop = 10\n"
      "sweep.step = 4\n"
      "engine.kind = ssa\n"
      "rates.r_v = 250\n"
      "rates.r_extra = 0.5\n"
      "audit.enabled = true\n");
  CHECK(c.architectures == std::vector<Architecture>{Architecture::Baseline});
  CHECK(c.m2 == ScaleTuple{3, 3, 3, 3, 3, 3, 3, 3, 3});
  CHECK(c.sweep_points() == std::vector<std::int64_t>{0, 4, 8});
  CHECK(c.engine == EngineChoice::Ssa);
  CHECK(c.rates.at("r_v") == 250.0);
  CHECK(c.rates.at("r_p") == 1e5);
  CHECK(c.rates.at("r_extra") == 0.5);
  CHECK(c.audit);

  const auto layered = parse_config("rates.r_p = 7\n", c);
  CHECK(layered.rates.at("r_v") == 250.0);
  CHECK(layered.rates.at("r_p") == 7.0);
  CHECK(layered.engine == EngineChoice::Ssa);
}

TEST_CASE("errors name the offending line") {
  CHECK(error_line("engine.kind = auto\nengine.bogus = 1\n") == 2);
  CHECK(error_line("sweep.step = 5\nsweep.step = 6\n") == 2);
  CHECK(error_line("\n\nscale.m1 = 1,1,1\n") == 3);
  CHECK(error_line("scale.m1 = 1,1,1,1,0,1,1,1,1\n") == 1);
  CHECK(error_line("engine.kind = quantum\n") == 1);
  CHECK(error_line("rates.r_v = -3\n") == 1);
  CHECK(error_line("engine.seed = 12abc\n") == 1);
  CHECK(error_line("just text\n") == 1);
  CHECK(error_line("audit.enabled = yes\n") == 1);
  CHECK(error_line("metrics.target_art = 0\n") == 1);
  CHECK(error_line("sweep.step = 0\n") == 1);
  CHECK(error_line("engine.fluid_epsilon = 0\n") == 1);
  CHECK(error_line("scale.threads_per_processor = 0\n") == 1);

  // ranges spanning keys are checked once the layers are applied, without a line
  const auto c = parse_config("sweep.start = 10\nsweep.stop = 5\n");
  try {
    c.check();
    FAIL("empty sweep accepted");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 0);
  }
  CHECK_NOTHROW(parse_config("sweep.stop = 20\n", c).check());
}

// Random configs survive render then parse unchanged.
TEST_CASE("random configs round-trip") {
  std::mt19937_64 rng(17);
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int k = 0; k < 500; ++k) {
    ExperimentConfig c;
    c.architectures = pick(3) == 0   ? std::vector{Architecture::Baseline}
                      : pick(2) == 0 ? std::vector{Architecture::Proposed}
                                     : std::vector{Architecture::Baseline, Architecture::Proposed};
    for (auto& v : c.m1) v = 1 + pick(9);
    if (pick(2)) {
      ScaleTuple m2;
      for (auto& v : m2) v = 1 + pick(99);
      c.m2 = m2;
    }
    c.processors_per_nf = 1 + pick(1000);
    c.threads_per_processor = 1 + pick(1000);
    c.sweep_start = pick(1000);
    c.sweep_stop = c.sweep_start + pick(100000);
    c.sweep_step = 1 + pick(5000);
    c.engine = static_cast<EngineChoice>(pick(4));
    c.state_cap = static_cast<std::size_t>(rng() % 100000000);
    c.seed = rng();
    c.ssa_horizon = std::pow(10.0, u(rng)) * 3.7;
    c.fluid_epsilon = std::pow(10.0, u(rng));
    c.fluid_t_max = std::pow(10.0, u(rng) + 6.0);
    c.fluid_method = pick(2) ? FluidMethod::Explicit : FluidMethod::PseudoTransient;
    c.fluid_max_iterations = static_cast<std::size_t>(1 + pick(100000));
    c.service = pick(2) ? ProcessorService::Table : ProcessorService::PerRequest;
    c.coupling = pick(2) ? Coupling::PairwiseGet : Coupling::SingleNode;
    c.rates["r_v"] = std::pow(10.0, u(rng)) / 3.0;
    if (pick(2)) c.rates["r_k" + std::to_string(pick(50))] = std::pow(10.0, u(rng));
    c.target_art = std::pow(10.0, u(rng));
    c.aggregation = pick(2) ? Aggregation::Max : Aggregation::Mean;
    c.output_dir = "out/run " + std::to_string(pick(1000));
    c.audit = pick(2);
    c.audit_tolerance = std::pow(10.0, u(rng) / 3.0) / 10.0;
    c.audit_ssa_horizon = std::pow(10.0, u(rng));

    const std::string text = render_config(c);
    CAPTURE(text);
    CHECK(parse_config(text) == c);
    CHECK(render_config(parse_config(text)) == text);
  }
}

TEST_CASE("derived settings") {
  ExperimentConfig c;
  c.processors_per_nf = 4;
  c.threads_per_processor = 6;
  const auto s = c.scale(ScaleTuple{2, 1, 1, 1, 1, 1, 1, 1, 5}, 123);
  CHECK(s.users == 123);
  CHECK(s.processors_per_nf == 4);
  CHECK(s.threads_per_processor == 6);
  CHECK(s.nf[0] == 2);
  CHECK(s.nf[8] == 5);

  c.fluid_method = FluidMethod::Explicit;
  c.fluid_epsilon = 1e-6;
  CHECK(c.fluid_options().method == FluidMethod::Explicit);
  CHECK(c.fluid_options().epsilon == 1e-6);

  c.aggregation = Aggregation::Max;
  c.target_art = 2.5;
  const auto m = c.metrics_options(Architecture::Baseline);
  CHECK(m.aggregation == Aggregation::Max);
  CHECK(m.target_art == 2.5);

  CHECK(engine_choice_from_string(to_string(EngineChoice::Fluid)) == EngineChoice::Fluid);
  CHECK_THROWS(engine_choice_from_string("exact"));
}
