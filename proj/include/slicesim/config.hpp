// Experiment configuration and its flat text format.
//
//   # comment
//   section.key = value
//
// One key per line, lists comma separated. See docs/config-format.md.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "slicesim/fluid.hpp"
#include "slicesim/metrics.hpp"
#include "slicesim/slicing.hpp"

namespace slicesim {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& message)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class EngineChoice { Auto, Ctmc, Ssa, Fluid };
std::string_view to_string(EngineChoice e);
EngineChoice engine_choice_from_string(std::string_view s);

using ScaleTuple = std::array<std::int64_t, 9>;

struct ExperimentConfig {
  std::vector<Architecture> architectures{Architecture::Proposed, Architecture::Baseline};
  ScaleTuple m1{1, 1, 1, 1, 1, 1, 1, 1, 1};
  std::optional<ScaleTuple> m2;
  std::int64_t processors_per_nf = 300;
  std::int64_t threads_per_processor = 200;

  std::int64_t sweep_start = 1000;
  std::int64_t sweep_stop = 50000;
  std::int64_t sweep_step = 1000;

  EngineChoice engine = EngineChoice::Auto;
  std::size_t state_cap = 2'000'000;
  std::uint64_t seed = 42;
  double ssa_horizon = 1e5;
  double fluid_epsilon = 1e-8;
  double fluid_t_max = 1e6;
  FluidMethod fluid_method = FluidMethod::PseudoTransient;
  std::size_t fluid_max_iterations = 20'000;

  ProcessorService service = ProcessorService::PerRequest;
  Coupling coupling = Coupling::SingleNode;
  RateTable rates = default_rates();

  double target_art = 1.0;
  Aggregation aggregation = Aggregation::Mean;

  std::string output_dir = "results";

  bool audit = false;
  double audit_tolerance = 0.05;
  double audit_ssa_horizon = 20.0;

  bool operator==(const ExperimentConfig&) const = default;

  /// Throws ConfigError (line 0) on an empty sweep, non-positive step or scale.
  void check() const;
  std::vector<std::int64_t> sweep_points() const;
  SliceScale scale(const ScaleTuple& nf, std::int64_t users) const;
  BuildOptions build_options() const;
  FluidOptions fluid_options() const;
  MetricsOptions metrics_options(Architecture arch) const;
};

/// Applies the keys in `text` on top of `base`. Unknown or repeated keys and
/// malformed values throw ConfigError with the line number.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
/// Every key, one per line, in documentation order; parse_config of the
/// result gives back an equal config.
std::string render_config(const ExperimentConfig& config);

/// Reads a file; std::runtime_error if it cannot be opened.
std::string read_file(const std::filesystem::path& path);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

}  // namespace slicesim
