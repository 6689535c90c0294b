// slicesim: validate models, run sweeps, compare scales, export built-ins.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "slicesim/compiled.hpp"
#include "slicesim/config.hpp"
#include "slicesim/ctmc.hpp"
#include "slicesim/experiment.hpp"
#include "slicesim/parser.hpp"

namespace fs = std::filesystem;
using namespace slicesim;

namespace {

enum Exit { kOk = 0, kIo = 1, kInvalid = 2, kConvergence = 3 };

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const fs::path& path) {
  try {
    return read_file(path);
  } catch (const std::runtime_error& e) {
    throw IoFailure(e.what());
  }
}

Model load_model(const fs::path& path) {
  const std::string text = slurp(path);
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw std::invalid_argument(path.string() + ":" + e.what());
  }
}

int cmd_validate(const fs::path& path) {
  const Model model = load_model(path);
  const auto report = validate_model(model);
  for (const auto& issue : report.issues)
    std::cerr << path.string() << ": " << to_string(issue.kind) << ": " << issue.detail << '\n';
  if (!report.ok()) return kInvalid;
  std::cerr << path.string() << ": ok (" << model.components.size() << " components)\n";
  return kOk;
}

struct RunFlags {
  fs::path config, model, rates, out;
  std::string engine, architectures;
  std::optional<std::uint64_t> seed;
  std::optional<double> target_art;
  bool strict = false, audit = false;
};

ExperimentConfig assemble(const RunFlags& f) {
  ExperimentConfig c;
  if (!f.config.empty()) c = parse_config(slurp(f.config));
  if (!f.rates.empty()) c = parse_config(slurp(f.rates), c);
  if (!f.engine.empty()) c.engine = engine_choice_from_string(f.engine);
  if (f.seed) c.seed = *f.seed;
  if (f.target_art) c.target_art = *f.target_art;
  if (!f.out.empty()) c.output_dir = f.out.string();
  if (f.audit) c.audit = true;
  if (!f.architectures.empty()) c = parse_config("experiment.architectures = " + f.architectures, c);
  c.check();
  return c;
}

// A single user-supplied model: per-action throughput and occupancy on stdout.
int run_single_model(const RunFlags& f, const ExperimentConfig& c) {
  Model model = load_model(f.model);
  if (!f.rates.empty()) {
    ExperimentConfig overrides;
    overrides.rates.clear();
    for (const auto& [name, value] : parse_config(slurp(f.rates), overrides).rates) model.rates[name] = value;
  }
  const auto report = validate_model(model);
  if (!report.ok()) {
    for (const auto& issue : report.issues) std::cerr << to_string(issue.kind) << ": " << issue.detail << '\n';
    return kInvalid;
  }
  auto compiled = std::make_shared<const CompiledModel>(model);
  const EngineKind engine = choose_engine(*compiled, c);
  const SteadyState s = solve(compiled, engine, c);
  std::ostringstream out;
  out << "kind,name,value\n";
  out << "engine," << to_string(engine) << ",\n";
  out << "converged,," << (s.converged ? "true" : "false") << '\n';
  for (int a = 0; a < compiled->action_count(); ++a)
    out << "throughput," << compiled->actions()[a] << ',' << format_number(s.action_rate[a]) << '\n';
  for (int i = 0; i < compiled->slot_count(); ++i)
    out << "occupancy," << compiled->slot_name(i) << ',' << format_number(s.occupancy[i]) << '\n';
  if (f.out.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream file(f.out, std::ios::binary);
    if (!(file << out.str())) throw IoFailure("cannot write " + f.out.string());
  }
  if (!s.converged) {
    std::cerr << "warning: no convergence (residual " << format_number(s.residual) << ")\n";
    if (f.strict) return kConvergence;
  }
  return kOk;
}

int cmd_run(const RunFlags& f, bool compare) {
  const ExperimentConfig c = assemble(f);
  if (!f.model.empty()) return run_single_model(f, c);
  if (compare && !c.m2) {
    std::cerr << "compare needs scale.m2 in the config\n";
    return kInvalid;
  }
  const ExperimentResult result = run_experiment(c);
  try {
    write_outputs(result, c.output_dir, compare);
  } catch (const std::exception& e) {
    throw IoFailure(e.what());
  }

  int failed = 0;
  for (const auto& p : result.points)
    if (p.status == PointStatus::NoConvergence || p.status == PointStatus::Error) {
      ++failed;
      std::cerr << to_string(p.spec.architecture) << ' ' << p.spec.scale_name << " n=" << p.spec.users << ": "
                << to_string(p.status) << ": " << p.message << '\n';
    }
  for (auto arch : c.architectures)
    for (std::string scale : {"m1", "m2"}) {
      if (scale == "m2" && !c.m2) continue;
      const auto k = knee(result.points, arch, scale);
      std::cout << to_string(arch) << ' ' << scale << " knee: " << (k ? std::to_string(*k) : "none") << '\n';
    }
  std::cout << result.points.size() << " points written to " << c.output_dir << '\n';
  for (const auto& msg : result.audit_failures) std::cerr << "audit: " << msg << '\n';
  if (!result.audit_failures.empty()) return kConvergence;
  if (failed && f.strict) return kConvergence;
  return kOk;
}

struct ExportFlags {
  std::string architecture = "proposed", scale = "1,1,1,1,1,1,1,1,1", service = "per-request",
              coupling = "single";
  std::int64_t users = 1, processors = 1, threads = 1;
  fs::path rates, out;
};

int cmd_export(const ExportFlags& f) {
  ExperimentConfig c;
  if (!f.rates.empty()) c = parse_config(slurp(f.rates), c);
  c = parse_config("scale.m1 = " + f.scale + "\nmodel.processor_service = " + f.service +
                       "\nmodel.coupling = " + f.coupling,
                   c);
  c.processors_per_nf = f.processors;
  c.threads_per_processor = f.threads;
  const auto arch = architecture_from_string(f.architecture);
  const SliceScale scale = c.scale(c.m1, f.users);
  scale.check();
  const std::string text = render(build(arch, scale, c.rates, c.build_options()));
  if (f.out.empty() || f.out == "-") {
    std::cout << text;
  } else {
    std::ofstream file(f.out, std::ios::binary);
    if (!(file << text)) throw IoFailure("cannot write " + f.out.string());
  }
  return kOk;
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "experiment configuration file");
  cmd->add_option("--model", f.model, "evaluate a single model file instead of a sweep");
  cmd->add_option("--engine", f.engine, "auto, ctmc, ssa or fluid");
  cmd->add_option("--seed", f.seed, "simulation seed");
  cmd->add_option("--out", f.out, "output directory (file for --model)");
  cmd->add_option("--rates", f.rates, "file of rates.* overrides");
  cmd->add_option("--target-art", f.target_art, "target response time in seconds");
  cmd->add_option("--arch", f.architectures, "comma separated architectures");
  cmd->add_flag("--strict", f.strict, "exit 3 when any point fails to converge");
  cmd->add_flag("--audit", f.audit, "cross-check the smallest point of each sweep");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Performance models of sliced 5G control planes"};
  app.require_subcommand(1);

  fs::path validate_path;
  auto* validate = app.add_subcommand("validate", "parse and check a model file");
  validate->add_option("model", validate_path, "model file")->required();

  RunFlags run_flags, compare_flags;
  auto* run = app.add_subcommand("run", "run the configured sweep, or one model with --model");
  add_run_flags(run, run_flags);
  auto* compare = app.add_subcommand("compare", "run both scales and write scalability.csv");
  add_run_flags(compare, compare_flags);

  ExportFlags export_flags;
  auto* exp = app.add_subcommand("export-model", "write a built-in model as text");
  exp->add_option("--arch", export_flags.architecture, "proposed or baseline");
  exp->add_option("--scale", export_flags.scale, "nine comma separated NF counts");
  exp->add_option("--users", export_flags.users, "UE population");
  exp->add_option("--processors-per-nf", export_flags.processors);
  exp->add_option("--threads-per-processor", export_flags.threads);
  exp->add_option("--service", export_flags.service, "per-request or table");
  exp->add_option("--coupling", export_flags.coupling, "single or pairwise");
  exp->add_option("--rates", export_flags.rates, "file of rates.* overrides");
  exp->add_option("--out", export_flags.out, "output file, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help lands here too, with code 0
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*run) return cmd_run(run_flags, false);
    if (*compare) return cmd_run(compare_flags, true);
    if (*exp) return cmd_export(export_flags);
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
