#include "slicesim/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "slicesim/parser.hpp"

namespace slicesim {

std::string_view to_string(EngineChoice e) {
  switch (e) {
    case EngineChoice::Auto: return "auto";
    case EngineChoice::Ctmc: return "ctmc";
    case EngineChoice::Ssa: return "ssa";
    case EngineChoice::Fluid: return "fluid";
  }
  return "auto";
}

EngineChoice engine_choice_from_string(std::string_view s) {
  if (s == "auto") return EngineChoice::Auto;
  if (s == "ctmc") return EngineChoice::Ctmc;
  if (s == "ssa") return EngineChoice::Ssa;
  if (s == "fluid") return EngineChoice::Fluid;
  throw std::invalid_argument("unknown engine '" + std::string(s) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
T parse_int(std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("expected an integer, got '" + std::string(s) + "'");
  return v;
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

ScaleTuple parse_tuple(std::string_view s) {
  const auto items = split_list(s);
  if (items.size() != 9) throw std::invalid_argument("a scale needs 9 counts, got " + std::to_string(items.size()));
  ScaleTuple t{};
  for (std::size_t i = 0; i < 9; ++i) {
    t[i] = parse_int<std::int64_t>(items[i]);
    if (t[i] < 1) throw std::invalid_argument("scale counts must be positive, got " + std::to_string(t[i]));
  }
  return t;
}

std::string tuple_text(const ScaleTuple& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) out += (i ? "," : "") + std::to_string(t[i]);
  return out;
}

struct Key {
  std::string_view name;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Key int_key(std::string_view name, T ExperimentConfig::*field, T least = 0) {
  return {name,
          [field, least](ExperimentConfig& c, std::string_view v) {
            c.*field = parse_int<T>(v);
            if (c.*field < least) throw std::invalid_argument("must be at least " + std::to_string(least));
          },
          [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

double parse_positive(std::string_view s) {
  const double v = parse_double(s);
  if (!(v > 0.0)) throw std::invalid_argument("must be positive, got '" + std::string(s) + "'");
  return v;
}

Key double_key(std::string_view name, double ExperimentConfig::*field) {
  return {name, [field](ExperimentConfig& c, std::string_view v) { c.*field = parse_positive(v); },
          [field](const ExperimentConfig& c) { return format_number(c.*field); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"experiment.architectures",
       [](ExperimentConfig& c, std::string_view v) {
         c.architectures.clear();
         for (auto item : split_list(v)) c.architectures.push_back(architecture_from_string(item));
       },
       [](const ExperimentConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.architectures.size(); ++i)
           out += std::string(i ? ", " : "") + std::string(to_string(c.architectures[i]));
         return out;
       }},
      {"scale.m1", [](ExperimentConfig& c, std::string_view v) { c.m1 = parse_tuple(v); },
       [](const ExperimentConfig& c) { return tuple_text(c.m1); }},
      {"scale.m2",
       [](ExperimentConfig& c, std::string_view v) {
         if (v.empty())
           c.m2.reset();
         else
           c.m2 = parse_tuple(v);
       },
       [](const ExperimentConfig& c) { return c.m2 ? tuple_text(*c.m2) : std::string(); }},
      int_key<std::int64_t>("scale.processors_per_nf", &ExperimentConfig::processors_per_nf, 1),
      int_key<std::int64_t>("scale.threads_per_processor", &ExperimentConfig::threads_per_processor, 1),
      int_key("sweep.start", &ExperimentConfig::sweep_start),
      int_key("sweep.stop", &ExperimentConfig::sweep_stop),
      int_key<std::int64_t>("sweep.step", &ExperimentConfig::sweep_step, 1),
      {"engine.kind", [](ExperimentConfig& c, std::string_view v) { c.engine = engine_choice_from_string(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.engine)); }},
      int_key("engine.state_cap", &ExperimentConfig::state_cap),
      int_key("engine.seed", &ExperimentConfig::seed),
      double_key("engine.ssa_horizon", &ExperimentConfig::ssa_horizon),
      double_key("engine.fluid_epsilon", &ExperimentConfig::fluid_epsilon),
      double_key("engine.fluid_t_max", &ExperimentConfig::fluid_t_max),
      {"engine.fluid_method",
       [](ExperimentConfig& c, std::string_view v) { c.fluid_method = fluid_method_from_string(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.fluid_method)); }},
      int_key("engine.fluid_max_iterations", &ExperimentConfig::fluid_max_iterations),
      {"model.processor_service",
       [](ExperimentConfig& c, std::string_view v) { c.service = processor_service_from_string(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.service)); }},
      {"model.coupling", [](ExperimentConfig& c, std::string_view v) { c.coupling = coupling_from_string(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.coupling)); }},
      double_key("metrics.target_art", &ExperimentConfig::target_art),
      {"metrics.aggregation",
       [](ExperimentConfig& c, std::string_view v) { c.aggregation = aggregation_from_string(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.aggregation)); }},
      {"output.dir", [](ExperimentConfig& c, std::string_view v) { c.output_dir = std::string(v); },
       [](const ExperimentConfig& c) { return c.output_dir; }},
      {"audit.enabled", [](ExperimentConfig& c, std::string_view v) { c.audit = parse_bool(v); },
       [](const ExperimentConfig& c) { return std::string(c.audit ? "true" : "false"); }},
      double_key("audit.tolerance", &ExperimentConfig::audit_tolerance),
      double_key("audit.ssa_horizon", &ExperimentConfig::audit_ssa_horizon),
  };
  return table;
}

}  // namespace

void ExperimentConfig::check() const {
  if (architectures.empty()) throw ConfigError(0, "experiment.architectures is empty");
  if (sweep_step <= 0) throw ConfigError(0, "sweep.step must be positive");
  if (sweep_start < 0 || sweep_stop < sweep_start) throw ConfigError(0, "sweep range is empty");
  if (processors_per_nf < 1 || threads_per_processor < 1)
    throw ConfigError(0, "processors per NF and threads per processor must be positive");
  auto positive = [](const ScaleTuple& t, const char* name) {
    for (auto v : t)
      if (v < 1) throw ConfigError(0, std::string(name) + " has a non-positive count");
  };
  positive(m1, "scale.m1");
  if (m2) positive(*m2, "scale.m2");
  if (!(target_art > 0.0)) throw ConfigError(0, "metrics.target_art must be positive");
  if (!(fluid_epsilon > 0.0) || !(ssa_horizon > 0.0)) throw ConfigError(0, "engine tolerances must be positive");
  for (const auto& [name, value] : rates)
    if (!(value > 0.0)) throw ConfigError(0, "rate " + name + " must be positive");
}

std::vector<std::int64_t> ExperimentConfig::sweep_points() const {
  std::vector<std::int64_t> out;
  for (std::int64_t n = sweep_start; n <= sweep_stop; n += sweep_step) out.push_back(n);
  return out;
}

SliceScale ExperimentConfig::scale(const ScaleTuple& nf, std::int64_t users) const {
  SliceScale s;
  s.nf = nf;
  s.processors_per_nf = processors_per_nf;
  s.threads_per_processor = threads_per_processor;
  s.users = users;
  return s;
}

BuildOptions ExperimentConfig::build_options() const { return {service, coupling}; }

FluidOptions ExperimentConfig::fluid_options() const {
  FluidOptions o;
  o.epsilon = fluid_epsilon;
  o.t_max = fluid_t_max;
  o.method = fluid_method;
  o.max_iterations = fluid_max_iterations;
  return o;
}

MetricsOptions ExperimentConfig::metrics_options(Architecture arch) const {
  MetricsOptions o;
  o.target_art = target_art;
  o.aggregation = aggregation;
  o.processor_groups = processor_groups(arch);
  o.excluded_from_aggregate = {o.processor_groups.front()};
  return o;
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "missing key");
    if (!seen.insert(std::string(key)).second) throw ConfigError(line_no, "repeated key " + std::string(key));
    try {
      if (key.rfind("rates.", 0) == 0) {
        const auto name = key.substr(6);
        if (name.empty()) throw std::invalid_argument("missing rate name");
        base.rates[std::string(name)] = parse_positive(value);
        continue;
      }
      bool known = false;
      for (const auto& k : keys())
        if (k.name == key) {
          k.set(base, value);
          known = true;
          break;
        }
      if (!known) throw std::invalid_argument("unknown key " + std::string(key));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line_no, e.what());
    }
  }
  return base;
}

std::string render_config(const ExperimentConfig& config) {
  std::ostringstream out;
  std::string_view section;
  for (const auto& k : keys()) {
    const auto dot = k.name.find('.');
    const auto sec = k.name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      section = sec;
    }
    const std::string v = k.get(config);
    out << k.name << " =" << (v.empty() ? "" : " ") << v << '\n';
  }
  out << '\n';
  for (const auto& [name, value] : config.rates) out << "rates." << name << " = " << format_number(value) << '\n';
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  return parse_config(read_file(path), std::move(base));
}

}  // namespace slicesim
