#include "slicesim/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "slicesim/ctmc.hpp"
#include "slicesim/fluid.hpp"
#include "slicesim/parallel.hpp"
#include "slicesim/parser.hpp"
#include "slicesim/ssa.hpp"
#include "slicesim/svg.hpp"

#ifndef SLICESIM_VERSION
#define SLICESIM_VERSION "0.0.0"
#endif

namespace slicesim {

std::string_view to_string(PointStatus s) {
  switch (s) {
    case PointStatus::Ok: return "ok";
    case PointStatus::Knee: return "knee";
    case PointStatus::Saturated: return "saturated";
    case PointStatus::NoConvergence: return "no-convergence";
    case PointStatus::Error: return "error";
  }
  return "error";
}

EngineKind choose_engine(const CompiledModel& model, const ExperimentConfig& config) {
  switch (config.engine) {
    case EngineChoice::Ctmc: return EngineKind::Ctmc;
    case EngineChoice::Ssa: return EngineKind::Ssa;
    case EngineChoice::Fluid: return EngineKind::Fluid;
    case EngineChoice::Auto: break;
  }
  return state_count_bound(model) <= static_cast<double>(config.state_cap) ? EngineKind::Ctmc : EngineKind::Fluid;
}

SteadyState solve(std::shared_ptr<const CompiledModel> model, EngineKind engine, const ExperimentConfig& config) {
  switch (engine) {
    case EngineKind::Ctmc: return solve_ctmc(std::move(model), config.state_cap);
    case EngineKind::Ssa: {
      SsaOptions o;
      o.horizon = config.ssa_horizon;
      o.seed = config.seed;
      return simulate(std::move(model), o);
    }
    case EngineKind::Fluid: break;
  }
  return solve_fixed_point(std::move(model), config.fluid_options());
}

namespace {

std::vector<SliceSpec> both_slices(Architecture arch) { return {slice_spec(arch, 1), slice_spec(arch, 2)}; }

std::shared_ptr<const CompiledModel> compile_point(const PointSpec& spec, const ExperimentConfig& config) {
  const Model m = build(spec.architecture, config.scale(spec.nf, spec.users), config.rates, config.build_options());
  return std::make_shared<const CompiledModel>(m);
}

}  // namespace

PointResult evaluate_point(const PointSpec& spec, const ExperimentConfig& config) {
  PointResult r;
  r.spec = spec;
  try {
    auto model = compile_point(spec, config);
    r.engine = choose_engine(*model, config);
    const SteadyState s = solve(model, r.engine, config);
    r.converged = s.converged;
    r.residual = s.residual;
    r.report = compute_metrics(s, both_slices(spec.architecture), spec.users, config.metrics_options(spec.architecture));
    if (!s.converged) {
      r.status = PointStatus::NoConvergence;
      r.message = "residual " + format_number(s.residual) + " after " + std::to_string(s.size) + " iterations";
    } else {
      r.status = r.report->saturated ? PointStatus::Saturated : PointStatus::Ok;
    }
  } catch (const std::exception& e) {
    r.status = PointStatus::Error;
    r.message = e.what();
    r.report.reset();
  }
  return r;
}

std::vector<PointSpec> plan(const ExperimentConfig& config) {
  std::vector<PointSpec> out;
  for (auto arch : config.architectures) {
    std::vector<std::pair<std::string, ScaleTuple>> scales{{"m1", config.m1}};
    if (config.m2) scales.emplace_back("m2", *config.m2);
    for (const auto& [name, nf] : scales)
      for (auto n : config.sweep_points()) out.push_back({arch, name, nf, n});
  }
  return out;
}

void mark_knees(std::vector<PointResult>& points) {
  bool seen = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == 0 || points[i].spec.architecture != points[i - 1].spec.architecture ||
        points[i].spec.scale_name != points[i - 1].spec.scale_name)
      seen = false;
    if (points[i].status != PointStatus::Saturated && points[i].status != PointStatus::Knee) continue;
    points[i].status = seen ? PointStatus::Saturated : PointStatus::Knee;
    seen = true;
  }
}

std::optional<std::int64_t> knee(const std::vector<PointResult>& points, Architecture arch, std::string_view scale) {
  for (const auto& p : points)
    if (p.spec.architecture == arch && p.spec.scale_name == scale && p.status == PointStatus::Knee) return p.spec.users;
  return std::nullopt;
}

namespace {

// Re-solves the smallest point of each series on the exact chain (when it
// fits) and by simulation, and compares session rates.
std::vector<std::string> audit(const ExperimentConfig& config, const std::vector<PointResult>& points) {
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (i > 0 && p.spec.architecture == points[i - 1].spec.architecture &&
        p.spec.scale_name == points[i - 1].spec.scale_name)
      continue;
    const std::string where = std::string(to_string(p.spec.architecture)) + " " + p.spec.scale_name + " n=" +
                              std::to_string(p.spec.users);
    if (!p.report) {
      failures.push_back(where + ": primary engine failed: " + p.message);
      continue;
    }
    try {
      auto model = compile_point(p.spec, config);
      std::vector<std::pair<EngineKind, SteadyState>> checks;
      if (p.engine != EngineKind::Ctmc && state_count_bound(*model) <= static_cast<double>(config.state_cap))
        checks.emplace_back(EngineKind::Ctmc, solve_ctmc(model, config.state_cap));
      if (p.engine != EngineKind::Ssa) {
        SsaOptions o;
        o.horizon = config.audit_ssa_horizon;
        o.seed = config.seed;
        checks.emplace_back(EngineKind::Ssa, simulate(model, o));
      }
      for (const auto& [engine, s] : checks)
        for (int k = 1; k <= 2; ++k) {
          const double ref = p.report->slice(k).session_rate;
          const double got = session_rate(s, slice_spec(p.spec.architecture, k));
          const double gap = ref > 0.0 ? std::abs(got - ref) / ref : std::abs(got);
          if (gap > config.audit_tolerance) {
            std::ostringstream msg;
            msg << where << " slice " << k << ": " << to_string(p.engine) << " " << format_number(ref) << " vs "
                << to_string(engine) << " " << format_number(got) << " (gap " << format_number(gap) << ")";
            failures.push_back(msg.str());
          }
        }
    } catch (const std::exception& e) {
      failures.push_back(where + ": audit engine failed: " + e.what());
    }
  }
  return failures;
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  if (std::isnan(*v)) return "";
  return format_number(*v);
}

const PointResult* find_point(const std::vector<PointResult>& points, Architecture arch, std::string_view scale,
                              std::int64_t users) {
  for (const auto& p : points)
    if (p.spec.architecture == arch && p.spec.scale_name == scale && p.spec.users == users) return &p;
  return nullptr;
}

std::optional<double> productivity_of(const PointResult* p, int slice) {
  if (!p || !p->report) return std::nullopt;
  return p->report->slice(slice).productivity;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.check();
  ExperimentResult result;
  result.config = config;
  result.points = evaluate_points(plan(config), config);
  mark_knees(result.points);
  if (config.audit) result.audit_failures = audit(config, result.points);
  return result;
}

void write_csv(std::ostream& out, const ExperimentResult& result, Architecture arch) {
  const auto groups = processor_groups(arch);
  out << "users,architecture,scale,engine,status,slice,throughput_sessions_per_s,art_s,f,productivity,scalability";
  for (const auto& g : groups) out << ",util_" << g;
  out << '\n';
  for (const auto& p : result.points) {
    if (p.spec.architecture != arch) continue;
    const PointResult* base = find_point(result.points, arch, "m1", p.spec.users);
    for (int k = 1; k <= 2; ++k) {
      out << p.spec.users << ',' << to_string(arch) << ',' << p.spec.scale_name << ',' << to_string(p.engine) << ','
          << to_string(p.status) << ',' << k << ',';
      if (!p.report) {
        out << ",,,,";
        for (std::size_t g = 0; g < groups.size(); ++g) out << ',';
        out << '\n';
        continue;
      }
      const auto& m = p.report->slice(k);
      std::optional<double> q;
      const auto p1 = productivity_of(base, k);
      if (m.productivity && p1 && *p1 > 0.0) q = scalability(*m.productivity, *p1);
      out << cell(m.session_rate) << ',' << cell(m.art) << ',' << cell(m.f) << ',' << cell(m.productivity) << ','
          << cell(q);
      for (const auto& [name, u] : p.report->utilization) out << ',' << cell(u);
      out << '\n';
    }
  }
}

namespace {

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string tuple_string(const ScaleTuple& t) {
  SliceScale s;
  s.nf = t;
  return s.tuple_string();
}

}  // namespace

void write_metadata(std::ostream& out, const ExperimentResult& result) {
  using nlohmann::ordered_json;
  const auto& c = result.config;
  ordered_json j;
  j["tool"] = "slicesim";
  j["version"] = SLICESIM_VERSION;
  j["generated"] = timestamp();
  j["seed"] = c.seed;
  j["target_art_s"] = c.target_art;
  j["rates"] = c.rates;
  j["scales"]["m1"] = tuple_string(c.m1);
  if (c.m2) j["scales"]["m2"] = tuple_string(*c.m2);
  j["scales"]["processors_per_nf"] = c.processors_per_nf;
  j["scales"]["threads_per_processor"] = c.threads_per_processor;
  j["config"] = render_config(c);

  ordered_json knees = ordered_json::object();
  for (auto arch : c.architectures) {
    for (std::string scale : {"m1", "m2"}) {
      if (scale == "m2" && !c.m2) continue;
      const auto k = knee(result.points, arch, scale);
      knees[std::string(to_string(arch))][scale] = k ? ordered_json(*k) : ordered_json(nullptr);
    }
  }
  j["knees"] = knees;

  ordered_json points = ordered_json::array();
  for (const auto& p : result.points) {
    ordered_json e;
    e["architecture"] = to_string(p.spec.architecture);
    e["scale"] = p.spec.scale_name;
    e["users"] = p.spec.users;
    e["engine"] = to_string(p.engine);
    e["status"] = to_string(p.status);
    e["converged"] = p.converged;
    e["residual"] = p.residual;
    if (!p.message.empty()) e["message"] = p.message;
    points.push_back(std::move(e));
  }
  j["points"] = std::move(points);
  j["audit"] = {{"enabled", c.audit}, {"failures", result.audit_failures}};
  j["notes"] = {
      "Session completion is measured at the UE's reconfig_k action. The completion action named rep_se1 has no "
      "branch in the UE component, so it cannot be observed there."};
  out << j.dump(2) << '\n';
}

std::vector<ScalabilityRow> scalability_rows(const ExperimentResult& result) {
  const auto& c = result.config;
  if (!c.m2) throw ConfigError(0, "comparison needs scale.m2");
  std::vector<ScalabilityRow> rows;
  for (auto arch : c.architectures)
    for (int k = 1; k <= 2; ++k) {
      const std::size_t first = rows.size();
      for (auto n : c.sweep_points()) {
        ScalabilityRow r;
        r.architecture = arch;
        r.users = n;
        r.slice = k;
        const PointResult* a = find_point(result.points, arch, "m1", n);
        const PointResult* b = find_point(result.points, arch, "m2", n);
        r.status_m1 = a ? a->status : PointStatus::Error;
        r.status_m2 = b ? b->status : PointStatus::Error;
        r.p_m1 = productivity_of(a, k);
        r.p_m2 = productivity_of(b, k);
        if (r.p_m1 && r.p_m2 && *r.p_m1 > 0.0) r.q = scalability(*r.p_m2, *r.p_m1);
        rows.push_back(r);
      }
      std::optional<std::size_t> peak;
      for (std::size_t i = first; i < rows.size(); ++i)
        if (rows[i].q && (!peak || *rows[i].q > *rows[*peak].q)) peak = i;
      if (!peak) continue;
      for (std::size_t i = *peak + 1; i < rows.size(); ++i)
        rows[i].degrading = rows[i].q && *rows[i].q < *rows[*peak].q * (1.0 - 1e-3);
    }
  std::stable_sort(rows.begin(), rows.end(), [](const ScalabilityRow& x, const ScalabilityRow& y) {
    if (x.architecture != y.architecture) return x.architecture < y.architecture;
    return x.users < y.users;
  });
  return rows;
}

void write_scalability_csv(std::ostream& out, const std::vector<ScalabilityRow>& rows) {
  out << "architecture,users,slice,status_m1,status_m2,productivity_m1,productivity_m2,scalability,degrading\n";
  for (const auto& r : rows)
    out << to_string(r.architecture) << ',' << r.users << ',' << r.slice << ',' << to_string(r.status_m1) << ','
        << to_string(r.status_m2) << ',' << cell(r.p_m1) << ',' << cell(r.p_m2) << ',' << cell(r.q) << ','
        << (r.degrading ? 1 : 0) << '\n';
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> series_scales(const ExperimentConfig& c) {
  std::vector<std::string> s{"m1"};
  if (c.m2) s.push_back("m2");
  return s;
}

void write_plots(const ExperimentResult& result, const std::filesystem::path& dir) {
  const auto& c = result.config;
  svg::LinePlot rate{"Session establishment rate (slice 1)", "users", "sessions per second", {}};
  for (auto arch : c.architectures)
    for (const auto& scale : series_scales(c)) {
      svg::Series s{std::string(to_string(arch)) + " " + scale, {}, {}};
      for (const auto& p : result.points)
        if (p.spec.architecture == arch && p.spec.scale_name == scale && p.report) {
          s.x.push_back(static_cast<double>(p.spec.users));
          s.y.push_back(p.report->slice(1).session_rate);
        }
      rate.series.push_back(std::move(s));
    }
  write_text(dir / "session_rate.svg", svg::render(rate));

  for (auto arch : c.architectures)
    for (const auto& scale : series_scales(c)) {
      const std::string tag = std::string(to_string(arch)) + "_" + scale;
      svg::LinePlot util{"Processor utilization, " + std::string(to_string(arch)) + " " + scale, "users",
                         "utilization", {}, 0.0, 1.0};
      // Bars at the knee, or at the last point when the series never saturates.
      const PointResult* at = nullptr;
      for (const auto& p : result.points) {
        if (p.spec.architecture != arch || p.spec.scale_name != scale || !p.report) continue;
        if (!at || at->status != PointStatus::Knee) at = &p;
      }
      for (const auto& g : processor_groups(arch)) {
        svg::Series s{g, {}, {}};
        for (const auto& p : result.points) {
          if (p.spec.architecture != arch || p.spec.scale_name != scale || !p.report) continue;
          for (const auto& [name, u] : p.report->utilization)
            if (name == g) {
              s.x.push_back(static_cast<double>(p.spec.users));
              s.y.push_back(u);
            }
        }
        util.series.push_back(std::move(s));
      }
      write_text(dir / ("utilization_" + tag + ".svg"), svg::render(util));
      if (at) {
        svg::BarChart bars{"Utilization by group at n = " + std::to_string(at->spec.users) + ", " +
                               std::string(to_string(arch)) + " " + scale,
                           "utilization", at->report->utilization, 1.0};
        write_text(dir / ("utilization_bars_" + tag + ".svg"), svg::render(bars));
      }
    }
}

void write_scalability_plot(const std::vector<ScalabilityRow>& rows, const ExperimentConfig& c,
                            const std::filesystem::path& dir) {
  svg::LinePlot plot{"Scalability Q(m1, m2), slice 1", "users", "Q", {}};
  for (auto arch : c.architectures) {
    svg::Series s{std::string(to_string(arch)), {}, {}};
    for (const auto& r : rows)
      if (r.architecture == arch && r.slice == 1 && r.q) {
        s.x.push_back(static_cast<double>(r.users));
        s.y.push_back(*r.q);
      }
    plot.series.push_back(std::move(s));
  }
  write_text(dir / "scalability.svg", svg::render(plot));
}

}  // namespace

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir, bool compare) {
  std::filesystem::create_directories(dir);
  for (auto arch : result.config.architectures) {
    std::ostringstream csv;
    write_csv(csv, result, arch);
    write_text(dir / (std::string(to_string(arch)) + ".csv"), csv.str());
  }
  std::ostringstream meta;
  write_metadata(meta, result);
  write_text(dir / "metadata.json", meta.str());
  write_plots(result, dir);
  if (compare) {
    const auto rows = scalability_rows(result);
    std::ostringstream csv;
    write_scalability_csv(csv, rows);
    write_text(dir / "scalability.csv", csv.str());
    write_scalability_plot(rows, result.config, dir);
  }
}

}  // namespace slicesim
