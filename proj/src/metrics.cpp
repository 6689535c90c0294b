#include "slicesim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

namespace slicesim {

double perf_function(double t_m, double t_target) {
  if (!(t_target > 0.0)) throw MetricsError(MetricsError::Kind::NonPositiveTarget, "target response time must be positive");
  return 1.0 / (1.0 + t_m / t_target);
}

double productivity(double throughput, double f, double r) {
  if (!(r > 0.0)) throw MetricsError(MetricsError::Kind::ZeroUtilization, "productivity undefined at zero utilization");
  return throughput * f / r;
}

double scalability(double p_m2, double p_m1) {
  if (!(p_m1 > 0.0)) throw MetricsError(MetricsError::Kind::ZeroUtilization, "scalability undefined: P(m1) is not positive");
  return p_m2 / p_m1;
}

double session_rate(const SteadyState& s, const SliceSpec& slice) {
  if (s.model->leaf_index(slice.client) < 0 || s.model->action_index(slice.completion) < 0)
    throw MetricsError(MetricsError::Kind::UnknownSlice, "no completion action " + slice.completion + " at " + slice.client);
  return s.leaf_throughput(slice.client, slice.completion);
}

std::vector<std::string> phase_states(const CompiledModel& model, const SliceSpec& slice) {
  const int leaf = model.leaf_index(slice.client);
  const int request = model.action_index(slice.request);
  const int completion = model.action_index(slice.completion);
  if (leaf < 0 || request < 0 || completion < 0)
    throw MetricsError(MetricsError::Kind::UnknownSlice, "slice actions not found at " + slice.client);
  const auto& en = model.enablings();
  std::set<int> seen;
  std::deque<int> todo;
  for (const auto& e : en)
    if (e.leaf == leaf && e.action == request && seen.insert(e.to).second) todo.push_back(e.to);
  while (!todo.empty()) {
    const int s = todo.front();
    todo.pop_front();
    for (const auto& e : en)
      if (e.leaf == leaf && e.from == s && e.action != completion && seen.insert(e.to).second) todo.push_back(e.to);
  }
  const auto& info = model.leaves()[leaf];
  std::vector<std::string> out;
  for (int s : seen) out.push_back(info.state_names[s - info.offset]);
  return out;
}

double in_flight(const SteadyState& s, const SliceSpec& slice) {
  double mass = 0.0;
  for (const auto& state : phase_states(*s.model, slice)) mass += s.occupancy_of(slice.client, state);
  return mass;
}

double art(const SteadyState& s, const SliceSpec& slice) {
  const double rate = session_rate(s, slice);
  const double mass = in_flight(s, slice);
  if (rate > 0.0) return mass / rate;
  if (mass > 0.0) throw MetricsError(MetricsError::Kind::ZeroThroughput, "sessions wait but none complete");
  return 0.0;
}

bool is_processor_group(const CompiledModel& model, std::string_view component) {
  const int leaf = model.leaf_index(component);
  if (leaf < 0) return false;
  const auto& info = model.leaves()[leaf];
  if (info.size() != 2) return false;
  const int idle = info.offset, busy = info.offset + 1;
  int gets = 0, serves = 0;
  for (const auto& e : model.enablings()) {
    if (e.leaf != leaf) continue;
    if (e.from == idle) {
      if (e.to != busy || model.actions()[e.action].rfind("get_", 0) != 0) return false;
      ++gets;
    } else {
      if (e.to != idle) return false;
      ++serves;
    }
  }
  return gets == 1 && serves >= 1;
}

double utilization(const SteadyState& s, std::string_view component) {
  if (!is_processor_group(*s.model, component))
    throw MetricsError(MetricsError::Kind::NotAProcessorGroup, std::string(component) + " is not a processor group");
  const auto& info = s.model->leaves()[s.model->leaf_index(component)];
  if (info.population == 0) return 0.0;
  const double idle = s.occupancy[info.offset];
  return std::clamp(1.0 - idle / static_cast<double>(info.population), 0.0, 1.0);
}

std::string_view to_string(Aggregation a) { return a == Aggregation::Mean ? "mean" : "max"; }

Aggregation aggregation_from_string(std::string_view s) {
  if (s == "mean") return Aggregation::Mean;
  if (s == "max") return Aggregation::Max;
  throw std::invalid_argument("unknown aggregation '" + std::string(s) + "'");
}

const SliceMetrics& MetricsReport::slice(int k) const {
  for (const auto& m : slices)
    if (m.slice == k) return m;
  throw MetricsError(MetricsError::Kind::UnknownSlice, "no slice " + std::to_string(k));
}

MetricsReport compute_metrics(const SteadyState& s, const std::vector<SliceSpec>& slices, std::int64_t users,
                              const MetricsOptions& options) {
  MetricsReport report;
  report.users = users;

  std::vector<std::string> groups = options.processor_groups;
  if (groups.empty())
    for (const auto& leaf : s.model->leaves())
      if (is_processor_group(*s.model, leaf.component)) groups.push_back(leaf.component);
  double sum = 0.0, peak = 0.0;
  int counted = 0;
  for (const auto& g : groups) {
    const double u = utilization(s, g);
    report.utilization.emplace_back(g, u);
    if (u >= options.saturation_threshold) report.saturated = true;
    if (std::find(options.excluded_from_aggregate.begin(), options.excluded_from_aggregate.end(), g) !=
        options.excluded_from_aggregate.end())
      continue;
    sum += u;
    peak = std::max(peak, u);
    ++counted;
  }
  report.aggregate_utilization = options.aggregation == Aggregation::Mean ? (counted ? sum / counted : 0.0) : peak;

  for (std::size_t k = 0; k < slices.size(); ++k) {
    SliceMetrics m;
    m.slice = static_cast<int>(k) + 1;
    m.session_rate = session_rate(s, slices[k]);
    m.in_flight = in_flight(s, slices[k]);
    try {
      m.art = art(s, slices[k]);
    } catch (const MetricsError& e) {
      if (e.kind() != MetricsError::Kind::ZeroThroughput) throw;
      m.art = std::numeric_limits<double>::infinity();
    }
    m.f = std::isinf(m.art) ? 0.0 : perf_function(m.art, options.target_art);
    if (report.aggregate_utilization > 0.0) m.productivity = productivity(m.session_rate, m.f, report.aggregate_utilization);
    report.slices.push_back(m);
  }
  return report;
}

std::optional<double> scalability(const MetricsReport& m2, const MetricsReport& m1, int slice) {
  const auto& a = m2.slice(slice);
  const auto& b = m1.slice(slice);
  if (!a.productivity || !b.productivity || !(*b.productivity > 0.0)) return std::nullopt;
  return scalability(*a.productivity, *b.productivity);
}

}  // namespace slicesim
