// Session rate, response time, utilization and the productivity measures.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "slicesim/slicing.hpp"
#include "slicesim/steady_state.hpp"

namespace slicesim {

class MetricsError : public std::runtime_error {
 public:
  enum class Kind { UnknownSlice, NotAProcessorGroup, ZeroThroughput, NonPositiveTarget, ZeroUtilization };
  MetricsError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// f = 1 / (1 + T_m / T_target)
double perf_function(double t_m, double t_target);
/// P = t * f / R
double productivity(double throughput, double f, double r);
/// Q = P(m2) / P(m1)
double scalability(double p_m2, double p_m1);

/// Completions of the slice's establishment, counted at the client group.
double session_rate(const SteadyState& s, const SliceSpec& slice);

/// Client states between the slice's request and its completion.
std::vector<std::string> phase_states(const CompiledModel& model, const SliceSpec& slice);
double in_flight(const SteadyState& s, const SliceSpec& slice);
/// Mean time from request to completion by Little's law. 0 for an empty
/// system; throws ZeroThroughput if mass is waiting but nothing completes.
double art(const SteadyState& s, const SliceSpec& slice);

/// A processor group has two states: idle, left only by one get_* action,
/// and busy, whose every branch returns to idle.
bool is_processor_group(const CompiledModel& model, std::string_view component);
/// 1 - idle mass / group size. Throws NotAProcessorGroup.
double utilization(const SteadyState& s, std::string_view component);

enum class Aggregation { Mean, Max };
std::string_view to_string(Aggregation a);
Aggregation aggregation_from_string(std::string_view s);

struct MetricsOptions {
  double target_art = 1.0;
  Aggregation aggregation = Aggregation::Mean;
  double saturation_threshold = 0.99;
  /// Groups reported and aggregated, in order. Empty selects every processor
  /// group of the model.
  std::vector<std::string> processor_groups;
  /// Groups reported but left out of the aggregate (the client's own processor).
  std::vector<std::string> excluded_from_aggregate;
};

struct SliceMetrics {
  int slice = 0;
  double session_rate = 0.0;
  double art = 0.0;      // +inf when ZeroThroughput
  double in_flight = 0.0;
  double f = 0.0;
  std::optional<double> productivity;  // empty when R = 0
};

struct MetricsReport {
  std::int64_t users = 0;
  std::vector<SliceMetrics> slices;
  std::vector<std::pair<std::string, double>> utilization;
  double aggregate_utilization = 0.0;
  bool saturated = false;  // some reported group at or above the threshold

  const SliceMetrics& slice(int k) const;  // throws MetricsError(UnknownSlice)
};

MetricsReport compute_metrics(const SteadyState& s, const std::vector<SliceSpec>& slices, std::int64_t users,
                              const MetricsOptions& options = {});

/// Q(m1, m2) for one slice; empty if either productivity is undefined.
std::optional<double> scalability(const MetricsReport& m2, const MetricsReport& m1, int slice);

}  // namespace slicesim
