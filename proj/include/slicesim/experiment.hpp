// Sweeps over user counts, per-point evaluation and the CSV/JSON outputs.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slicesim/config.hpp"
#include "slicesim/metrics.hpp"
#include "slicesim/slicing.hpp"
#include "slicesim/steady_state.hpp"

namespace slicesim {

enum class PointStatus { Ok, Knee, Saturated, NoConvergence, Error };
std::string_view to_string(PointStatus s);  // ok, knee, saturated, no-convergence, error

struct PointSpec {
  Architecture architecture = Architecture::Proposed;
  std::string scale_name;  // "m1" or "m2"
  ScaleTuple nf{};
  std::int64_t users = 0;
};

struct PointResult {
  PointSpec spec;
  EngineKind engine = EngineKind::Fluid;
  PointStatus status = PointStatus::Ok;
  std::string message;  // error text or convergence note
  std::optional<MetricsReport> report;
  bool converged = false;
  double residual = 0.0;
};

/// Auto picks the exact chain when the state-count bound fits the cap.
EngineKind choose_engine(const CompiledModel& model, const ExperimentConfig& config);
SteadyState solve(std::shared_ptr<const CompiledModel> model, EngineKind engine, const ExperimentConfig& config);

/// Builds, solves and measures one point. Engine failures land in the
/// result's status and message; nothing is thrown.
PointResult evaluate_point(const PointSpec& spec, const ExperimentConfig& config);

/// Every (architecture, scale, n) of the config, in CSV order.
std::vector<PointSpec> plan(const ExperimentConfig& config);

/// Marks the first saturated point of each (architecture, scale) series as
/// the knee and later saturated ones as saturated. Expects CSV order.
void mark_knees(std::vector<PointResult>& points);

/// First knee of a series, if any.
std::optional<std::int64_t> knee(const std::vector<PointResult>& points, Architecture arch, std::string_view scale);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<PointResult> points;  // CSV order
  std::vector<std::string> audit_failures;
};

/// Plans, evaluates in parallel, marks knees and runs the audit if enabled.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Rows for one architecture; the header is fixed, then one util_ column per
/// processor group in declaration order.
void write_csv(std::ostream& out, const ExperimentResult& result, Architecture arch);
void write_metadata(std::ostream& out, const ExperimentResult& result);

struct ScalabilityRow {
  Architecture architecture = Architecture::Proposed;
  std::int64_t users = 0;
  int slice = 0;
  std::optional<double> p_m1, p_m2, q;
  PointStatus status_m1 = PointStatus::Ok, status_m2 = PointStatus::Ok;
  bool degrading = false;  // past the peak of Q and below it
};

/// Q(m1, m2) per architecture, n and slice; needs m2 in the config.
std::vector<ScalabilityRow> scalability_rows(const ExperimentResult& result);
void write_scalability_csv(std::ostream& out, const std::vector<ScalabilityRow>& rows);

/// Writes the per-architecture CSVs, metadata.json and the plots into the
/// output directory. With `compare`, also scalability.csv and its plot.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir, bool compare);

}  // namespace slicesim
