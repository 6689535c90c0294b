// OpenMP drivers for independent work items, each with a serial twin that
// runs the same loop in order. Results come back in input order either way.
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "slicesim/experiment.hpp"
#include "slicesim/ssa.hpp"

namespace slicesim {

enum class Execution { Serial, Parallel };

/// SLICESIM_THREADS when set to a positive integer, else the OpenMP default.
int thread_budget();

std::vector<PointResult> evaluate_points(const std::vector<PointSpec>& points, const ExperimentConfig& config,
                                         Execution exec = Execution::Parallel);

/// One simulation per seed, all other options shared.
std::vector<SteadyState> simulate_replicas(std::shared_ptr<const CompiledModel> model, SsaOptions options,
                                           const std::vector<std::uint64_t>& seeds,
                                           Execution exec = Execution::Parallel);

/// Mean occupancy, flow and action rate over replicas of one model.
SteadyState pool(const std::vector<SteadyState>& replicas);

}  // namespace slicesim
