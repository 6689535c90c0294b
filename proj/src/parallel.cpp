#include "slicesim/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace slicesim {

int thread_budget() {
  if (const char* env = std::getenv("SLICESIM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

std::vector<PointResult> evaluate_points(const std::vector<PointSpec>& points, const ExperimentConfig& config,
                                         Execution exec) {
  std::vector<PointResult> out(points.size());
  const auto count = static_cast<std::ptrdiff_t>(points.size());
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t i = 0; i < count; ++i) out[i] = evaluate_point(points[i], config);
    return out;
  }
  // evaluate_point never throws, so no exception escapes the region.
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_budget())
  for (std::ptrdiff_t i = 0; i < count; ++i) out[i] = evaluate_point(points[i], config);
  return out;
}

std::vector<SteadyState> simulate_replicas(std::shared_ptr<const CompiledModel> model, SsaOptions options,
                                           const std::vector<std::uint64_t>& seeds, Execution exec) {
  std::vector<SteadyState> out(seeds.size());
  const auto count = static_cast<std::ptrdiff_t>(seeds.size());
  auto run = [&](std::ptrdiff_t i) {
    SsaOptions o = options;
    o.seed = seeds[i];
    out[i] = simulate(model, o);
  };
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t i = 0; i < count; ++i) run(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(seeds.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_budget())
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      run(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

SteadyState pool(const std::vector<SteadyState>& replicas) {
  if (replicas.empty()) throw std::invalid_argument("no replicas to pool");
  SteadyState out = replicas.front();
  const double k = static_cast<double>(replicas.size());
  for (std::size_t r = 1; r < replicas.size(); ++r) {
    const auto& s = replicas[r];
    if (s.model != out.model) throw std::invalid_argument("replicas of different models");
    for (std::size_t i = 0; i < out.occupancy.size(); ++i) out.occupancy[i] += s.occupancy[i];
    for (std::size_t i = 0; i < out.flow.size(); ++i) out.flow[i] += s.flow[i];
    for (std::size_t i = 0; i < out.action_rate.size(); ++i) out.action_rate[i] += s.action_rate[i];
    out.time += s.time;
    out.size += s.size;
    out.converged = out.converged && s.converged;
  }
  for (auto& v : out.occupancy) v /= k;
  for (auto& v : out.flow) v /= k;
  for (auto& v : out.action_rate) v /= k;
  return out;
}

}  // namespace slicesim
