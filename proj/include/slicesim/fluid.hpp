// Mean-field relaxation of the population model.
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "slicesim/steady_state.hpp"

namespace slicesim {

/// Ordinary differential equation right-hand side dx/dt = f(x).
std::vector<double> derivative(const CompiledModel& model, const std::vector<double>& x);

struct IntegrationOptions {
  double rtol = 1e-8;
  double atol = 0.0;     // 0 selects rtol times the largest population
  double h_min = 1e-14;  // smallest step before giving up
  std::size_t max_steps = 50'000'000;
};

struct Trajectory {
  std::vector<double> x;  // state at the final time
  double t = 0.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double max_relative_drift = 0.0;  // worst per-group mass drift seen at accepted steps
  bool stopped_early = false;       // observer asked to stop
};

/// Dormand-Prince 5(4) with adaptive steps from `x0` over [0, t_end].
/// The observer sees every accepted step and may return false to stop.
Trajectory integrate(const CompiledModel& model, std::vector<double> x0, double t_end,
                     const IntegrationOptions& options = {},
                     const std::function<bool(double, const std::vector<double>&)>& observer = {});

enum class FluidMethod { PseudoTransient, Explicit };
std::string_view to_string(FluidMethod m);  // "ptc" | "explicit"
FluidMethod fluid_method_from_string(std::string_view s);

struct FluidOptions {
  double epsilon = 1e-8;  // accept when ‖dx/dt‖∞ < ε·max(1, ‖x‖∞)
  double t_max = 1e6;     // pseudo-time budget
  FluidMethod method = FluidMethod::PseudoTransient;
  std::size_t max_iterations = 20'000;
};

/// Steady state of the fluid system from the initial occupancy. A solve that
/// does not meet ε within the budget comes back with converged = false and
/// the best point reached; it does not throw.
SteadyState solve_fixed_point(std::shared_ptr<const CompiledModel> model, const FluidOptions& options = {});

/// |fluid − exact| / exact per action throughput (0 where both vanish).
std::map<std::string, double> fluid_vs_ctmc_gap(std::shared_ptr<const CompiledModel> model,
                                                 const FluidOptions& options = {});

}  // namespace slicesim
