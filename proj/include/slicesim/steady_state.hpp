// Long-run output common to every engine.
#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "slicesim/compiled.hpp"

namespace slicesim {

enum class EngineKind { Ctmc, Ssa, Fluid };

std::string_view to_string(EngineKind kind);

struct SteadyState {
  EngineKind engine = EngineKind::Fluid;
  std::shared_ptr<const CompiledModel> model;
  std::vector<double> occupancy;    // expected mass per slot
  std::vector<double> flow;         // long-run rate per enabling
  std::vector<double> action_rate;  // global throughput per action

  bool converged = true;
  double residual = 0.0;
  double time = 0.0;         // model seconds integrated or simulated
  std::size_t size = 0;      // CTMC states, SSA events or solver iterations

  double throughput(std::string_view action) const;
  /// Rate at which `component`'s group takes part in `action`.
  double leaf_throughput(std::string_view component, std::string_view action) const;
  double occupancy_of(std::string_view component, std::string_view state) const;
  double group_mass(std::string_view component) const;
};

}  // namespace slicesim
