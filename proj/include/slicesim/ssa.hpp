// Stochastic simulation of the population CTMC (exponential race).
#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>

#include "slicesim/steady_state.hpp"

namespace slicesim {

struct SsaOptions {
  double horizon = 1e5;  // model seconds
  std::uint64_t seed = 42;
  double warmup_fraction = 0.2;
#ifdef NDEBUG
  bool check_conservation = false;
#else
  bool check_conservation = true;
#endif
};

/// Time-averaged occupancy and event-count throughputs over the part of
/// [0, horizon] after warm-up. `size` is the number of events simulated.
/// Throws std::invalid_argument when the measurement window is empty and
/// std::logic_error if conservation checking finds a violated group.
SteadyState simulate(std::shared_ptr<const CompiledModel> model, const SsaOptions& options);

}  // namespace slicesim
