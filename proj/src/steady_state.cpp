#include "slicesim/steady_state.hpp"

namespace slicesim {

std::string_view to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::Ctmc: return "ctmc";
    case EngineKind::Ssa: return "ssa";
    case EngineKind::Fluid: return "fluid";
  }
  return "?";
}

double SteadyState::throughput(std::string_view action) const {
  const int a = model->action_index(action);
  return a < 0 ? 0.0 : action_rate[a];
}

double SteadyState::leaf_throughput(std::string_view component, std::string_view action) const {
  const int leaf = model->leaf_index(component);
  const int a = model->action_index(action);
  if (leaf < 0 || a < 0) return 0.0;
  double sum = 0.0;
  const auto& en = model->enablings();
  for (std::size_t i = 0; i < en.size(); ++i)
    if (en[i].leaf == leaf && en[i].action == a) sum += flow[i];
  return sum;
}

double SteadyState::occupancy_of(std::string_view component, std::string_view state) const {
  const int s = model->slot(component, state);
  return s < 0 ? 0.0 : occupancy[s];
}

double SteadyState::group_mass(std::string_view component) const {
  const int leaf = model->leaf_index(component);
  if (leaf < 0) return 0.0;
  const auto& info = model->leaves()[leaf];
  double sum = 0.0;
  for (int s = 0; s < info.size(); ++s) sum += occupancy[info.offset + s];
  return sum;
}

}  // namespace slicesim
