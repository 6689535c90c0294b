#include "slicesim/ssa.hpp"

#include <cmath>
#include <random>
#include <set>
#include <string>

namespace slicesim {

SteadyState simulate(std::shared_ptr<const CompiledModel> model, const SsaOptions& options) {
  const double warmup = options.horizon * options.warmup_fraction;
  const double window = options.horizon - warmup;
  if (!(window > 0.0) || !std::isfinite(window)) throw std::invalid_argument("empty measurement window");

  const CompiledModel& cm = *model;
  const int actions = cm.action_count();
  const auto& enablings = cm.enablings();

  // Which action rates must be recomputed when a slot changes.
  std::vector<std::vector<int>> readers(cm.slot_count());
  {
    std::vector<std::set<int>> sets(cm.slot_count());
    for (const auto& e : enablings) sets[e.from].insert(e.action);
    for (int s = 0; s < cm.slot_count(); ++s) readers[s].assign(sets[s].begin(), sets[s].end());
  }

  std::mt19937_64 rng(options.seed);
  std::exponential_distribution<double> exp1(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<double> x = cm.initial_occupancy();
  std::vector<double> rates(actions);
  for (int a = 0; a < actions; ++a) rates[a] = cm.rate(a, x.data());

  SteadyState out;
  out.engine = EngineKind::Ssa;
  out.model = model;
  out.occupancy.assign(cm.slot_count(), 0.0);
  out.flow.assign(enablings.size(), 0.0);
  out.action_rate.assign(actions, 0.0);

  std::vector<Move> moves;
  std::vector<char> dirty(actions, 0);
  std::vector<int> dirty_list;
  double t = 0.0;
  std::size_t events = 0;

  auto accumulate = [&](double from, double to) {
    const double lo = std::max(from, warmup), hi = std::min(to, options.horizon);
    if (hi <= lo) return;
    for (int s = 0; s < cm.slot_count(); ++s) out.occupancy[s] += x[s] * (hi - lo);
  };

  while (t < options.horizon) {
    double total = 0.0;
    for (double r : rates) total += r;
    if (!(total > 0.0)) {
      accumulate(t, options.horizon);
      break;
    }
    const double next = t + exp1(rng) / total;
    accumulate(t, next);
    if (next >= options.horizon) break;
    t = next;

    double pick = u(rng) * total;
    int a = 0;
    for (; a < actions - 1; ++a) {
      if (rates[a] > 0.0 && pick < rates[a]) break;
      pick -= rates[a];
    }
    while (!(rates[a] > 0.0)) --a;  // round-off guard

    if (!cm.sample(a, x.data(), rng, moves)) continue;
    ++events;
    const bool measured = t >= warmup;
    if (measured) out.action_rate[a] += 1.0;
    for (const auto& m : moves) {
      x[m.from] -= 1.0;
      x[m.to] += 1.0;
      if (measured) out.flow[m.enabling] += 1.0;
      for (int s : {m.from, m.to})
        for (int r : readers[s])
          if (!dirty[r]) {
            dirty[r] = 1;
            dirty_list.push_back(r);
          }
    }
    for (int r : dirty_list) {
      rates[r] = cm.rate(r, x.data());
      dirty[r] = 0;
    }
    dirty_list.clear();

    if (options.check_conservation) {
      for (const auto& leaf : cm.leaves()) {
        double sum = 0.0;
        for (int s = 0; s < leaf.size(); ++s) {
          if (x[leaf.offset + s] < 0.0) throw std::logic_error("negative occupancy in " + leaf.component);
          sum += x[leaf.offset + s];
        }
        if (sum != static_cast<double>(leaf.population))
          throw std::logic_error("population of " + leaf.component + " not conserved");
      }
    }
  }

  for (auto& v : out.occupancy) v /= window;
  for (auto& v : out.flow) v /= window;
  for (auto& v : out.action_rate) v /= window;
  out.time = options.horizon;
  out.size = events;
  return out;
}

}  // namespace slicesim
