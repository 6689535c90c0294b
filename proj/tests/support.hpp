// Helpers shared by the test binaries, including an exact solver that works
// on individual identities instead of population counts. It only reads the
// model-core types, so it checks the compiled population semantics from the
// outside.
#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <map>
#include <set>
#include <memory>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "slicesim/compiled.hpp"
#include "slicesim/model.hpp"
#include "slicesim/parser.hpp"

namespace testing {

inline std::shared_ptr<const slicesim::CompiledModel> compile(const slicesim::Model& m) {
  return std::make_shared<const slicesim::CompiledModel>(m);
}

inline std::shared_ptr<const slicesim::CompiledModel> compile(std::string_view text) {
  return compile(slicesim::parse(text));
}

inline const char* two_state_text(int n) {
  static std::string s;
  s = "r_a = 1; r_b = 2;\nP_1 = (a, r_a).P_2;\nP_2 = (b, r_b).P_1;\nP_1[" + std::to_string(n) + "]\n";
  return s.c_str();
}

struct Interleaved {
  std::size_t states = 0;
  std::map<std::string, double> throughput;  // per action
  std::map<std::string, double> occupancy;   // "Component.State" -> expected count
};

namespace detail {

struct Individual {
  const slicesim::SequentialComponent* component;
};

using Change = std::vector<std::pair<int, int>>;  // (individual, new local state)
struct Transition {
  double rate;
  Change change;
};

struct Oracle {
  const slicesim::Model& model;
  std::vector<Individual> people;
  std::vector<std::pair<int, int>> range_of_leaf;  // by leaf order

  double rate_of(const slicesim::Rate& r) const {
    auto v = slicesim::resolve(r, model.rates);
    if (!v) throw std::invalid_argument("unresolved rate");
    return *v;
  }

  // Transitions of the subterm on `action` in global state `s`. `leaf` counts
  // leaves visited left to right.
  std::vector<Transition> moves(const slicesim::SystemComposition& node, const std::string& action,
                                const std::vector<int>& s, int& leaf) const {
    std::vector<Transition> out;
    if (node.is_leaf()) {
      const auto [begin, end] = range_of_leaf[leaf++];
      for (int i = begin; i < end; ++i) {
        const auto& comp = *people[i].component;
        for (const auto& b : comp.states[s[i]].branches)
          if (b.head().action == action)
            out.push_back({rate_of(b.head().rate), {{i, static_cast<int>(*comp.state_index(b.successor))}}});
      }
      return out;
    }
    auto left = moves(node.left(), action, s, leaf);
    auto right = moves(node.right(), action, s, leaf);
    if (!node.sync().actions.count(action)) {
      out = std::move(left);
      out.insert(out.end(), right.begin(), right.end());
      return out;
    }
    double ra = 0.0, rb = 0.0;
    for (const auto& t : left) ra += t.rate;
    for (const auto& t : right) rb += t.rate;
    if (ra <= 0.0 || rb <= 0.0) return out;
    const double joint = std::min(ra, rb);
    for (const auto& l : left)
      for (const auto& r : right) {
        Change c = l.change;
        c.insert(c.end(), r.change.begin(), r.change.end());
        out.push_back({l.rate / ra * r.rate / rb * joint, std::move(c)});
      }
    return out;
  }
};

}  // namespace detail

/// Exact stationary measures of the interleaved chain. Throws if the chain
/// grows past `cap` states.
inline Interleaved interleaved_oracle(const slicesim::Model& input, std::size_t cap = 200000) {
  slicesim::Model model = input;
  for (auto& c : model.components) c = slicesim::desugar(c);
  detail::Oracle o{model, {}, {}};
  std::vector<int> start;
  for (const auto& g : model.system.leaves()) {
    const auto* comp = model.find_component(g.component);
    const int first = static_cast<int>(o.people.size());
    for (std::int64_t k = 0; k < g.count; ++k) {
      o.people.push_back({comp});
      start.push_back(static_cast<int>(*comp->state_index(g.initial_state)));
    }
    o.range_of_leaf.emplace_back(first, static_cast<int>(o.people.size()));
  }
  std::set<std::string> actions;
  for (const auto& c : model.components)
    for (const auto& a : slicesim::alphabet(c)) actions.insert(a);

  std::map<std::vector<int>, int> index;
  std::vector<std::vector<int>> states;
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<std::map<std::string, double>> out_rate;
  std::queue<int> todo;
  index.emplace(start, 0);
  states.push_back(start);
  todo.push(0);
  while (!todo.empty()) {
    const int k = todo.front();
    todo.pop();
    const auto s = states[k];
    std::map<std::string, double> per_action;
    for (const auto& a : actions) {
      int leaf = 0;
      for (const auto& t : o.moves(model.system, a, s, leaf)) {
        auto next = s;
        for (const auto& [who, to] : t.change) next[who] = to;
        auto [it, fresh] = index.emplace(next, static_cast<int>(states.size()));
        if (fresh) {
          if (states.size() >= cap) throw std::length_error("oracle chain too large");
          states.push_back(next);
          todo.push(it->second);
        }
        per_action[a] += t.rate;
        if (it->second != k) {
          trip.emplace_back(k, it->second, t.rate);
          trip.emplace_back(k, k, -t.rate);
        }
      }
    }
    out_rate.push_back(std::move(per_action));
  }

  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::SparseMatrix<double> q(n, n);
  q.setFromTriplets(trip.begin(), trip.end());
  // Solve Qᵀ π = 0 with the first equation swapped for Σπ = 1.
  Eigen::SparseMatrix<double> a = q.transpose();
  std::vector<Eigen::Triplet<double>> rows;
  for (int c = 0; c < a.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it)
      if (it.row() != 0) rows.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (Eigen::Index c = 0; c < n; ++c) rows.emplace_back(0, static_cast<int>(c), 1.0);
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(rows.begin(), rows.end());
  m.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw std::runtime_error("oracle factorisation failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[0] = 1.0;
  const Eigen::VectorXd pi = lu.solve(rhs);

  Interleaved r;
  r.states = states.size();
  for (Eigen::Index k = 0; k < n; ++k) {
    for (const auto& [a, v] : out_rate[k]) r.throughput[a] += pi[k] * v;
    for (std::size_t i = 0; i < o.people.size(); ++i) {
      const auto* comp = o.people[i].component;
      r.occupancy[comp->name + "." + comp->states[states[k][i]].name] += pi[k];
    }
  }
  for (const auto& a : actions) r.throughput.emplace(a, 0.0);
  return r;
}

}  // namespace testing
