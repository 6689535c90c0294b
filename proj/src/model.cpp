#include "slicesim/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace slicesim {

std::optional<double> resolve(const Rate& rate, const RateTable& rates) {
  if (!rate.is_named()) return rate.literal_value();
  auto it = rates.find(rate.name());
  if (it == rates.end()) return std::nullopt;
  return it->second;
}

const NamedState* SequentialComponent::find_state(std::string_view state) const {
  for (const auto& s : states)
    if (s.name == state) return &s;
  return nullptr;
}

std::optional<std::size_t> SequentialComponent::state_index(std::string_view state) const {
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i].name == state) return i;
  return std::nullopt;
}

bool SequentialComponent::is_desugared() const {
  for (const auto& s : states)
    for (const auto& b : s.branches)
      if (b.prefixes.size() != 1) return false;
  return true;
}

SequentialComponent desugar(const SequentialComponent& component) {
  SequentialComponent out;
  out.name = component.name;
  for (const auto& state : component.states) {
    NamedState head{state.name, {}};
    std::vector<NamedState> anonymous;
    for (const auto& branch : state.branches) {
      if (branch.prefixes.empty()) continue;
      // The chain a1.a2...ak.S becomes a1 -> S__j, a2 -> S__j+1, ..., ak -> S.
      NamedState* from = &head;
      for (std::size_t i = 0; i < branch.prefixes.size(); ++i) {
        const bool last = i + 1 == branch.prefixes.size();
        std::string target;
        if (last) {
          target = branch.successor;
        } else {
          target = state.name + "__" + std::to_string(anonymous.size() + 1);
        }
        from->branches.push_back(Branch{{branch.prefixes[i]}, target});
        if (!last) {
          anonymous.push_back(NamedState{target, {}});
          from = &anonymous.back();
        }
      }
    }
    out.states.push_back(std::move(head));
    for (auto& a : anonymous) out.states.push_back(std::move(a));
  }
  return out;
}

std::set<ActionLabel> alphabet(const SequentialComponent& component) {
  std::set<ActionLabel> out;
  for (const auto& s : component.states)
    for (const auto& b : s.branches)
      for (const auto& p : b.prefixes) out.insert(p.action);
  return out;
}

std::string component_name_for_state(std::string_view state) {
  auto pos = state.rfind('_');
  if (pos == std::string_view::npos || pos == 0 || pos + 1 == state.size()) return std::string(state);
  for (std::size_t i = pos + 1; i < state.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(state[i]))) return std::string(state);
  return std::string(state.substr(0, pos));
}

// ---------------------------------------------------------------------------
// SystemComposition

struct SystemComposition::Node {
  std::optional<PopulationGroup> group;
  SystemComposition left;
  SystemComposition right;
  CooperationSet sync;
};

SystemComposition SystemComposition::leaf(PopulationGroup group) {
  SystemComposition s;
  auto node = std::make_shared<Node>();
  node->group = std::move(group);
  s.node_ = std::move(node);
  return s;
}

SystemComposition SystemComposition::cooperate(SystemComposition left, CooperationSet sync,
                                               SystemComposition right) {
  if (left.empty() || right.empty()) throw std::invalid_argument("cooperation needs two operands");
  SystemComposition s;
  auto node = std::make_shared<Node>();
  node->left = std::move(left);
  node->right = std::move(right);
  node->sync = std::move(sync);
  s.node_ = std::move(node);
  return s;
}

bool SystemComposition::is_leaf() const { return node_ && node_->group.has_value(); }
const PopulationGroup& SystemComposition::group() const { return *node_->group; }
const SystemComposition& SystemComposition::left() const { return node_->left; }
const SystemComposition& SystemComposition::right() const { return node_->right; }
const CooperationSet& SystemComposition::sync() const { return node_->sync; }

std::vector<PopulationGroup> SystemComposition::leaves() const {
  std::vector<PopulationGroup> out;
  if (empty()) return out;
  if (is_leaf()) {
    out.push_back(group());
    return out;
  }
  out = left().leaves();
  auto r = right().leaves();
  out.insert(out.end(), r.begin(), r.end());
  return out;
}

SystemComposition SystemComposition::without(std::string_view component) const {
  if (empty()) return {};
  if (is_leaf()) return group().component == component ? SystemComposition{} : *this;
  auto l = left().without(component);
  auto r = right().without(component);
  if (l.empty()) return r;
  if (r.empty()) return l;
  return cooperate(std::move(l), sync(), std::move(r));
}

bool operator==(const SystemComposition& a, const SystemComposition& b) {
  if (a.empty() || b.empty()) return a.empty() && b.empty();
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return a.group() == b.group();
  return a.sync().actions == b.sync().actions && a.left() == b.left() && a.right() == b.right();
}

const SequentialComponent* Model::find_component(std::string_view name) const {
  for (const auto& c : components)
    if (c.name == name) return &c;
  return nullptr;
}

bool operator==(const Model& a, const Model& b) {
  return a.components == b.components && a.system == b.system && a.rates == b.rates;
}

// ---------------------------------------------------------------------------
// Validation

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::UnresolvedRate: return "unresolved rate";
    case IssueKind::OrphanSuccessor: return "orphan successor";
    case IssueKind::NonSharedSyncAction: return "non-shared sync action";
    case IssueKind::NonPositiveRate: return "zero/negative rate";
    case IssueKind::DuplicateComponent: return "duplicate component";
    case IssueKind::DuplicateState: return "duplicate state";
    case IssueKind::EmptyComponent: return "empty component";
    case IssueKind::DeadlockedState: return "deadlocked state";
    case IssueKind::BadPopulation: return "bad population";
    case IssueKind::UnknownComponent: return "unknown component";
    case IssueKind::UnknownInitialState: return "unknown initial state";
    case IssueKind::ComponentReused: return "component reused";
    case IssueKind::EmptySystem: return "empty system";
  }
  return "?";
}

bool ValidationReport::has(IssueKind kind) const {
  return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.kind == kind; });
}

std::string ValidationReport::describe() const {
  std::ostringstream os;
  for (const auto& i : issues) os << i.location << ": " << to_string(i.kind) << ": " << i.detail << '\n';
  return os.str();
}

namespace {

class Validator {
 public:
  Validator(const std::vector<SequentialComponent>& components, const RateTable& rates)
      : rates_(rates) {
    for (const auto& c : components) desugared_.push_back(desugar(c));
  }

  void check_rates() {
    for (const auto& [name, value] : rates_) {
      if (!(value > 0.0) || !std::isfinite(value))
        add("rate " + name, IssueKind::NonPositiveRate, name + " = " + std::to_string(value));
    }
  }

  void check_components() {
    std::map<std::string, int> seen_component;
    std::map<std::string, std::multiset<std::string>> state_owners;
    for (const auto& c : desugared_) {
      if (++seen_component[c.name] == 2) add("component " + c.name, IssueKind::DuplicateComponent, c.name);
      if (c.states.empty()) add("component " + c.name, IssueKind::EmptyComponent, "no states");
      for (const auto& s : c.states) {
        state_owners[s.name].insert(c.name);
        if (s.branches.empty()) add("state " + s.name, IssueKind::DeadlockedState, "no outgoing branch");
        for (const auto& b : s.branches) {
          const auto& p = b.head();
          std::string where = "state " + s.name + " action " + p.action;
          auto value = resolve(p.rate, rates_);
          if (!value) {
            add(where, IssueKind::UnresolvedRate, "unknown rate " + p.rate.name());
          } else if (!(*value > 0.0) || !std::isfinite(*value)) {
            if (!p.rate.is_named())
              add(where, IssueKind::NonPositiveRate, "literal rate " + std::to_string(*value));
          }
          if (p.action.empty()) add("state " + s.name, IssueKind::NonSharedSyncAction, "empty action label");
          if (!c.find_state(b.successor))
            add(where, IssueKind::OrphanSuccessor, "successor " + b.successor + " not in " + c.name);
        }
      }
    }
    for (const auto& [state, owners] : state_owners) {
      if (owners.size() < 2) continue;
      std::string detail = "defined in";
      for (const auto& o : owners) detail += " " + o;
      add("state " + state, IssueKind::DuplicateState, detail);
    }
  }

  void check_system(const SystemComposition& system) {
    if (system.empty()) {
      add("system", IssueKind::EmptySystem, "no population groups");
      return;
    }
    std::map<std::string, int> uses;
    for (const auto& g : system.leaves()) {
      std::string where = "group " + g.component;
      if (++uses[g.component] == 2) add(where, IssueKind::ComponentReused, "component appears in more than one leaf");
      if (g.count < 1) add(where, IssueKind::BadPopulation, "count " + std::to_string(g.count));
      const auto* c = find(g.component);
      if (!c) {
        add(where, IssueKind::UnknownComponent, g.component);
      } else if (!c->find_state(g.initial_state)) {
        add(where, IssueKind::UnknownInitialState, g.initial_state);
      }
    }
    subtree_alphabet(system);
  }

  ValidationReport finish() {
    std::sort(report_.issues.begin(), report_.issues.end());
    report_.issues.erase(std::unique(report_.issues.begin(), report_.issues.end()), report_.issues.end());
    return std::move(report_);
  }

 private:
  const SequentialComponent* find(std::string_view name) const {
    for (const auto& c : desugared_)
      if (c.name == name) return &c;
    return nullptr;
  }

  std::set<ActionLabel> subtree_alphabet(const SystemComposition& node) {
    if (node.is_leaf()) {
      const auto* c = find(node.group().component);
      return c ? alphabet(*c) : std::set<ActionLabel>{};
    }
    auto l = subtree_alphabet(node.left());
    auto r = subtree_alphabet(node.right());
    for (const auto& a : node.sync().actions) {
      const bool in_l = l.count(a) != 0, in_r = r.count(a) != 0;
      if (!in_l || !in_r) {
        std::string label = node.sync().label.empty() ? std::string("<...>") : node.sync().label;
        add("cooperation " + label, IssueKind::NonSharedSyncAction,
            a + (in_l ? " missing from right operand" : " missing from left operand"));
      }
    }
    l.insert(r.begin(), r.end());
    return l;
  }

  void add(std::string location, IssueKind kind, std::string detail) {
    report_.issues.push_back({std::move(location), kind, std::move(detail)});
  }

  const RateTable& rates_;
  std::vector<SequentialComponent> desugared_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_model(const std::vector<SequentialComponent>& components,
                                const SystemComposition& system, const RateTable& rates) {
  Validator v(components, rates);
  v.check_rates();
  v.check_components();
  v.check_system(system);
  return v.finish();
}

ValidationReport validate_model(const Model& model) {
  return validate_model(model.components, model.system, model.rates);
}

}  // namespace slicesim
