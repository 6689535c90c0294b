// Process-algebra data model: sequential components, rates, cooperation
// trees over population groups, and well-formedness checks.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace slicesim {

using ActionLabel = std::string;

/// Rate constants in actions per second, keyed by name.
using RateTable = std::map<std::string, double>;

/// A rate is either a literal value or a reference into a RateTable.
struct Rate {
  std::variant<double, std::string> value;

  static Rate literal(double v) { return Rate{v}; }
  static Rate named(std::string name) { return Rate{std::move(name)}; }

  bool is_named() const { return std::holds_alternative<std::string>(value); }
  const std::string& name() const { return std::get<std::string>(value); }
  double literal_value() const { return std::get<double>(value); }

  friend bool operator==(const Rate&, const Rate&) = default;
};

/// Resolved value, or nullopt when a named rate is missing from the table.
std::optional<double> resolve(const Rate& rate, const RateTable& rates);

struct Prefix {
  ActionLabel action;
  Rate rate;
  friend bool operator==(const Prefix&, const Prefix&) = default;
};

/// One summand of a choice: `(a,r1).(b,r2). ... .Successor`.
struct Branch {
  std::vector<Prefix> prefixes;
  std::string successor;

  const Prefix& head() const { return prefixes.front(); }
  friend bool operator==(const Branch&, const Branch&) = default;
};

struct NamedState {
  std::string name;
  std::vector<Branch> branches;
  friend bool operator==(const NamedState&, const NamedState&) = default;
};

/// A cyclic state machine. States are ordered; the first is the default
/// initial state.
struct SequentialComponent {
  std::string name;
  std::vector<NamedState> states;

  const NamedState* find_state(std::string_view state) const;
  std::optional<std::size_t> state_index(std::string_view state) const;
  /// True when every branch is a single prefix.
  bool is_desugared() const;

  friend bool operator==(const SequentialComponent&, const SequentialComponent&) = default;
};

/// Rewrites chained prefixes into single-prefix branches. The intermediate
/// state created for the k-th chain step of state S is named `S__k`, and is
/// placed directly after S.
SequentialComponent desugar(const SequentialComponent& component);

std::set<ActionLabel> alphabet(const SequentialComponent& component);

/// Component name derived from the first state's name: a trailing `_<digits>`
/// is removed ("Ranc1_1" -> "Ranc1"); names without that suffix are kept.
std::string component_name_for_state(std::string_view state);

struct CooperationSet {
  std::string label;  // diagnostic only; not part of structural equality
  std::set<ActionLabel> actions;

  static CooperationSet empty() { return {}; }
};

struct PopulationGroup {
  std::string component;
  std::string initial_state;
  std::int64_t count = 1;
  friend bool operator==(const PopulationGroup&, const PopulationGroup&) = default;
};

/// Immutable binary cooperation tree. Leaves are population groups; inner
/// nodes synchronise on a CooperationSet. Copies share structure.
class SystemComposition {
 public:
  SystemComposition() = default;

  static SystemComposition leaf(PopulationGroup group);
  static SystemComposition cooperate(SystemComposition left, CooperationSet sync,
                                     SystemComposition right);

  bool empty() const { return node_ == nullptr; }
  bool is_leaf() const;
  const PopulationGroup& group() const;
  const SystemComposition& left() const;
  const SystemComposition& right() const;
  const CooperationSet& sync() const;

  /// Leaves in left-to-right order.
  std::vector<PopulationGroup> leaves() const;

  /// Copy with the leaf of `component` removed; its parent node collapses
  /// into the sibling. Returns an empty composition if nothing remains.
  SystemComposition without(std::string_view component) const;

  /// Copy with every leaf's count replaced by `count_for(group)`.
  template <class Fn>
  SystemComposition with_counts(Fn&& count_for) const {
    if (empty()) return {};
    if (is_leaf()) {
      PopulationGroup g = group();
      g.count = count_for(g);
      return leaf(std::move(g));
    }
    return cooperate(left().with_counts(count_for), sync(), right().with_counts(count_for));
  }

  friend bool operator==(const SystemComposition& a, const SystemComposition& b);

 private:
  struct Node;
  std::shared_ptr<const Node> node_;
};

struct Model {
  std::vector<SequentialComponent> components;
  SystemComposition system;
  RateTable rates;

  const SequentialComponent* find_component(std::string_view name) const;

  /// Structural equality: components, composition (set labels ignored) and
  /// rate table.
  friend bool operator==(const Model&, const Model&);
};

enum class IssueKind {
  UnresolvedRate,
  OrphanSuccessor,
  NonSharedSyncAction,
  NonPositiveRate,
  DuplicateComponent,
  DuplicateState,
  EmptyComponent,
  DeadlockedState,
  BadPopulation,
  UnknownComponent,
  UnknownInitialState,
  ComponentReused,
  EmptySystem,
};

std::string_view to_string(IssueKind kind);

struct ValidationIssue {
  std::string location;
  IssueKind kind;
  std::string detail;

  friend auto operator<=>(const ValidationIssue&, const ValidationIssue&) = default;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  bool has(IssueKind kind) const;
  std::string describe() const;
};

/// Checks every well-formedness invariant. Issues are sorted, so the result
/// does not depend on the order of `components`.
ValidationReport validate_model(const std::vector<SequentialComponent>& components,
                                const SystemComposition& system, const RateTable& rates);
ValidationReport validate_model(const Model& model);

}  // namespace slicesim
