// Flat, index-based form of a validated model shared by all engines.
//
// Every (leaf group, local state) pair gets one slot in a flat occupancy
// vector. Each action is compiled into a small postorder program over the
// part of the cooperation tree that can perform it: leaves sum their
// occupancy-weighted branch rates, sync nodes take the minimum of their
// children and other nodes add them. The same program distributes the
// resulting rate back to individual branches, proportionally to their share
// of each apparent rate.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "slicesim/model.hpp"

namespace slicesim {

struct LeafInfo {
  std::string component;
  std::string initial_state;
  std::int64_t population = 0;
  int offset = 0;  // first flat slot
  std::vector<std::string> state_names;

  int size() const { return static_cast<int>(state_names.size()); }
};

/// One branch of one leaf: the leaf's mass in `from` may perform `action`
/// at `rate` per unit of mass and move to `to`. Slots are flat indices.
struct Enabling {
  int action;
  int leaf;
  int from;
  int to;
  double rate;
};

struct Move {
  int from;
  int to;
  int enabling;
};

class CompiledModel {
 public:
  /// Throws std::invalid_argument if the model does not validate. Groups of
  /// size zero are accepted.
  explicit CompiledModel(const Model& model);

  const std::vector<LeafInfo>& leaves() const { return leaves_; }
  const std::vector<std::string>& actions() const { return action_names_; }
  const std::vector<Enabling>& enablings() const { return enablings_; }
  int slot_count() const { return slots_; }
  int action_count() const { return static_cast<int>(action_names_.size()); }

  int action_index(std::string_view label) const;  // -1 if absent
  int leaf_index(std::string_view component) const;  // -1 if absent
  int slot(std::string_view component, std::string_view state) const;  // -1 if absent
  std::string slot_name(int slot) const;  // "Component.State"
  int leaf_of_slot(int slot) const { return slot_leaf_[slot]; }

  /// Occupancy vector with every group's population in its initial state.
  std::vector<double> initial_occupancy() const;

  /// Global rate of `action` at occupancy `x`.
  double rate(int action, const double* x) const;

  /// Global rate of `action`; adds each branch's share of it to
  /// `flow[enabling index]`. Returns the global rate.
  double distribute(int action, const double* x, double* flow) const;

  /// d x / d t at `x` for the fluid relaxation.
  void derivative(const double* x, double* dx) const;

  /// Chooses, for one occurrence of `action`, the branch taken by each
  /// participating leaf with the apportioning probabilities. Counts must be
  /// integral. Returns false if the action is disabled.
  bool sample(int action, const double* x, std::mt19937_64& rng, std::vector<Move>& moves) const;

  struct JointMove {
    double probability;
    std::vector<Move> moves;
  };
  /// Every joint move of one `action` occurrence with its probability; the
  /// probabilities sum to 1 when the action is enabled.
  std::vector<JointMove> enumerate(int action, const double* x) const;
  /// Same, into `out`; returns the global rate.
  double enumerate(int action, const double* x, std::vector<JointMove>& out) const;

 private:
  enum class OpKind { Leaf, Sync, Choice };
  struct Op {
    OpKind kind;
    int left = -1, right = -1;         // child op indices
    int leaf = -1;                     // Leaf only
    int first = 0, last = 0;           // Leaf only: range into program enablings
  };
  struct Program {
    std::vector<Op> ops;  // postorder; root is the last op
    std::vector<int> enablings;
    int root = -1;
  };

  int compile(const SystemComposition& node, int action, Program& prog) const;
  void evaluate(const Program& prog, const double* x, double* values) const;
  void distribute_rec(const Program& prog, int op, double actual, const double* x, const double* values,
                      double* flow) const;
  bool sample_rec(const Program& prog, int op, const double* x, const double* values, std::mt19937_64& rng,
                  std::vector<Move>& moves) const;

  void enumerate_rec(const Program& prog, int op, const double* x, const double* values,
                     std::vector<JointMove>& out) const;

  std::vector<LeafInfo> leaves_;
  std::vector<int> slot_leaf_;
  std::vector<std::string> action_names_;
  std::vector<Enabling> enablings_;
  std::vector<Program> programs_;
  int slots_ = 0;
};

}  // namespace slicesim
