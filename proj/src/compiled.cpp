#include "slicesim/compiled.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace slicesim {

namespace {

std::set<ActionLabel> subtree_alphabet(const SystemComposition& node,
                                       const std::map<std::string, std::set<ActionLabel>>& alpha) {
  if (node.is_leaf()) return alpha.at(node.group().component);
  auto l = subtree_alphabet(node.left(), alpha);
  auto r = subtree_alphabet(node.right(), alpha);
  l.insert(r.begin(), r.end());
  return l;
}

struct Scratch {
  std::vector<double> values;
  std::vector<double> flow;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

CompiledModel::CompiledModel(const Model& model) {
  auto report = validate_model(model);
  // Empty groups are fine to evaluate (nothing happens in them); only other
  // problems stop compilation.
  std::erase_if(report.issues, [&](const ValidationIssue& i) {
    return i.kind == IssueKind::BadPopulation && i.detail == "count 0";
  });
  if (!report.ok()) throw std::invalid_argument("model does not validate:\n" + report.describe());

  std::map<std::string, SequentialComponent> comps;
  std::map<std::string, std::set<ActionLabel>> alpha;
  for (const auto& c : model.components) {
    comps[c.name] = desugar(c);
    alpha[c.name] = alphabet(comps[c.name]);
  }
  auto all_actions = subtree_alphabet(model.system, alpha);
  action_names_.assign(all_actions.begin(), all_actions.end());

  for (const auto& g : model.system.leaves()) {
    const auto& c = comps.at(g.component);
    LeafInfo info;
    info.component = g.component;
    info.initial_state = g.initial_state;
    info.population = g.count;
    info.offset = slots_;
    for (const auto& s : c.states) info.state_names.push_back(s.name);
    const int leaf = static_cast<int>(leaves_.size());
    for (int s = 0; s < info.size(); ++s) {
      slot_leaf_.push_back(leaf);
      for (const auto& b : c.states[s].branches) {
        const auto& p = b.head();
        Enabling e;
        e.action = action_index(p.action);
        e.leaf = leaf;
        e.from = info.offset + s;
        e.to = info.offset + static_cast<int>(*c.state_index(b.successor));
        e.rate = *resolve(p.rate, model.rates);
        enablings_.push_back(e);
      }
    }
    slots_ += info.size();
    leaves_.push_back(std::move(info));
  }

  programs_.resize(action_names_.size());
  for (int a = 0; a < action_count(); ++a) {
    Program& prog = programs_[a];
    prog.root = compile(model.system, a, prog);
  }
}

int CompiledModel::compile(const SystemComposition& node, int action, Program& prog) const {
  if (node.is_leaf()) {
    const int leaf = leaf_index(node.group().component);
    Op op{OpKind::Leaf};
    op.leaf = leaf;
    op.first = static_cast<int>(prog.enablings.size());
    for (int e = 0; e < static_cast<int>(enablings_.size()); ++e)
      if (enablings_[e].leaf == leaf && enablings_[e].action == action) prog.enablings.push_back(e);
    op.last = static_cast<int>(prog.enablings.size());
    if (op.first == op.last) return -1;
    prog.ops.push_back(op);
    return static_cast<int>(prog.ops.size()) - 1;
  }
  const int l = compile(node.left(), action, prog);
  const int r = compile(node.right(), action, prog);
  const bool synced = node.sync().actions.count(action_names_[action]) != 0;
  if (synced) {
    // A synchronised action that one side cannot perform is blocked here.
    if (l < 0 || r < 0) return -1;
    Op op{OpKind::Sync};
    op.left = l;
    op.right = r;
    prog.ops.push_back(op);
    return static_cast<int>(prog.ops.size()) - 1;
  }
  if (l < 0) return r;
  if (r < 0) return l;
  Op op{OpKind::Choice};
  op.left = l;
  op.right = r;
  prog.ops.push_back(op);
  return static_cast<int>(prog.ops.size()) - 1;
}

int CompiledModel::action_index(std::string_view label) const {
  auto it = std::lower_bound(action_names_.begin(), action_names_.end(), label);
  if (it == action_names_.end() || *it != label) return -1;
  return static_cast<int>(it - action_names_.begin());
}

int CompiledModel::leaf_index(std::string_view component) const {
  for (int i = 0; i < static_cast<int>(leaves_.size()); ++i)
    if (leaves_[i].component == component) return i;
  return -1;
}

int CompiledModel::slot(std::string_view component, std::string_view state) const {
  const int leaf = leaf_index(component);
  if (leaf < 0) return -1;
  const auto& names = leaves_[leaf].state_names;
  for (int s = 0; s < static_cast<int>(names.size()); ++s)
    if (names[s] == state) return leaves_[leaf].offset + s;
  return -1;
}

std::string CompiledModel::slot_name(int slot) const {
  const auto& leaf = leaves_[slot_leaf_[slot]];
  return leaf.component + "." + leaf.state_names[slot - leaf.offset];
}

std::vector<double> CompiledModel::initial_occupancy() const {
  std::vector<double> x(slots_, 0.0);
  for (const auto& leaf : leaves_) {
    const int s = slot(leaf.component, leaf.initial_state);
    x[s] = static_cast<double>(leaf.population);
  }
  return x;
}

void CompiledModel::evaluate(const Program& prog, const double* x, double* values) const {
  for (std::size_t i = 0; i < prog.ops.size(); ++i) {
    const Op& op = prog.ops[i];
    switch (op.kind) {
      case OpKind::Leaf: {
        double sum = 0.0;
        for (int k = op.first; k < op.last; ++k) {
          const Enabling& e = enablings_[prog.enablings[k]];
          sum += x[e.from] * e.rate;
        }
        values[i] = sum;
        break;
      }
      case OpKind::Sync:
        values[i] = std::min(values[op.left], values[op.right]);
        break;
      case OpKind::Choice:
        values[i] = values[op.left] + values[op.right];
        break;
    }
  }
}

double CompiledModel::rate(int action, const double* x) const {
  const Program& prog = programs_[action];
  if (prog.root < 0) return 0.0;
  auto& values = scratch().values;
  values.resize(prog.ops.size());
  evaluate(prog, x, values.data());
  return values[prog.root];
}

void CompiledModel::distribute_rec(const Program& prog, int op_index, double actual, const double* x,
                                   const double* values, double* flow) const {
  const Op& op = prog.ops[op_index];
  switch (op.kind) {
    case OpKind::Leaf: {
      const double apparent = values[op_index];
      if (!(apparent > 0.0)) return;
      const double scale = actual / apparent;
      for (int k = op.first; k < op.last; ++k) {
        const int idx = prog.enablings[k];
        const Enabling& e = enablings_[idx];
        flow[idx] += x[e.from] * e.rate * scale;
      }
      return;
    }
    case OpKind::Sync:
      distribute_rec(prog, op.left, actual, x, values, flow);
      distribute_rec(prog, op.right, actual, x, values, flow);
      return;
    case OpKind::Choice: {
      const double l = values[op.left], r = values[op.right];
      const double total = l + r;
      if (!(total > 0.0)) return;
      if (l > 0.0) distribute_rec(prog, op.left, actual * (l / total), x, values, flow);
      if (r > 0.0) distribute_rec(prog, op.right, actual * (r / total), x, values, flow);
      return;
    }
  }
}

double CompiledModel::distribute(int action, const double* x, double* flow) const {
  const Program& prog = programs_[action];
  if (prog.root < 0) return 0.0;
  auto& values = scratch().values;
  values.resize(prog.ops.size());
  evaluate(prog, x, values.data());
  const double total = values[prog.root];
  if (total > 0.0) distribute_rec(prog, prog.root, total, x, values.data(), flow);
  return total;
}

void CompiledModel::derivative(const double* x, double* dx) const {
  auto& flow = scratch().flow;
  flow.assign(enablings_.size(), 0.0);
  for (int a = 0; a < action_count(); ++a) distribute(a, x, flow.data());
  std::fill(dx, dx + slots_, 0.0);
  for (std::size_t i = 0; i < enablings_.size(); ++i) {
    const Enabling& e = enablings_[i];
    dx[e.from] -= flow[i];
    dx[e.to] += flow[i];
  }
}

bool CompiledModel::sample_rec(const Program& prog, int op_index, const double* x, const double* values,
                               std::mt19937_64& rng, std::vector<Move>& moves) const {
  const Op& op = prog.ops[op_index];
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (op.kind) {
    case OpKind::Leaf: {
      const double apparent = values[op_index];
      if (!(apparent > 0.0)) return false;
      double pick = u(rng) * apparent;
      int chosen = -1;
      for (int k = op.first; k < op.last; ++k) {
        const Enabling& e = enablings_[prog.enablings[k]];
        const double w = x[e.from] * e.rate;
        if (w <= 0.0) continue;
        chosen = prog.enablings[k];
        if (pick < w) break;
        pick -= w;
      }
      if (chosen < 0) return false;
      moves.push_back({enablings_[chosen].from, enablings_[chosen].to, chosen});
      return true;
    }
    case OpKind::Sync:
      return sample_rec(prog, op.left, x, values, rng, moves) && sample_rec(prog, op.right, x, values, rng, moves);
    case OpKind::Choice: {
      const double l = values[op.left], r = values[op.right];
      if (!(l + r > 0.0)) return false;
      const bool go_left = r <= 0.0 || (l > 0.0 && u(rng) * (l + r) < l);
      return sample_rec(prog, go_left ? op.left : op.right, x, values, rng, moves);
    }
  }
  return false;
}

bool CompiledModel::sample(int action, const double* x, std::mt19937_64& rng, std::vector<Move>& moves) const {
  moves.clear();
  const Program& prog = programs_[action];
  if (prog.root < 0) return false;
  std::vector<double> values(prog.ops.size());
  evaluate(prog, x, values.data());
  if (!(values[prog.root] > 0.0)) return false;
  return sample_rec(prog, prog.root, x, values.data(), rng, moves);
}

void CompiledModel::enumerate_rec(const Program& prog, int op_index, const double* x, const double* values,
                                  std::vector<JointMove>& out) const {
  const Op& op = prog.ops[op_index];
  switch (op.kind) {
    case OpKind::Leaf: {
      const double apparent = values[op_index];
      if (!(apparent > 0.0)) return;
      for (int k = op.first; k < op.last; ++k) {
        const int idx = prog.enablings[k];
        const Enabling& e = enablings_[idx];
        const double w = x[e.from] * e.rate;
        if (w > 0.0) out.push_back({w / apparent, {{e.from, e.to, idx}}});
      }
      return;
    }
    case OpKind::Sync: {
      std::vector<JointMove> l, r;
      enumerate_rec(prog, op.left, x, values, l);
      enumerate_rec(prog, op.right, x, values, r);
      for (const auto& a : l)
        for (const auto& b : r) {
          JointMove m{a.probability * b.probability, a.moves};
          m.moves.insert(m.moves.end(), b.moves.begin(), b.moves.end());
          out.push_back(std::move(m));
        }
      return;
    }
    case OpKind::Choice: {
      const double l = values[op.left], r = values[op.right];
      if (!(l + r > 0.0)) return;
      for (auto [child, weight] : {std::pair{op.left, l}, std::pair{op.right, r}}) {
        if (!(weight > 0.0)) continue;
        std::vector<JointMove> part;
        enumerate_rec(prog, child, x, values, part);
        for (auto& m : part) {
          m.probability *= weight / (l + r);
          out.push_back(std::move(m));
        }
      }
      return;
    }
  }
}

std::vector<CompiledModel::JointMove> CompiledModel::enumerate(int action, const double* x) const {
  std::vector<JointMove> out;
  enumerate(action, x, out);
  return out;
}

double CompiledModel::enumerate(int action, const double* x, std::vector<JointMove>& out) const {
  out.clear();
  const Program& prog = programs_[action];
  if (prog.root < 0) return 0.0;
  auto& values = scratch().values;
  values.resize(prog.ops.size());
  evaluate(prog, x, values.data());
  const double total = values[prog.root];
  if (!(total > 0.0)) return 0.0;
  enumerate_rec(prog, prog.root, x, values.data(), out);
  return total;
}

}  // namespace slicesim
