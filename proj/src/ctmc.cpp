#include "slicesim/ctmc.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

namespace slicesim {

StateSpaceExceeded::StateSpaceExceeded(std::size_t cap, std::size_t reached)
    : std::runtime_error("state space exceeds cap of " + std::to_string(cap) + " (reached " +
                         std::to_string(reached) + ")"),
      cap_(cap),
      reached_(reached) {}

Reducible::Reducible(std::size_t terminal_classes, std::vector<std::vector<std::size_t>> classes)
    : std::runtime_error("chain is reducible: " + std::to_string(terminal_classes) + " closed classes"),
      classes_(std::move(classes)) {}

StateList::StateList(int width, std::int64_t max_count) : width_(width) {
  while (bytes_ < 8 && (max_count >> (8 * bytes_)) != 0) bytes_ *= 2;
}

// Counts are stored big-endian so that memcmp on records orders states
// lexicographically.
std::int64_t StateList::count(std::size_t state, int slot) const {
  const std::uint8_t* p = record(state) + static_cast<std::size_t>(slot) * bytes_;
  std::uint64_t v = 0;
  for (int b = 0; b < bytes_; ++b) v = (v << 8) | p[b];
  return static_cast<std::int64_t>(v);
}

std::vector<std::int64_t> StateList::operator[](std::size_t state) const {
  std::vector<std::int64_t> out(width_);
  for (int k = 0; k < width_; ++k) out[k] = count(state, k);
  return out;
}

void StateList::encode(const std::int64_t* occupancy, std::uint8_t* out) const {
  if (bytes_ == 1) {
    for (int k = 0; k < width_; ++k) out[k] = static_cast<std::uint8_t>(occupancy[k]);
    return;
  }
  for (int k = 0; k < width_; ++k) {
    auto v = static_cast<std::uint64_t>(occupancy[k]);
    for (int b = bytes_ - 1; b >= 0; --b, v >>= 8) out[b] = static_cast<std::uint8_t>(v);
    out += bytes_;
  }
}

void StateList::push_back(const std::int64_t* occupancy) {
  const std::size_t at = data_.size();
  data_.resize(at + record_size());
  encode(occupancy, data_.data() + at);
}

void StateList::push_record(const std::uint8_t* record) { data_.insert(data_.end(), record, record + record_size()); }

namespace {

// Open-addressing index over a StateList.
class StateTable {
 public:
  StateTable(int width, std::int64_t max_count) : list_(width, max_count), index_(1024, kEmpty), probe_(list_.record_size()) {}

  std::size_t size() const { return list_.size(); }
  const StateList& list() const { return list_; }
  StateList take() { return std::move(list_); }

  std::pair<std::size_t, bool> insert(const std::int64_t* s) {
    if ((size() + 1) * 2 > index_.size()) grow();
    list_.encode(s, probe_.data());
    const std::size_t bytes = probe_.size();
    std::size_t h = hash(probe_.data()) & (index_.size() - 1);
    for (;;) {
      const std::uint32_t slot = index_[h];
      if (slot == kEmpty) break;
      if (std::memcmp(probe_.data(), list_.record(slot), bytes) == 0) return {slot, false};
      h = (h + 1) & (index_.size() - 1);
    }
    if (size() >= kEmpty) throw std::length_error("state table full");
    index_[h] = static_cast<std::uint32_t>(size());
    list_.push_record(probe_.data());
    return {size() - 1, true};
  }

 private:
  static constexpr std::uint32_t kEmpty = 0xffffffffu;

  std::size_t hash(const std::uint8_t* r) const {
    std::uint64_t h = 1469598103934665603ull;
    std::size_t i = 0;
    for (; i + 8 <= probe_.size(); i += 8) {
      std::uint64_t w;
      std::memcpy(&w, r + i, 8);
      h = (h ^ w) * 0x9e3779b97f4a7c15ull;
      h ^= h >> 32;
    }
    for (; i < probe_.size(); ++i) h = (h ^ r[i]) * 1099511628211ull;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }

  void grow() {
    std::vector<std::uint32_t> bigger(index_.size() * 2, kEmpty);
    index_.swap(bigger);
    for (std::size_t i = 0; i < size(); ++i) {
      std::size_t h = hash(list_.record(i)) & (index_.size() - 1);
      while (index_[h] != kEmpty) h = (h + 1) & (index_.size() - 1);
      index_[h] = static_cast<std::uint32_t>(i);
    }
  }

  StateList list_;
  std::vector<std::uint32_t> index_;
  std::vector<std::uint8_t> probe_;
};

// Strongly connected components (iterative Tarjan). Returns the component id
// of every vertex; ids are in reverse topological order.
std::vector<int> scc(const Generator& q, int& count) {
  const int n = static_cast<int>(q.rows());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
  std::vector<std::pair<int, Generator::InnerIterator>> call;
  std::vector<char> on_stack(n, 0);
  int next = 0;
  count = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call.emplace_back(root, Generator::InnerIterator(q, root));
    index[root] = low[root] = next++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, it] = call.back();
      bool descended = false;
      for (; it; ++it) {
        const int w = static_cast<int>(it.col());
        if (w == v || it.value() <= 0.0) continue;
        if (index[w] < 0) {
          index[w] = low[w] = next++;
          stack.push_back(w);
          on_stack[w] = 1;
          ++it;
          call.emplace_back(w, Generator::InnerIterator(q, w));
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      const int done = v;
      if (low[done] == index[done]) {
        for (;;) {
          const int w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
          if (w == done) break;
        }
        ++count;
      }
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }
  return comp;
}

}  // namespace

double global_action_rate(const Model& model, const PopulationState& state, const ActionLabel& action) {
  CompiledModel cm(model);
  const int a = cm.action_index(action);
  if (a < 0) return 0.0;
  std::vector<double> x(cm.slot_count(), 0.0);
  for (const auto& [key, count] : state) {
    const int s = cm.slot(key.first, key.second);
    if (s >= 0) x[s] = static_cast<double>(count);
  }
  return cm.rate(a, x.data());
}

double state_count_bound(const CompiledModel& model) {
  double log_total = 0.0;
  for (const auto& leaf : model.leaves()) {
    const double n = static_cast<double>(leaf.population), k = leaf.size();
    log_total += std::lgamma(n + k) - std::lgamma(n + 1) - std::lgamma(k);
  }
  return std::exp(log_total);
}

Ctmc build_ctmc(std::shared_ptr<const CompiledModel> model, std::size_t cap) {
  const CompiledModel& cm = *model;
  const int width = cm.slot_count();
  std::int64_t max_count = 0;
  for (const auto& leaf : cm.leaves()) max_count = std::max(max_count, leaf.population);
  StateTable table(width, max_count);
  std::vector<std::int64_t> s(width), y(width);
  {
    auto x0 = cm.initial_occupancy();
    for (int i = 0; i < width; ++i) s[i] = static_cast<std::int64_t>(x0[i]);
  }
  table.insert(s.data());

  // Off-diagonal rows in discovery order.
  std::vector<std::size_t> row_start{0};
  std::vector<int> cols;
  std::vector<double> vals;
  std::vector<std::pair<int, double>> row;
  std::vector<double> x(width);
  std::vector<CompiledModel::JointMove> joint;
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (int k = 0; k < width; ++k) {
      s[k] = table.list().count(i, k);
      x[k] = static_cast<double>(s[k]);
    }
    row.clear();
    for (int a = 0; a < cm.action_count(); ++a) {
      const double total = cm.enumerate(a, x.data(), joint);
      if (!(total > 0.0)) continue;
      for (const auto& jm : joint) {
        y = s;
        for (const auto& m : jm.moves) {
          --y[m.from];
          ++y[m.to];
        }
        if (y == s) continue;
        auto [j, inserted] = table.insert(y.data());
        if (inserted && table.size() > cap) throw StateSpaceExceeded(cap, table.size());
        row.emplace_back(static_cast<int>(j), total * jm.probability);
      }
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k > 0 && row[k].first == row[k - 1].first) {
        vals.back() += row[k].second;
      } else {
        cols.push_back(row[k].first);
        vals.push_back(row[k].second);
      }
    }
    row_start.push_back(cols.size());
  }

  const std::size_t n = table.size();
  StateList found = table.take();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bytes = found.record_size();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    // Descending, so the all-initial state comes first.
    return std::memcmp(found.record(a), found.record(b), bytes) > 0;
  });
  std::vector<int> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = static_cast<int>(r);

  Ctmc out;
  out.model = std::move(model);
  out.states = StateList(width, max_count);
  out.states.reserve(n);
  for (std::size_t r = 0; r < n; ++r) out.states.push_record(found.record(order[r]));
  found = StateList();
  out.discovery = std::move(rank);

  const auto dim = static_cast<Eigen::Index>(n);
  out.generator.resize(dim, dim);
  out.generator.resizeNonZeros(static_cast<Eigen::Index>(cols.size() + n));
  auto* outer = out.generator.outerIndexPtr();
  auto* inner = out.generator.innerIndexPtr();
  auto* value = out.generator.valuePtr();
  std::size_t at = 0;
  outer[0] = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t old = static_cast<std::size_t>(order[r]);
    row.clear();
    double sum = 0.0;
    for (std::size_t p = row_start[old]; p < row_start[old + 1]; ++p) {
      row.emplace_back(out.discovery[cols[p]], vals[p]);
      sum += vals[p];
    }
    row.emplace_back(static_cast<int>(r), -sum);
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [c, v] : row) {
      inner[at] = c;
      value[at] = v;
      ++at;
    }
    outer[r + 1] = static_cast<int>(at);
  }
  return out;
}

namespace {

Eigen::VectorXd solve_direct(const Generator& q, const std::vector<int>& local, const std::vector<Eigen::Index>& members) {
  const int m = static_cast<int>(members.size());
  // Q_Cᵀ π = 0 with the last equation replaced by Σπ = 1.
  std::vector<Eigen::Triplet<double>> entries;
  for (int r = 0; r < m; ++r)
    for (Generator::InnerIterator it(q, members[r]); it; ++it) {
      const int c = local[it.col()];
      if (c < 0 || c == m - 1) continue;
      entries.emplace_back(c, r, it.value());
    }
  for (int r = 0; r < m; ++r) entries.emplace_back(m - 1, r, 1.0);
  Eigen::SparseMatrix<double> a(m, m);
  a.setFromTriplets(entries.begin(), entries.end());
  a.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw std::runtime_error("stationary solve failed: " + lu.lastErrorMessage());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b[m - 1] = 1.0;
  Eigen::VectorXd x = lu.solve(b);
  for (int refine = 0; refine < 2; ++refine) {
    Eigen::VectorXd r = b - a * x;
    x += lu.solve(r);
  }
  return x;
}

// Gauss-Seidel on the balance equations, one column of Q per update.
Eigen::VectorXd solve_gauss_seidel(const Generator& q, const std::vector<int>& local,
                                   const std::vector<Eigen::Index>& members, const StationaryOptions& o) {
  const Eigen::SparseMatrix<double, Eigen::ColMajor> cols = q;
  const Eigen::Index n = q.rows();
  std::vector<Eigen::Index> sweep;
  sweep.reserve(members.size());
  if (o.order) {
    for (int j : *o.order)
      if (local[j] >= 0) sweep.push_back(j);
  } else {
    sweep = members;
  }

  Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
  for (auto j : members) pi[j] = 1.0 / static_cast<double>(members.size());
  // Plain sweeps can lock into a cycle on some orderings; when the residual
  // stops falling, relax the update.
  double omega = 1.0, residual = std::numeric_limits<double>::infinity(), mark = residual;
  std::size_t mark_sweep = 0;
  for (std::size_t it = 1; it <= o.max_sweeps; ++it) {
    for (auto j : sweep) {
      double in = 0.0, diag = 0.0;
      for (Eigen::SparseMatrix<double>::InnerIterator e(cols, j); e; ++e) {
        if (e.row() == j)
          diag = e.value();
        else
          in += pi[e.row()] * e.value();
      }
      pi[j] = (1.0 - omega) * pi[j] + omega * in / -diag;
    }
    pi /= pi.sum();
    if (it % 5 == 0 || it == o.max_sweeps) {
      residual = 0.0;
      for (auto j : members) {
        double r = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator e(cols, j); e; ++e) r += pi[e.row()] * e.value();
        residual = std::max(residual, std::abs(r));
      }
      if (residual <= o.tolerance) break;
      if (residual < 0.5 * mark) {
        mark = residual;
        mark_sweep = it;
      } else if (it - mark_sweep >= 100) {
        omega = std::max(0.5, omega - 0.1);
        mark = residual;
        mark_sweep = it;
      }
    }
  }
  if (!(residual <= o.tolerance))
    throw std::runtime_error("Gauss-Seidel stopped at residual " + std::to_string(residual));
  Eigen::VectorXd x(members.size());
  for (std::size_t r = 0; r < members.size(); ++r) x[static_cast<Eigen::Index>(r)] = pi[members[r]];
  return x;
}

}  // namespace

Eigen::VectorXd stationary(const Generator& q, const StationaryOptions& options) {
  const Eigen::Index n = q.rows();
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
  if (n == 0) return pi;

  int count = 0;
  auto comp = scc(q, count);
  std::vector<char> leaks(count, 0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Generator::InnerIterator it(q, i); it; ++it)
      if (it.col() != i && it.value() > 0.0 && comp[it.col()] != comp[i]) leaks[comp[i]] = 1;
  std::vector<int> closed;
  for (int c = 0; c < count; ++c)
    if (!leaks[c]) closed.push_back(c);
  if (closed.size() != 1) {
    std::vector<std::vector<std::size_t>> classes(closed.size());
    for (Eigen::Index i = 0; i < n; ++i)
      for (std::size_t k = 0; k < closed.size(); ++k)
        if (comp[i] == closed[k]) classes[k].push_back(static_cast<std::size_t>(i));
    throw Reducible(closed.size(), std::move(classes));
  }

  std::vector<int> local(n, -1);
  std::vector<Eigen::Index> members;
  for (Eigen::Index i = 0; i < n; ++i)
    if (comp[i] == closed[0]) {
      local[i] = static_cast<int>(members.size());
      members.push_back(i);
    }
  comp = {};
  const int m = static_cast<int>(members.size());
  if (m == 1) {
    pi[members[0]] = 1.0;
    return pi;
  }

  const bool direct = options.method == StationaryMethod::Direct ||
                      (options.method == StationaryMethod::Auto && members.size() <= options.direct_limit);
  Eigen::VectorXd x = direct ? solve_direct(q, local, members) : solve_gauss_seidel(q, local, members, options);
  double sum = 0.0;
  for (int r = 0; r < m; ++r) {
    x[r] = std::max(x[r], 0.0);
    sum += x[r];
  }
  for (int r = 0; r < m; ++r) pi[members[r]] = x[r] / sum;
  return pi;
}

double stationary_residual(const Generator& q, const Eigen::VectorXd& pi) {
  Eigen::VectorXd r = q.transpose() * pi;
  return r.cwiseAbs().maxCoeff();
}

SteadyState solve_ctmc(std::shared_ptr<const CompiledModel> model, std::size_t cap) {
  Ctmc chain = build_ctmc(model, cap);
  StationaryOptions options;
  options.order = &chain.discovery;
  Eigen::VectorXd pi = stationary(chain.generator, options);
  const CompiledModel& cm = *model;

  SteadyState out;
  out.engine = EngineKind::Ctmc;
  out.model = model;
  out.occupancy.assign(cm.slot_count(), 0.0);
  out.flow.assign(cm.enablings().size(), 0.0);
  out.action_rate.assign(cm.action_count(), 0.0);
  std::vector<double> x(cm.slot_count()), flow(cm.enablings().size());
  for (std::size_t i = 0; i < chain.states.size(); ++i) {
    const double p = pi[static_cast<Eigen::Index>(i)];
    if (p == 0.0) continue;
    for (int k = 0; k < cm.slot_count(); ++k) {
      x[k] = static_cast<double>(chain.states.count(i, k));
      out.occupancy[k] += p * x[k];
    }
    std::fill(flow.begin(), flow.end(), 0.0);
    for (int a = 0; a < cm.action_count(); ++a) out.action_rate[a] += p * cm.distribute(a, x.data(), flow.data());
    for (std::size_t e = 0; e < flow.size(); ++e) out.flow[e] += p * flow[e];
  }
  out.residual = stationary_residual(chain.generator, pi);
  out.size = chain.states.size();
  return out;
}

}  // namespace slicesim
