// Exact population CTMC: reachability, generator and stationary solve.
#pragma once

#include <Eigen/Sparse>

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slicesim/steady_state.hpp"

namespace slicesim {

/// Occupancy count per (component, state).
using PopulationState = std::map<std::pair<std::string, std::string>, std::int64_t>;

class StateSpaceExceeded : public std::runtime_error {
 public:
  StateSpaceExceeded(std::size_t cap, std::size_t reached);
  std::size_t cap() const { return cap_; }
  std::size_t reached() const { return reached_; }

 private:
  std::size_t cap_, reached_;
};

class Reducible : public std::runtime_error {
 public:
  Reducible(std::size_t terminal_classes, std::vector<std::vector<std::size_t>> classes);
  /// Terminal (closed) communicating classes, as state indices.
  const std::vector<std::vector<std::size_t>>& classes() const { return classes_; }

 private:
  std::vector<std::vector<std::size_t>> classes_;
};

using Generator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Occupancy vectors stored back to back. Each count takes the narrowest of
/// 1, 2, 4 or 8 bytes that holds the largest group population.
class StateList {
 public:
  StateList() = default;
  StateList(int width, std::int64_t max_count);

  std::size_t size() const { return width_ ? data_.size() / (static_cast<std::size_t>(width_) * bytes_) : 0; }
  int width() const { return width_; }
  std::int64_t count(std::size_t state, int slot) const;
  std::vector<std::int64_t> operator[](std::size_t state) const;

  void push_back(const std::int64_t* occupancy);
  void push_record(const std::uint8_t* record);
  /// Raw record of a state, for hashing and equality.
  const std::uint8_t* record(std::size_t state) const { return data_.data() + state * record_size(); }
  std::size_t record_size() const { return static_cast<std::size_t>(width_) * bytes_; }
  void encode(const std::int64_t* occupancy, std::uint8_t* out) const;
  void reserve(std::size_t states) { data_.reserve(states * record_size()); }

  friend bool operator==(const StateList&, const StateList&) = default;

 private:
  int width_ = 0;
  int bytes_ = 1;
  std::vector<std::uint8_t> data_;
};

struct Ctmc {
  std::shared_ptr<const CompiledModel> model;
  StateList states;  // descending lexicographic order
  Generator generator;
  /// State indices in the order exploration reached them; sweeps of the
  /// iterative solver follow it.
  std::vector<int> discovery;
};

/// Global rate of `action` in `state` under the min/sum cooperation rule.
double global_action_rate(const Model& model, const PopulationState& state, const ActionLabel& action);

inline constexpr std::size_t default_state_cap = 2'000'000;

Ctmc build_ctmc(std::shared_ptr<const CompiledModel> model, std::size_t cap = default_state_cap);

enum class StationaryMethod {
  Auto,         // sparse LU up to direct_limit states in the closed class, else Gauss-Seidel
  Direct,
  GaussSeidel,
};

struct StationaryOptions {
  StationaryMethod method = StationaryMethod::Auto;
  std::size_t direct_limit = 50'000;
  double tolerance = 1e-12;  // on ‖πQ‖∞, Gauss-Seidel only
  std::size_t max_sweeps = 20'000;
  const std::vector<int>* order = nullptr;  // state indices in sweep order; index order if null
};

/// Stationary distribution of a generator with a single closed class;
/// states outside it get probability 0. Throws Reducible otherwise, and
/// std::runtime_error if Gauss-Seidel does not reach the tolerance.
Eigen::VectorXd stationary(const Generator& q, const StationaryOptions& options = {});

/// ‖πQ‖∞
double stationary_residual(const Generator& q, const Eigen::VectorXd& pi);

/// Exact steady state: occupancy and per-branch flows are expectations
/// under the stationary distribution.
SteadyState solve_ctmc(std::shared_ptr<const CompiledModel> model, std::size_t cap = default_state_cap);

/// Cheap upper bound on the reachable state count: the product over groups
/// of the number of ways to place their population in their states.
double state_count_bound(const CompiledModel& model);

}  // namespace slicesim
