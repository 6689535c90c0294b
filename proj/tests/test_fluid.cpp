#include <doctest.h>

#include <Eigen/Dense>

#include <random>

#include "slicesim/config.hpp"
#include "slicesim/ctmc.hpp"
#include "slicesim/fluid.hpp"
#include "slicesim/slicing.hpp"
#include "support.hpp"

using namespace slicesim;
using testing::compile;

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::shared_ptr<const CompiledModel> default_scale(Architecture arch, std::int64_t users) {
  const ExperimentConfig c;
  return compile(build(arch, c.scale(c.m1, users), c.rates, c.build_options()));
}

}  // namespace

TEST_CASE("balance point of the two-state cycle") {
  const auto c = compile(testing::two_state_text(1000));
  const std::vector<double> x{2000.0 / 3.0, 1000.0 / 3.0};
  CHECK(inf_norm(derivative(*c, x)) < 1e-12);
  CHECK(inf_norm(derivative(*c, {1000.0, 0.0})) == doctest::Approx(1000.0));

  for (auto method : {FluidMethod::PseudoTransient, FluidMethod::Explicit}) {
    FluidOptions o;
    o.method = method;
    const SteadyState s = solve_fixed_point(c, o);
    CHECK(s.converged);
    CHECK(std::abs(s.occupancy_of("P", "P_1") - 2000.0 / 3.0) < 1e-4);
    CHECK(std::abs(s.occupancy_of("P", "P_2") - 1000.0 / 3.0) < 1e-4);
    CHECK(s.throughput("a") == doctest::Approx(2000.0 / 3.0));
    CHECK(s.residual < o.epsilon * 1000.0);
  }
}

TEST_CASE("min rule in the fluid rate") {
  const auto c = compile("A = (a, 1).A; B = (a, 5).B; A[100] <a> B[1]");
  const auto x = c->initial_occupancy();
  CHECK(c->rate(c->action_index("a"), x.data()) == 5.0);
}

TEST_CASE("a blocked cooperation is a fixed point") {
  const auto c = compile(
      "A_1 = (a, 1).A_2; A_2 = (b, 1).A_1;\n"
      "B_1 = (b, 1).B_2; B_2 = (a, 1).B_1;\n"
      "A_1[3] <a, b> B_1[2]");
  CHECK(inf_norm(derivative(*c, c->initial_occupancy())) == 0.0);
  const SteadyState s = solve_fixed_point(c);
  CHECK(s.converged);
  CHECK(s.throughput("a") == 0.0);
}

TEST_CASE("empty populations") {
  for (auto arch : {Architecture::Proposed, Architecture::Baseline}) {
    const auto c = default_scale(arch, 0);
    const SteadyState s = solve_fixed_point(c);
    CHECK(s.converged);
    for (double r : s.action_rate) CHECK(r == 0.0);
    CHECK(s.occupancy == c->initial_occupancy());
  }
}

TEST_CASE("fluid is exact for linear models") {
  for (const char* text : {"P_1 = (a, 1).P_2; P_2 = (b, 2).P_1; P_1[5]",
                           "Q_1 = (a, 1).Q_2 + (b, 4).Q_3; Q_2 = (c, 2).Q_3; Q_3 = (d, 0.5).Q_1; Q_1[3]",
                           "P_1 = (a, 1).P_2; P_2 = (b, 2).P_1; Q_1 = (c, 3).Q_2; Q_2 = (d, 1).Q_1; P_1[4] <> Q_1[2]"}) {
    CAPTURE(text);
    for (const auto& [action, gap] : fluid_vs_ctmc_gap(compile(text))) {
      CAPTURE(action);
      CHECK(gap < 1e-6);
    }
  }
}

TEST_CASE("mean field is close for large populations") {
  const auto c = compile(
      "A_1 = (a, 1).A_2; A_2 = (b, 3).A_1;\n"
      "B_1 = (a, 2).B_2; B_2 = (c, 1).B_1;\n"
      "A_1[100] <a> B_1[120]");
  for (const auto& [action, gap] : fluid_vs_ctmc_gap(c)) {
    CAPTURE(action);
    CHECK(gap < 0.05);
  }
}

TEST_CASE("explicit and pseudo-transient solvers agree") {
  const auto c = compile(
      "A_1 = (a, 1).A_2; A_2 = (b, 3).A_3 + (e, 1).A_1; A_3 = (f, 2).A_1;\n"
      "B_1 = (a, 2).B_2; B_2 = (c, 1).B_1;\n"
      "C_1 = (b, 1).C_2; C_2 = (g, 4).C_1;\n"
      "A_1[100] <a> B_1[60] <b> C_1[40]");
  FluidOptions ptc, explicit_;
  explicit_.method = FluidMethod::Explicit;
  const auto p = solve_fixed_point(c, ptc);
  const auto e = solve_fixed_point(c, explicit_);
  REQUIRE(p.converged);
  REQUIRE(e.converged);
  for (int i = 0; i < c->slot_count(); ++i) CHECK(p.occupancy[i] == doctest::Approx(e.occupancy[i]).epsilon(1e-6));
}

TEST_CASE("mass is conserved along trajectories") {
  for (auto arch : {Architecture::Proposed, Architecture::Baseline}) {
    const auto c = default_scale(arch, 20000);
    const auto x0 = c->initial_occupancy();
    const Trajectory t = integrate(*c, x0, 0.3);
    CHECK(t.max_relative_drift <= 1e-6);
    CHECK(t.accepted > 0);
    for (const auto& leaf : c->leaves()) {
      double mass = 0.0;
      for (int k = 0; k < leaf.size(); ++k) mass += t.x[leaf.offset + k];
      CHECK(mass == doctest::Approx(static_cast<double>(leaf.population)).epsilon(1e-6));
    }
  }
}

// Linear invariants y of the dynamics satisfy y·f(x) = 0 everywhere. Recover
// them from samples of f and check that the fixed point keeps them.
TEST_CASE("fixed points keep every linear invariant") {
  for (auto arch : {Architecture::Proposed, Architecture::Baseline})
    for (std::int64_t users : {3000, 30000}) {
      CAPTURE(users);
      const auto c = default_scale(arch, users);
      const int n = c->slot_count();
      std::mt19937_64 rng(4);
      // spread over many decades so every min gets sampled on each side
      std::uniform_real_distribution<double> u(-25.0, 0.0);
      Eigen::MatrixXd f(20 * n, n);
      for (int r = 0; r < f.rows(); ++r) {
        std::vector<double> x(n);
        for (const auto& leaf : c->leaves()) {
          double total = 0.0;
          for (int k = 0; k < leaf.size(); ++k) total += x[leaf.offset + k] = std::exp(u(rng));
          for (int k = 0; k < leaf.size(); ++k) x[leaf.offset + k] *= static_cast<double>(leaf.population) / total;
        }
        const auto dx = derivative(*c, x);
        for (int k = 0; k < n; ++k) f(r, k) = dx[k] / (1.0 + inf_norm(dx));
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(f, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      const double cut = 1e-9 * sv[0];
      const SteadyState s = solve_fixed_point(c);
      REQUIRE(s.converged);
      const auto x0 = c->initial_occupancy();
      const Eigen::Map<const Eigen::VectorXd> a(x0.data(), n), b(s.occupancy.data(), n);
      int invariants = 0;
      for (int k = 0; k < n; ++k) {
        if (k < sv.size() && sv[k] > cut) continue;
        const Eigen::VectorXd y = svd.matrixV().col(k);
        CHECK(std::abs(y.dot(b - a)) <= 1e-7 * (1.0 + y.cwiseAbs().dot(a)));
        ++invariants;
      }
      // at least one per group
      CHECK(invariants >= static_cast<int>(c->leaves().size()));
    }
}

TEST_CASE("a dominant bottleneck runs out of idle processors") {
  const auto c = default_scale(Architecture::Baseline, 30000);
  const SteadyState s = solve_fixed_point(c);
  REQUIRE(s.converged);
  const double idle = s.occupancy_of("Amfp", "Amfp_1");
  CHECK(idle / static_cast<double>(c->leaves()[c->leaf_index("Amfp")].population) < 0.01);
}

TEST_CASE("throughput of a shared action stays under each side's capacity") {
  for (auto arch : {Architecture::Proposed, Architecture::Baseline}) {
    const auto c = default_scale(arch, 40000);
    const SteadyState s = solve_fixed_point(c);
    REQUIRE(s.converged);
    // every processor is held for one serve period per get
    for (const auto& name : processor_groups(arch)) {
      const auto& leaf = c->leaves()[c->leaf_index(name)];
      double gets = 0.0;
      for (const auto& e : c->enablings())
        if (e.leaf == c->leaf_index(name) && e.from == leaf.offset) gets += s.flow[&e - c->enablings().data()];
      CHECK(gets <= static_cast<double>(leaf.population) * 100.0 * (1.0 + 1e-9));
    }
  }
}
