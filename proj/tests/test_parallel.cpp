#include <doctest.h>

#include <cstdlib>

#include "slicesim/parallel.hpp"
#include "support.hpp"

using namespace slicesim;

namespace {

void same(const PointResult& a, const PointResult& b) {
  CHECK(a.spec.users == b.spec.users);
  CHECK(a.status == b.status);
  CHECK(a.engine == b.engine);
  CHECK(a.residual == b.residual);
  REQUIRE(a.report.has_value() == b.report.has_value());
  if (!a.report) return;
  for (int k : {1, 2}) {
    CHECK(a.report->slice(k).session_rate == b.report->slice(k).session_rate);
    CHECK(a.report->slice(k).art == b.report->slice(k).art);
  }
  CHECK(a.report->utilization == b.report->utilization);
}

}  // namespace

TEST_CASE("parallel sweep equals the serial loop") {
  ExperimentConfig c;
  c.sweep_stop = 20000;
  c.sweep_step = 1900;
  const auto specs = plan(c);
  const auto serial = evaluate_points(specs, c, Execution::Serial);
  const auto parallel = evaluate_points(specs, c, Execution::Parallel);
  REQUIRE(serial.size() == specs.size());
  REQUIRE(parallel.size() == specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CAPTURE(i);
    CHECK(parallel[i].spec.architecture == specs[i].architecture);
    same(serial[i], parallel[i]);
  }
}

TEST_CASE("parallel replicas equal serial ones") {
  const auto c = testing::compile("A_1 = (a, 1).A_2; A_2 = (b, 3).A_1; B_1 = (a, 2).B_2; B_2 = (c, 1).B_1; A_1[6] <a> B_1[4]");
  const std::vector<std::uint64_t> seeds{5, 1, 9, 1, 77, 3, 12, 8};
  const auto s = simulate_replicas(c, {300.0, 0}, seeds, Execution::Serial);
  const auto p = simulate_replicas(c, {300.0, 0}, seeds, Execution::Parallel);
  REQUIRE(s.size() == seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    CHECK(s[i].occupancy == p[i].occupancy);
    CHECK(s[i].action_rate == p[i].action_rate);
    // replica i is the plain run with seed i
    CHECK(s[i].action_rate == simulate(c, {300.0, seeds[i]}).action_rate);
  }
  CHECK(s[1].action_rate == s[3].action_rate);
  CHECK(s[0].action_rate != s[1].action_rate);
}

TEST_CASE("pooling averages replicas") {
  const auto c = testing::compile(testing::two_state_text(3));
  const auto runs = simulate_replicas(c, {200.0, 0}, {1, 2, 3});
  const auto m = pool(runs);
  for (std::size_t k = 0; k < m.occupancy.size(); ++k)
    CHECK(m.occupancy[k] ==
          doctest::Approx((runs[0].occupancy[k] + runs[1].occupancy[k] + runs[2].occupancy[k]) / 3.0));
  for (std::size_t a = 0; a < m.action_rate.size(); ++a)
    CHECK(m.action_rate[a] ==
          doctest::Approx((runs[0].action_rate[a] + runs[1].action_rate[a] + runs[2].action_rate[a]) / 3.0));
  CHECK(pool({runs[1]}).occupancy == runs[1].occupancy);
  CHECK_THROWS(pool({}));
}

TEST_CASE("thread budget reads the environment") {
  const char* old = std::getenv("SLICESIM_THREADS");
  const std::string saved = old ? old : "";
  setenv("SLICESIM_THREADS", "3", 1);
  CHECK(thread_budget() == 3);
  setenv("SLICESIM_THREADS", "zero", 1);
  CHECK(thread_budget() >= 1);
  setenv("SLICESIM_THREADS", "-2", 1);
  CHECK(thread_budget() >= 1);
  if (old)
    setenv("SLICESIM_THREADS", saved.c_str(), 1);
  else
    unsetenv("SLICESIM_THREADS");
}
