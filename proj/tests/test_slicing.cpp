#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>

#include "slicesim/config.hpp"
#include "slicesim/fluid.hpp"
#include "slicesim/metrics.hpp"
#include "slicesim/parser.hpp"
#include "slicesim/slicing.hpp"
#include "support.hpp"

using namespace slicesim;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::int64_t> populations(const Model& m) {
  std::map<std::string, std::int64_t> out;
  for (const auto& g : m.system.leaves()) out[g.component] = g.count;
  return out;
}

std::set<ActionLabel> as_set(const std::vector<ActionLabel>& v) { return {v.begin(), v.end()}; }

// Actions that at least two components can perform, with get_* left out.
std::set<ActionLabel> shared_actions(const Model& m, char slice) {
  std::map<ActionLabel, int> owners;
  for (const auto& c : m.components)
    for (const auto& a : alphabet(c)) ++owners[a];
  std::set<ActionLabel> out;
  for (const auto& [a, k] : owners)
    if (k >= 2 && a.rfind("get_", 0) != 0 && a.back() == slice) out.insert(a);
  return out;
}

const std::vector<std::string> proposed_groups{"Dp1", "Dp2", "Ussf", "Ranc1", "Ranc2", "Cnc1", "Cnc2", "Upf1", "Upf2"};
const std::vector<std::string> baseline_groups{"Du1", "Du2", "Cu1", "Cu2", "Amf", "Smf1", "Smf2", "Upf1", "Upf2"};

}  // namespace

TEST_CASE("basic configuration has unit populations") {
  for (auto arch : {Architecture::Proposed, Architecture::Baseline}) {
    const auto pops = populations(build(arch, SliceScale{}));
    CHECK(pops.size() == 20);
    for (const auto& [name, n] : pops) {
      CAPTURE(name);
      CHECK(n == 1);
    }
  }
}

TEST_CASE("populations follow the scale tuple") {
  SliceScale s = SliceScale::uniform(3);
  s.processors_per_nf = 4;
  s.threads_per_processor = 5;
  s.users = 77;
  s.nf[2] = 2;
  for (auto arch : {Architecture::Proposed, Architecture::Baseline}) {
    const auto& groups = arch == Architecture::Proposed ? proposed_groups : baseline_groups;
    const auto pops = populations(build(arch, s));
    const auto procs = processor_groups(arch);
    REQUIRE(procs.size() == 10);
    CHECK(pops.at("Ue") == 77);
    CHECK(pops.at(procs[0]) == 77);
    for (std::size_t k = 0; k < groups.size(); ++k) {
      CAPTURE(groups[k]);
      CHECK(pops.at(groups[k]) == s.nf[k] * 4 * 5);
      CHECK(pops.at(procs[k + 1]) == s.nf[k] * 4);
    }
  }
}

TEST_CASE("slice-2 controller carries slice-2 messages") {
  const Model m = build_proposed(SliceScale{});
  const auto a = alphabet(*m.find_component("Ranc2"));
  for (const char* x : {"drb_2", "notify_2", "update_2"}) CHECK(a.count(x) == 1);
  for (const auto& x : a) CHECK(x.back() != '1');
}

TEST_CASE("message counts") {
  const std::set<ActionLabel> proposed1{"req_se1", "req_sc1", "req_n4est1", "setup_1",
                                        "drb_1",   "notify_1", "reconfig_1", "update_1"};
  const std::set<ActionLabel> baseline1{"nas_req1",  "create_req1", "create_rep1",   "n4_req1", "n4_rep1",
                                        "n1n2_1",    "n1n2_ack1",   "n2_req1",       "f1_drb1", "rrc_reconfig1",
                                        "n2_rep1",   "update_req1", "update_rep1"};
  const Model p = build_proposed(SliceScale{});
  const Model b = build_baseline(SliceScale{});
  CHECK(as_set(slice_messages(p, 1)) == proposed1);
  CHECK(as_set(slice_messages(b, 1)) == baseline1);
  for (int k : {1, 2}) {
    const char tag = static_cast<char>('0' + k);
    CHECK(as_set(slice_messages(p, k)) == shared_actions(p, tag));
    CHECK(as_set(slice_messages(b, k)) == shared_actions(b, tag));
    CHECK(message_count(Architecture::Proposed, k) == 8);
    CHECK(message_count(Architecture::Baseline, k) == 13);
  }
  // scale does not change the protocol
  CHECK(message_count(build_baseline(SliceScale::uniform(3)), 2) == 13);
}

TEST_CASE("builders validate for many scales") {
  for (std::int64_t k : {1, 2, 3, 7})
    for (std::int64_t users : {1, 1000}) {
      SliceScale s = SliceScale::uniform(k);
      s.users = users;
      s.nf[0] = k + 1;
      CHECK(validate_model(build_proposed(s)).ok());
      CHECK(validate_model(build_baseline(s)).ok());
    }
  // an empty UE group is a model error, though the engines accept it
  SliceScale empty;
  empty.users = 0;
  const auto r = validate_model(build_proposed(empty));
  CHECK(r.issues.size() == 2);
  CHECK(r.has(IssueKind::BadPopulation));

  SliceScale bad;
  bad.nf[4] = 0;
  CHECK_THROWS_AS(build_proposed(bad), std::invalid_argument);
  bad = SliceScale{};
  bad.users = -1;
  CHECK_THROWS_AS(build_baseline(bad), std::invalid_argument);
  CHECK(SliceScale::uniform(3).tuple_string() == "(3,3,3,3,3,3,3,3,3)");
}

TEST_CASE("builders are deterministic and match the shipped files") {
  const fs::path dir = fs::path(SLICESIM_SOURCE_DIR) / "models";
  CHECK(build_proposed(SliceScale::uniform(2)) == build_proposed(SliceScale::uniform(2)));
  CHECK(render(build_proposed(SliceScale{})) == read_file(dir / "proposed.pepa"));
  CHECK(render(build_baseline(SliceScale{})) == read_file(dir / "baseline.pepa"));
  CHECK(render(build_proposed(SliceScale{}, default_rates(), {ProcessorService::Table, Coupling::SingleNode})) ==
        read_file(dir / "proposed_table.pepa"));
}

TEST_CASE("the shared function sits on both slices' paths") {
  for (auto [arch, shared] : {std::pair{Architecture::Proposed, "Ussf"}, std::pair{Architecture::Baseline, "Amf"}}) {
    Model m = build(arch, SliceScale{});
    const auto a = alphabet(*m.find_component(shared));
    for (int k : {1, 2}) {
      const auto msgs = slice_messages(m, k);
      CHECK(std::any_of(msgs.begin(), msgs.end(), [&](const auto& x) { return a.count(x) > 0; }));
    }
    m.system = m.system.without(shared);
    m.components.erase(std::find_if(m.components.begin(), m.components.end(),
                                    [&](const auto& c) { return c.name == shared; }));
    CHECK_FALSE(validate_model(m).ok());
  }
  const Model p = build_proposed(SliceScale{});
  const auto ranc1 = alphabet(*p.find_component("Ranc1"));
  for (const auto& x : slice_messages(p, 2)) CHECK(ranc1.count(x) == 0);
}

TEST_CASE("pairwise coupling builds a valid alternative") {
  for (auto arch : {Architecture::Proposed, Architecture::Baseline}) {
    const Model single = build(arch, SliceScale{});
    const Model pairwise = build(arch, SliceScale{}, default_rates(), {ProcessorService::PerRequest, Coupling::PairwiseGet});
    CHECK(validate_model(pairwise).ok());
    CHECK(pairwise.components == single.components);
    CHECK_FALSE(pairwise.system == single.system);
  }
}

TEST_CASE("slices are symmetric") {
  const ExperimentConfig cfg;
  for (auto arch : {Architecture::Proposed, Architecture::Baseline})
    for (std::int64_t n : {1000, 10000, 40000}) {
      CAPTURE(n);
      const auto s = solve_fixed_point(testing::compile(build(arch, cfg.scale(cfg.m1, n), cfg.rates, cfg.build_options())));
      REQUIRE(s.converged);
      CHECK(session_rate(s, slice_spec(arch, 2)) ==
            doctest::Approx(session_rate(s, slice_spec(arch, 1))).epsilon(1e-3));
    }
}

TEST_CASE("names round-trip") {
  for (auto a : {Architecture::Proposed, Architecture::Baseline}) CHECK(architecture_from_string(to_string(a)) == a);
  CHECK(architecture_from_string("baseline-5gs") == Architecture::Baseline);
  CHECK_THROWS(architecture_from_string("5g"));
  CHECK_THROWS_AS(slice_spec(Architecture::Proposed, 3), std::out_of_range);
  CHECK(coupling_from_string(to_string(Coupling::PairwiseGet)) == Coupling::PairwiseGet);
  CHECK(processor_service_from_string(to_string(ProcessorService::Table)) == ProcessorService::Table);
}
