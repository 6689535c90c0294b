#include <doctest.h>

#include <filesystem>
#include <random>

#include "slicesim/config.hpp"
#include "slicesim/parser.hpp"
#include "slicesim/slicing.hpp"

using namespace slicesim;
namespace fs = std::filesystem;

TEST_CASE("two-state UPF fragment") {
  const Model m = parse("Upf1 = (req_n4est1, r_v).Upf2; Upf2 = (get_upfp1, r_p).Upf1; Upf1[5]");
  REQUIRE(m.components.size() == 1);
  CHECK(m.components[0].states.size() == 2);
  REQUIRE(m.system.is_leaf());
  CHECK(m.system.group().count == 5);
  CHECK(m.system.group().initial_state == "Upf1");
}

TEST_CASE("empty input has no system line") {
  try {
    parse("");
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(std::string(e.what()).find("system") != std::string::npos);
  }
}

TEST_CASE("definitions after the system line are rejected") {
  CHECK_THROWS_AS(parse("A = (a, 1).A; A[1]; B = (b, 1).B;"), ParseError);
}

TEST_CASE("one cooperation node") {
  const Model m = parse("A = (a, 1.0).A; B = (a, 2.0).B; A[2] <a> B[3]");
  REQUIRE_FALSE(m.system.is_leaf());
  CHECK(m.system.sync().actions == std::set<ActionLabel>{"a"});
  CHECK(m.system.left().group().count == 2);
  CHECK(m.system.right().group().count == 3);
}

TEST_CASE("cooperation is left-associative and <> is empty") {
  const Model m = parse("A = (a, 1).A; B = (a, 1).B; C = (c, 1).C; A[1] <a> B[1] <> C[1]");
  REQUIRE_FALSE(m.system.is_leaf());
  CHECK(m.system.sync().actions.empty());
  CHECK(m.system.right().is_leaf());
  CHECK(m.system.left().sync().actions == std::set<ActionLabel>{"a"});

  const Model grouped = parse("A = (a, 1).A; B = (a, 1).B; C = (c, 1).C; A[1] <a> (B[1] <> C[1])");
  CHECK(grouped.system.left().is_leaf());
}

TEST_CASE("errors carry a position and the expected tokens") {
  try {
    parse("A = (a 1).A;\nA[1]");
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 8);
    CHECK(e.expected().count("','") == 1);
  }
}

TEST_CASE("unknown rate names are left to validation") {
  const Model m = parse("A = (a, r_missing).A; A[1]");
  CHECK(validate_model(m).has(IssueKind::UnresolvedRate));
}

TEST_CASE("CRLF and comments are accepted") {
  const Model a = parse("// c\r\nr = 1;\r\nA = (a, r).A; // tail\r\nA[1]\r\n");
  const Model b = parse("r = 1; A = (a, r).A; A[1]");
  CHECK(a == b);
}

TEST_CASE("chained prefixes render with __k states and reparse equal") {
  const Model m = parse("X_1 = (a, 1).(b, 2).(c, 3).X_1 + (d, 1).X_1; X_1[4]");
  const std::string text = render(m);
  CHECK(text.find("X_1__1") != std::string::npos);
  CHECK(text.find("X_1__2") != std::string::npos);
  CHECK(parse(text) == m);
  CHECK(render(parse(text)) == text);
}

TEST_CASE("built-in models round-trip") {
  for (auto arch : {Architecture::Proposed, Architecture::Baseline})
    for (auto service : {ProcessorService::PerRequest, ProcessorService::Table}) {
      SliceScale s = SliceScale::uniform(3);
      s.users = 17;
      s.processors_per_nf = 2;
      const Model m = build(arch, s, default_rates(), {service, Coupling::SingleNode});
      const std::string text = render(m);
      CHECK(parse(text) == m);
      CHECK(render(parse(text)) == text);
    }
}

TEST_CASE("shipped model files are canonical") {
  for (const auto& entry : fs::directory_iterator(fs::path(SLICESIM_SOURCE_DIR) / "models")) {
    if (entry.path().extension() != ".pepa") continue;
    CAPTURE(entry.path().string());
    const std::string text = read_file(entry.path());
    const Model m = parse(text);
    CHECK(validate_model(m).ok());
    CHECK(render(m) == text);
  }
}

TEST_CASE("format_number round-trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mant(0.0, 10.0);
  std::uniform_int_distribution<int> ex(-30, 30);
  for (int k = 0; k < 2000; ++k) {
    const double v = mant(rng) * std::pow(10.0, ex(rng));
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(100) == "100");
  CHECK(format_number(1e5) == "1e+05");
  CHECK(format_number(0.5) == "0.5");
}

namespace {
void try_parse(const std::string& s) {
  try {
    parse(s);
  } catch (const ParseError&) {
  }
}
}  // namespace

// Arbitrary bytes either parse or throw ParseError, nothing else.
TEST_CASE("parser survives random input") {
  std::mt19937_64 rng(11);
  const std::string alphabet = "AB_12 .,;()<>[]=+/\n\r\t(a,1).e-";
  for (int k = 0; k < 20000; ++k) {
    std::string s(rng() % 60, ' ');
    for (auto& ch : s)
      ch = (k % 2) ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()];
    CHECK_NOTHROW(try_parse(s));
  }

  // mutations of a valid document
  const std::string base = "r = 2;\nA_1 = (a, r).A_2;\nA_2 = (b, 1).A_1;\nB_1 = (a, 1).B_1;\nA_1[3] <a> B_1[2]\n";
  for (int k = 0; k < 20000; ++k) {
    std::string s = base;
    const int edits = 1 + static_cast<int>(rng() % 3);
    for (int e = 0; e < edits; ++e) {
      const auto pos = rng() % s.size();
      switch (rng() % 3) {
        case 0: s.erase(pos, 1); break;
        case 1: s.insert(pos, 1, alphabet[rng() % alphabet.size()]); break;
        default: s[pos] = static_cast<char>(rng() % 128);
      }
      if (s.empty()) s = "x";
    }
    CHECK_NOTHROW(try_parse(s));
  }
}

// Random well-formed models: render then parse gives the same structure.
TEST_CASE("random models round-trip") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 300; ++k) {
    Model m;
    m.rates["r_x"] = 1.0 + static_cast<double>(rng() % 100) / 7.0;
    const int ncomp = 1 + static_cast<int>(rng() % 4);
    for (int c = 0; c < ncomp; ++c) {
      SequentialComponent comp;
      comp.name = "C" + std::to_string(c);
      const int nstates = 1 + static_cast<int>(rng() % 4);
      for (int s = 0; s < nstates; ++s) {
        NamedState st{comp.name + "_" + std::to_string(s + 1), {}};
        const int nb = 1 + static_cast<int>(rng() % 3);
        for (int b = 0; b < nb; ++b) {
          Branch br;
          const int len = 1 + static_cast<int>(rng() % 3);
          for (int p = 0; p < len; ++p) {
            const std::string action = "act" + std::to_string(rng() % 5);
            br.prefixes.push_back({action, (rng() % 2) ? Rate::named("r_x")
                                                      : Rate::literal(static_cast<double>(rng() % 1000) / 8.0 + 0.125)});
          }
          // the first branch walks a cycle so every state stays in one component
          const auto to = b == 0 ? (s + 1) % nstates : static_cast<int>(rng() % nstates);
          br.successor = comp.name + "_" + std::to_string(1 + to);
          st.branches.push_back(br);
        }
        comp.states.push_back(st);
      }
      m.components.push_back(desugar(comp));
    }
    auto leaf = [&](int c) {
      return SystemComposition::leaf({"C" + std::to_string(c), "C" + std::to_string(c) + "_1",
                                      static_cast<std::int64_t>(1 + rng() % 9)});
    };
    m.system = leaf(0);
    for (int c = 1; c < ncomp; ++c) {
      CooperationSet set;
      for (int a = 0; a < 5; ++a)
        if (rng() % 3 == 0) set.actions.insert("act" + std::to_string(a));
      m.system = (rng() % 2) ? SystemComposition::cooperate(m.system, set, leaf(c))
                             : SystemComposition::cooperate(leaf(c), set, m.system);
    }
    const std::string text = render(m);
    CAPTURE(text);
    CHECK(parse(text) == m);
    CHECK(render(parse(text)) == text);
  }
}
