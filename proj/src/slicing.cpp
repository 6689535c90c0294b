#include "slicesim/slicing.hpp"

#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>

namespace slicesim {

std::string_view to_string(Architecture a) {
  return a == Architecture::Proposed ? "proposed" : "baseline";
}

Architecture architecture_from_string(std::string_view s) {
  if (s == "proposed") return Architecture::Proposed;
  if (s == "baseline" || s == "baseline-5gs") return Architecture::Baseline;
  throw std::invalid_argument("unknown architecture '" + std::string(s) + "'");
}

std::string_view to_string(ProcessorService s) { return s == ProcessorService::PerRequest ? "per-request" : "table"; }

ProcessorService processor_service_from_string(std::string_view s) {
  if (s == "per-request") return ProcessorService::PerRequest;
  if (s == "table") return ProcessorService::Table;
  throw std::invalid_argument("unknown processor service '" + std::string(s) + "'");
}

std::string_view to_string(Coupling c) { return c == Coupling::SingleNode ? "single" : "pairwise"; }

Coupling coupling_from_string(std::string_view s) {
  if (s == "single") return Coupling::SingleNode;
  if (s == "pairwise") return Coupling::PairwiseGet;
  throw std::invalid_argument("unknown coupling '" + std::string(s) + "'");
}

void SliceScale::check() const {
  for (auto v : nf)
    if (v < 1) throw std::invalid_argument("scale counts must be positive: " + tuple_string());
  if (processors_per_nf < 1) throw std::invalid_argument("processors per NF must be positive");
  if (threads_per_processor < 1) throw std::invalid_argument("threads per processor must be positive");
  if (users < 0) throw std::invalid_argument("user count must not be negative");
}

std::string SliceScale::tuple_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < nf.size(); ++i) out += (i ? "," : "") + std::to_string(nf[i]);
  return out + ")";
}

RateTable default_rates() { return {{"r_p", 1e5}, {"r_v", 100.0}, {"r_iat", 1.0}}; }

namespace {

using Steps = std::vector<std::pair<std::string, std::string>>;  // (action, rate name)

Branch branch(const Steps& steps, std::string successor) {
  Branch b;
  for (const auto& [action, rate] : steps) b.prefixes.push_back({action, Rate::named(rate)});
  b.successor = std::move(successor);
  return b;
}

struct ComponentBuilder {
  SequentialComponent c;
  explicit ComponentBuilder(std::string name) { c.name = std::move(name); }
  ComponentBuilder& state(const std::string& name, const Steps& steps, const std::string& successor) {
    c.states.push_back({name, {branch(steps, successor)}});
    return *this;
  }
  ComponentBuilder& choice(const std::string& name, const std::vector<std::pair<Steps, std::string>>& branches) {
    NamedState s{name, {}};
    for (const auto& [steps, succ] : branches) s.branches.push_back(branch(steps, succ));
    c.states.push_back(std::move(s));
    return *this;
  }
  SequentialComponent done() const { return desugar(c); }
};

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// Two-state processor: idle until its get, then busy until a serve action.
SequentialComponent processor(const std::string& name, const std::string& get, const std::vector<std::string>& table_serves,
                              ProcessorService service) {
  ComponentBuilder b(name);
  b.state(name + "_1", {{get, "r_p"}}, name + "_2");
  std::vector<std::pair<Steps, std::string>> serves;
  if (service == ProcessorService::PerRequest) {
    serves.push_back({{{"serve_" + lower(name), "r_v"}}, name + "_1"});
  } else {
    for (const auto& a : table_serves) serves.push_back({{{a, "r_v"}}, name + "_1"});
  }
  b.choice(name + "_2", serves);
  return b.done();
}

struct Pairing {
  std::string nf;         // NF component
  std::string processor;  // its processor component
  std::string get;
};

struct Layout {
  std::vector<SequentialComponent> components;
  std::map<std::string, std::pair<std::string, std::int64_t>> groups;  // component -> (initial, count)
  std::vector<std::pair<std::set<ActionLabel>, std::string>> nf_chain;  // first entry's set unused
  std::vector<std::string> processors;
  std::vector<Pairing> pairs;
};

SystemComposition leaf(const Layout& l, const std::string& component) {
  const auto& [initial, count] = l.groups.at(component);
  return SystemComposition::leaf({component, initial, count});
}

Model assemble(Layout layout, const RateTable& rates, const BuildOptions& options, const std::string& set_prefix) {
  if (options.coupling == Coupling::PairwiseGet && options.service == ProcessorService::Table)
    throw std::invalid_argument("pairwise get coupling needs per-request processors");

  auto unit = [&](const std::string& nf) {
    if (options.coupling == Coupling::SingleNode) return leaf(layout, nf);
    for (const auto& p : layout.pairs)
      if (p.nf == nf)
        return SystemComposition::cooperate(leaf(layout, nf), {"G_" + p.nf, {p.get}}, leaf(layout, p.processor));
    throw std::logic_error("no processor for " + nf);
  };

  SystemComposition nfs = unit(layout.nf_chain.front().second);
  int label = 0;
  for (std::size_t i = 1; i < layout.nf_chain.size(); ++i) {
    const auto& [set, nf] = layout.nf_chain[i];
    std::string name = set.empty() ? std::string("phi") : set_prefix + std::to_string(++label);
    nfs = SystemComposition::cooperate(std::move(nfs), {name, set}, unit(nf));
  }

  Model m;
  m.components = std::move(layout.components);
  m.rates = rates;
  if (options.coupling == Coupling::PairwiseGet) {
    m.system = std::move(nfs);
    return m;
  }
  SystemComposition procs = leaf(layout, layout.processors.front());
  for (std::size_t i = 1; i < layout.processors.size(); ++i)
    procs = SystemComposition::cooperate(std::move(procs), {"phi", {}}, leaf(layout, layout.processors[i]));
  std::set<ActionLabel> gets;
  for (const auto& p : layout.pairs) gets.insert(p.get);
  m.system = SystemComposition::cooperate(std::move(nfs), {set_prefix + std::to_string(++label), gets}, std::move(procs));
  return m;
}

}  // namespace

Model build_proposed(const SliceScale& scale, const RateTable& rates, const BuildOptions& options) {
  scale.check();
  const auto threads = [&](int i) { return scale.nf[i] * scale.processors_per_nf * scale.threads_per_processor; };
  const auto procs = [&](int i) { return scale.nf[i] * scale.processors_per_nf; };
  enum { Dp1, Dp2, Ussf, Ranc1, Ranc2, Cnc1, Cnc2, Upf1, Upf2 };

  Layout l;
  l.components.push_back(ComponentBuilder("Ue")
                             .state("Ue_1", {{"get_uep", "r_p"}, {"req_se1", "r_iat"}}, "Ue_2")
                             .state("Ue_2", {{"reconfig_1", "r_v"}}, "Ue_3")
                             .state("Ue_3", {{"req_se2", "r_v"}, {"reconfig_2", "r_v"}}, "Ue_1")
                             .done());
  l.groups["Ue"] = {"Ue_1", scale.users};
  for (int k = 1; k <= 2; ++k) {
    const std::string s = std::to_string(k), dp = "Dp" + s;
    l.components.push_back(ComponentBuilder(dp)
                               .state(dp + "_1", {{"drb_" + s, "r_v"}}, dp + "_2")
                               .state(dp + "_2", {{"get_dpp" + s, "r_p"}, {"prepare", "r_v"}}, dp + "_1")
                               .done());
    l.groups[dp] = {dp + "_1", threads(k == 1 ? Dp1 : Dp2)};
  }
  l.components.push_back(ComponentBuilder("Ussf")
                             .state("Ussf_1", {{"req_se1", "r_v"}}, "Ussf_2")
                             .state("Ussf_2", {{"get_ussfp", "r_p"}, {"req_sc1", "r_v"}}, "Ussf_3")
                             .state("Ussf_3", {{"notify_1", "r_v"}, {"reconfig_1", "r_v"}}, "Ussf_4")
                             .state("Ussf_4", {{"req_se2", "r_v"}}, "Ussf_5")
                             .state("Ussf_5", {{"get_ussfp", "r_p"}, {"req_sc2", "r_v"}}, "Ussf_6")
                             .state("Ussf_6", {{"notify_2", "r_v"}, {"reconfig_2", "r_v"}}, "Ussf_1")
                             .done());
  l.groups["Ussf"] = {"Ussf_1", threads(Ussf)};
  for (int k = 1; k <= 2; ++k) {
    const std::string s = std::to_string(k), r = "Ranc" + s, get = "get_rancp" + s;
    l.components.push_back(ComponentBuilder(r)
                               .state(r + "_1", {{"setup_" + s, "r_v"}}, r + "_2")
                               .state(r + "_2", {{get, "r_p"}, {"drb_" + s, "r_v"}}, r + "_3")
                               .state(r + "_3", {{get, "r_p"}, {"notify_" + s, "r_v"}}, r + "_4")
                               .state(r + "_4", {{get, "r_p"}, {"update_" + s, "r_v"}}, r + "_1")
                               .done());
    l.groups[r] = {r + "_1", threads(k == 1 ? Ranc1 : Ranc2)};
  }
  for (int k = 1; k <= 2; ++k) {
    const std::string s = std::to_string(k), c = "Cnc" + s, get = "get_cncp" + s;
    l.components.push_back(ComponentBuilder(c)
                               .state(c + "_1", {{"req_sc" + s, "r_v"}}, c + "_2")
                               .state(c + "_2", {{get, "r_p"}, {"req_n4est" + s, "r_v"}}, c + "_3")
                               .state(c + "_3", {{"rep_n4est" + s, "r_v"}}, c + "_4")
                               .state(c + "_4", {{get, "r_p"}, {"setup_" + s, "r_v"}}, c + "_5")
                               .state(c + "_5", {{"update_" + s, "r_v"}}, c + "_1")
                               .done());
    l.groups[c] = {c + "_1", threads(k == 1 ? Cnc1 : Cnc2)};
  }
  for (int k = 1; k <= 2; ++k) {
    const std::string s = std::to_string(k), u = "Upf" + s;
    l.components.push_back(ComponentBuilder(u)
                               .state(u + "_1", {{"req_n4est" + s, "r_v"}}, u + "_2")
                               .state(u + "_2", {{"get_upfp" + s, "r_p"}}, u + "_1")
                               .done());
    l.groups[u] = {u + "_1", threads(k == 1 ? Upf1 : Upf2)};
  }

  struct Proc {
    std::string name, nf, get;
    std::vector<std::string> serves;
    std::int64_t count;
  };
  std::vector<Proc> ps = {
      {"Uep", "Ue", "get_uep", {"req_se1"}, scale.users},
      {"Dpp1", "Dp1", "get_dpp1", {"prepare"}, procs(Dp1)},
      {"Dpp2", "Dp2", "get_dpp2", {"prepare"}, procs(Dp2)},
      {"Ussfp", "Ussf", "get_ussfp", {"reconfig_1", "reconfig_2"}, procs(Ussf)},
      {"Rancp1", "Ranc1", "get_rancp1", {"drb_1", "notify_1", "update_1"}, procs(Ranc1)},
      {"Rancp2", "Ranc2", "get_rancp2", {"drb_2", "notify_2", "update_2"}, procs(Ranc2)},
      {"Cncp1", "Cnc1", "get_cncp1", {"req_n4est1", "setup_1"}, procs(Cnc1)},
      {"Cncp2", "Cnc2", "get_cncp2", {"req_n4est2", "setup_2"}, procs(Cnc2)},
      {"Upfp1", "Upf1", "get_upfp1", {"req_n4est1"}, procs(Upf1)},
      {"Upfp2", "Upf2", "get_upfp2", {"req_n4est2"}, procs(Upf2)},
  };
  for (const auto& p : ps) {
    l.components.push_back(processor(p.name, p.get, p.serves, options.service));
    l.groups[p.name] = {p.name + "_1", p.count};
    l.processors.push_back(p.name);
    l.pairs.push_back({p.nf, p.name, p.get});
  }

  l.nf_chain = {
      {{}, "Ue"},
      {{}, "Dp1"},
      {{}, "Dp2"},
      {{"req_se1", "reconfig_1", "req_se2", "reconfig_2"}, "Ussf"},
      {{"drb_1", "notify_1"}, "Ranc1"},
      {{"drb_2", "notify_2"}, "Ranc2"},
      {{"req_sc1", "setup_1", "update_1"}, "Cnc1"},
      {{"req_sc2", "setup_2", "update_2"}, "Cnc2"},
      {{"req_n4est1"}, "Upf1"},
      {{"req_n4est2"}, "Upf2"},
  };
  return assemble(std::move(l), rates, options, "S");
}

Model build_baseline(const SliceScale& scale, const RateTable& rates, const BuildOptions& options) {
  scale.check();
  const auto threads = [&](int i) { return scale.nf[i] * scale.processors_per_nf * scale.threads_per_processor; };
  const auto procs = [&](int i) { return scale.nf[i] * scale.processors_per_nf; };
  enum { Du1, Du2, Cu1, Cu2, Amf, Smf1, Smf2, Upf1, Upf2 };

  Layout l;
  l.components.push_back(ComponentBuilder("Ue")
                             .state("Ue_1", {{"get_uep", "r_p"}, {"nas_req1", "r_iat"}}, "Ue_2")
                             .state("Ue_2", {{"rrc_reconfig1", "r_v"}}, "Ue_3")
                             .state("Ue_3", {{"nas_req2", "r_v"}, {"rrc_reconfig2", "r_v"}}, "Ue_1")
                             .done());
  l.groups["Ue"] = {"Ue_1", scale.users};
  for (int k = 1; k <= 2; ++k) {
    const std::string s = std::to_string(k), du = "Du" + s;
    l.components.push_back(ComponentBuilder(du)
                               .state(du + "_1", {{"f1_drb" + s, "r_v"}}, du + "_2")
                               .state(du + "_2", {{"get_dup" + s, "r_p"}, {"prepare", "r_v"}}, du + "_1")
                               .done());
    l.groups[du] = {du + "_1", threads(k == 1 ? Du1 : Du2)};
  }
  {
    // The AMF serves both slices one after the other, four processor
    // acquisitions per slice.
    ComponentBuilder amf("Amf");
    for (int k = 1; k <= 2; ++k) {
      const std::string s = std::to_string(k);
      const int base = (k - 1) * 9;
      auto st = [&](int i) { return "Amf_" + std::to_string(base + i); };
      const std::string after = k == 1 ? "Amf_10" : "Amf_1";
      amf.state(st(1), {{"nas_req" + s, "r_v"}}, st(2))
          .state(st(2), {{"get_amfp", "r_p"}, {"create_req" + s, "r_v"}}, st(3))
          .state(st(3), {{"create_rep" + s, "r_v"}}, st(4))
          .state(st(4), {{"n1n2_" + s, "r_v"}}, st(5))
          .state(st(5), {{"get_amfp", "r_p"}, {"n1n2_ack" + s, "r_v"}}, st(6))
          .state(st(6), {{"get_amfp", "r_p"}, {"n2_req" + s, "r_v"}}, st(7))
          .state(st(7), {{"n2_rep" + s, "r_v"}}, st(8))
          .state(st(8), {{"get_amfp", "r_p"}, {"update_req" + s, "r_v"}}, st(9))
          .state(st(9), {{"update_rep" + s, "r_v"}}, after);
    }
    l.components.push_back(amf.done());
    l.groups["Amf"] = {"Amf_1", threads(Amf)};
  }
  for (int k = 1; k <= 2; ++k) {
    const std::string s = std::to_string(k), cu = "Cu" + s, get = "get_cup" + s;
    l.components.push_back(ComponentBuilder(cu)
                               .state(cu + "_1", {{"n2_req" + s, "r_v"}}, cu + "_2")
                               .state(cu + "_2", {{get, "r_p"}, {"f1_drb" + s, "r_v"}}, cu + "_3")
                               .state(cu + "_3", {{get, "r_p"}, {"rrc_reconfig" + s, "r_v"}}, cu + "_4")
                               .state(cu + "_4", {{get, "r_p"}, {"n2_rep" + s, "r_v"}}, cu + "_1")
                               .done());
    l.groups[cu] = {cu + "_1", threads(k == 1 ? Cu1 : Cu2)};
  }
  for (int k = 1; k <= 2; ++k) {
    const std::string s = std::to_string(k), smf = "Smf" + s, get = "get_smfp" + s;
    l.components.push_back(ComponentBuilder(smf)
                               .state(smf + "_1", {{"create_req" + s, "r_v"}}, smf + "_2")
                               .state(smf + "_2", {{get, "r_p"}, {"create_rep" + s, "r_v"}}, smf + "_3")
                               .state(smf + "_3", {{get, "r_p"}, {"n4_req" + s, "r_v"}}, smf + "_4")
                               .state(smf + "_4", {{"n4_rep" + s, "r_v"}}, smf + "_5")
                               .state(smf + "_5", {{get, "r_p"}, {"n1n2_" + s, "r_v"}}, smf + "_6")
                               .state(smf + "_6", {{"n1n2_ack" + s, "r_v"}}, smf + "_7")
                               .state(smf + "_7", {{"update_req" + s, "r_v"}}, smf + "_8")
                               .state(smf + "_8", {{get, "r_p"}, {"update_rep" + s, "r_v"}}, smf + "_1")
                               .done());
    l.groups[smf] = {smf + "_1", threads(k == 1 ? Smf1 : Smf2)};
  }
  for (int k = 1; k <= 2; ++k) {
    const std::string s = std::to_string(k), u = "Upf" + s;
    l.components.push_back(ComponentBuilder(u)
                               .state(u + "_1", {{"n4_req" + s, "r_v"}}, u + "_2")
                               .state(u + "_2", {{"get_upfp" + s, "r_p"}, {"n4_rep" + s, "r_v"}}, u + "_1")
                               .done());
    l.groups[u] = {u + "_1", threads(k == 1 ? Upf1 : Upf2)};
  }

  struct Proc {
    std::string name, nf, get;
    std::vector<std::string> serves;
    std::int64_t count;
  };
  std::vector<Proc> ps = {
      {"Uep", "Ue", "get_uep", {"nas_req1"}, scale.users},
      {"Dup1", "Du1", "get_dup1", {"prepare"}, procs(Du1)},
      {"Dup2", "Du2", "get_dup2", {"prepare"}, procs(Du2)},
      {"Cup1", "Cu1", "get_cup1", {"f1_drb1", "rrc_reconfig1", "n2_rep1"}, procs(Cu1)},
      {"Cup2", "Cu2", "get_cup2", {"f1_drb2", "rrc_reconfig2", "n2_rep2"}, procs(Cu2)},
      {"Amfp",
       "Amf",
       "get_amfp",
       {"create_req1", "n1n2_ack1", "n2_req1", "update_req1", "create_req2", "n1n2_ack2", "n2_req2", "update_req2"},
       procs(Amf)},
      {"Smfp1", "Smf1", "get_smfp1", {"create_rep1", "n4_req1", "n1n2_1", "update_rep1"}, procs(Smf1)},
      {"Smfp2", "Smf2", "get_smfp2", {"create_rep2", "n4_req2", "n1n2_2", "update_rep2"}, procs(Smf2)},
      {"Upfp1", "Upf1", "get_upfp1", {"n4_rep1"}, procs(Upf1)},
      {"Upfp2", "Upf2", "get_upfp2", {"n4_rep2"}, procs(Upf2)},
  };
  for (const auto& p : ps) {
    l.components.push_back(processor(p.name, p.get, p.serves, options.service));
    l.groups[p.name] = {p.name + "_1", p.count};
    l.processors.push_back(p.name);
    l.pairs.push_back({p.nf, p.name, p.get});
  }

  l.nf_chain = {
      {{}, "Ue"},
      {{}, "Du1"},
      {{}, "Du2"},
      {{"nas_req1", "nas_req2"}, "Amf"},
      {{"n2_req1", "n2_rep1", "f1_drb1", "rrc_reconfig1"}, "Cu1"},
      {{"n2_req2", "n2_rep2", "f1_drb2", "rrc_reconfig2"}, "Cu2"},
      {{"create_req1", "create_rep1", "n1n2_1", "n1n2_ack1", "update_req1", "update_rep1"}, "Smf1"},
      {{"create_req2", "create_rep2", "n1n2_2", "n1n2_ack2", "update_req2", "update_rep2"}, "Smf2"},
      {{"n4_req1", "n4_rep1"}, "Upf1"},
      {{"n4_req2", "n4_rep2"}, "Upf2"},
  };
  return assemble(std::move(l), rates, options, "B");
}

Model build(Architecture arch, const SliceScale& scale, const RateTable& rates, const BuildOptions& options) {
  return arch == Architecture::Proposed ? build_proposed(scale, rates, options)
                                        : build_baseline(scale, rates, options);
}

SliceSpec slice_spec(Architecture arch, int slice) {
  if (slice != 1 && slice != 2) throw std::out_of_range("unknown slice " + std::to_string(slice));
  const std::string s = std::to_string(slice);
  if (arch == Architecture::Proposed) return {"Ue", "req_se" + s, "reconfig_" + s};
  return {"Ue", "nas_req" + s, "rrc_reconfig" + s};
}

std::vector<std::string> processor_groups(Architecture arch) {
  if (arch == Architecture::Proposed)
    return {"Uep", "Dpp1", "Dpp2", "Ussfp", "Rancp1", "Rancp2", "Cncp1", "Cncp2", "Upfp1", "Upfp2"};
  return {"Uep", "Dup1", "Dup2", "Cup1", "Cup2", "Amfp", "Smfp1", "Smfp2", "Upfp1", "Upfp2"};
}

namespace {

void collect_synced(const SystemComposition& node, std::set<ActionLabel>& out) {
  if (node.empty() || node.is_leaf()) return;
  out.insert(node.sync().actions.begin(), node.sync().actions.end());
  collect_synced(node.left(), out);
  collect_synced(node.right(), out);
}

}  // namespace

std::vector<ActionLabel> slice_messages(const Model& model, int slice) {
  std::set<ActionLabel> synced;
  collect_synced(model.system, synced);
  const std::string tag = std::to_string(slice);
  std::vector<ActionLabel> out;
  for (const auto& a : synced) {
    if (a.rfind("get_", 0) == 0) continue;
    std::size_t start = a.size();
    while (start > 0 && std::isdigit(static_cast<unsigned char>(a[start - 1]))) --start;
    if (a.substr(start) == tag) out.push_back(a);
  }
  return out;
}

int message_count(const Model& model, int slice) { return static_cast<int>(slice_messages(model, slice).size()); }

int message_count(Architecture arch, int slice) { return message_count(build(arch, SliceScale{}), slice); }

}  // namespace slicesim
