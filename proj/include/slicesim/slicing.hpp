// Builders for the two-slice PDU session establishment models.
//
// Scale tuples are ordered
//   proposed: (dp1, dp2, ussf, ranc1, ranc2, cnc1, cnc2, upf1, upf2)
//   baseline: (du1, du2, cu1, cu2, amf, smf1, smf2, upf1, upf2)
// Each network function group gets N = n_nf * n_nfp * n_t threads and its
// processor group N_p = n_nf * n_nfp processors. The UE group and the UE
// processor group both have `users` members.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "slicesim/model.hpp"

namespace slicesim {

enum class Architecture { Proposed, Baseline };

std::string_view to_string(Architecture a);
Architecture architecture_from_string(std::string_view s);  // "proposed" | "baseline" (or "baseline-5gs")

struct SliceScale {
  std::array<std::int64_t, 9> nf{1, 1, 1, 1, 1, 1, 1, 1, 1};
  std::int64_t processors_per_nf = 1;  // n_nfp
  std::int64_t threads_per_processor = 1;  // n_t
  std::int64_t users = 1;

  static SliceScale uniform(std::int64_t count) {
    SliceScale s;
    s.nf.fill(count);
    return s;
  }
  /// Throws std::invalid_argument unless every count is positive (users may be 0).
  void check() const;
  std::string tuple_string() const;  // "(1,1,1,1,1,1,1,1,1)"
};

/// How a processor spends the time it holds after a get.
enum class ProcessorService {
  PerRequest,  // Xp_2 = (serve_x, r_v).Xp_1, one service period per acquisition
  Table,       // serve branches exactly as tabulated for the network functions
};

/// Where get actions are synchronised.
enum class Coupling {
  SingleNode,    // one node joining the whole NF chain with the whole processor chain
  PairwiseGet,   // each NF group paired with its own processor group
};

std::string_view to_string(ProcessorService s);  // "per-request" | "table"
ProcessorService processor_service_from_string(std::string_view s);
std::string_view to_string(Coupling c);  // "single" | "pairwise"
Coupling coupling_from_string(std::string_view s);

struct BuildOptions {
  ProcessorService service = ProcessorService::PerRequest;
  Coupling coupling = Coupling::SingleNode;
};

RateTable default_rates();  // r_p = 1e5, r_v = 100, r_iat = 1

Model build_proposed(const SliceScale& scale, const RateTable& rates = default_rates(),
                     const BuildOptions& options = {});
Model build_baseline(const SliceScale& scale, const RateTable& rates = default_rates(),
                     const BuildOptions& options = {});
Model build(Architecture arch, const SliceScale& scale, const RateTable& rates = default_rates(),
            const BuildOptions& options = {});

/// Client-side view of one slice's establishment: the UE action that opens
/// it and the one that completes it.
struct SliceSpec {
  std::string client;  // UE component
  std::string request;
  std::string completion;
};

SliceSpec slice_spec(Architecture arch, int slice);  // slice in {1, 2}; throws std::out_of_range

/// Processor groups in declaration order; the first one serves the UE.
std::vector<std::string> processor_groups(Architecture arch);

/// Synchronised, non-get actions of `model` that belong to `slice` (their
/// label ends in the slice number).
std::vector<ActionLabel> slice_messages(const Model& model, int slice);
int message_count(const Model& model, int slice);
int message_count(Architecture arch, int slice);

}  // namespace slicesim
