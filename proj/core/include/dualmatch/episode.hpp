#pragma once

#include <functional>

#include "dualmatch/batch_policies.hpp"
#include "dualmatch/policies.hpp"

namespace dualmatch {

// Called after each period with the post-step state, the decision of
// that period, and the policy's duals when it keeps any.
using EpisodeObserver =
    std::function<void(int t, const PathState& state, const Decision& decision,
                       const DualState* duals)>;

// Runs the policy over one materialized sample path, enforcing the
// capacity-feasibility invariant at every period. The policy is reset
// with a stream keyed by (seed, path, algorithm, policy name).
RunResult run_episode(const Instance& inst, Policy& policy, const SamplePath& path,
                      std::uint64_t seed, std::uint32_t path_index,
                      const EpisodeObserver& observer = nullptr);

// Convenience: the realized decision sequence of an episode.
std::vector<Decision> collect_decisions(const Instance& inst, Policy& policy,
                                        const SamplePath& path, std::uint64_t seed,
                                        std::uint32_t path_index);

}  // namespace dualmatch
