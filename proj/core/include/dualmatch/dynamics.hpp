#pragma once

#include <optional>
#include <vector>

#include "dualmatch/rng.hpp"
#include "dualmatch/types.hpp"

namespace dualmatch {

struct DualState;  // dual_state.hpp

// Draws one period of service availability for the instance's mode.
// Idle mode draws the fresh availability every period regardless of
// the idle flags; the effective availability is computed in the step.
ServiceDraw draw_service(const Instance& inst, const StreamKey& service_key, int period);

// True iff applying `decision` at state keeps the running capacity
// constraint satisfied: cumulative free consumption stays within
// (c - cumulative tied consumption)_+ for every resource type. Tied
// decisions are feasible by construction.
bool check_capacity_feasibility(const Instance& inst, const PathState& state,
                                const Decision& decision, const ArrivalType& arrival);

// Idle-mode effective availability u = l + (1-l)s given the idle
// flags carried into the period.
Grid idle_effective(const PathState& state, const Grid& fresh);

// Advances the state by one period: consumes capacity, applies the
// backlog recursion b' = (b + n z - a)_+ with a = s (bernoulli,
// deterministic) or a = u (idle), updates idle flags and the
// stopping-time flag.
PathState step_backlog(const Instance& inst, const PathState& state,
                       const Decision& decision, const ServiceDraw& draw,
                       const ArrivalType& arrival);

// A materialized sample path: arrivals plus per-period service draws.
struct SamplePath {
  std::vector<ArrivalType> arrivals;
  std::vector<ServiceDraw> services;

  int horizon() const { return static_cast<int>(arrivals.size()); }
};

struct DriftRecord {
  double psi_before = 0.0;
  double psi_after = 0.0;
  double drift = 0.0;         // D_t
  double pseudo_reward = 0.0; // K_t
  double lower_bound = 0.0;   // b_{t-1} . (z - s)
  double upper_bound = 0.0;   // lower + (1+m)/2
};

// Evaluates the Lyapunov drift of 0.5*||b||^2 for one base-model step
// together with the pseudo-reward
//   K_t = w.z + theta.(rho - z) + lambda.(rho - z) - zeta * D_t.
// The two-sided drift bound uses the explicit constant (1+m)/2.
DriftRecord drift_diagnostics(const Instance& inst, const std::vector<double>& prev_backlog,
                              const Decision& decision, const ServiceDraw& draw,
                              const DualState& duals, const ArrivalType& arrival);

// Replays a full decision sequence through the dynamics and scores it.
// Throws if some decision violates per-period capacity feasibility
// (the exception message names the first violating period) unless
// allow_infeasible is set, in which case the objective formula is
// evaluated as-is; over-allocation then also reflects free-case
// overflow.
RunResult evaluate_objective(const Instance& inst, const SamplePath& path,
                             const std::vector<Decision>& decisions,
                             bool keep_diagnostics = false, bool allow_infeasible = false);

}  // namespace dualmatch
