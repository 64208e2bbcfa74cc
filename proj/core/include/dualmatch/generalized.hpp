#pragma once

#include "dualmatch/policies.hpp"

namespace dualmatch {

// Multi-knapsack congestion-aware dual learning: scores subtract the
// per-resource-type opportunity cost sum_j n_{tij} (theta + lambda +
// zeta*b); duals update with gradient n_{tij} z_i - rho_{ij}. With
// l = 1 and unit consumption the run is bit-identical to CadlPolicy.
class CadlMPolicy : public Policy {
 public:
  CadlMPolicy(EtaSchedule eta, double zeta) : eta_(eta), zeta_(zeta) {}
  std::string name() const override { return "ca-dl-m"; }
  Decision decide(const Instance&, const PathState&, const ArrivalType&) override;
  void update(const Instance&, const Decision&, const ArrivalType&) override;
  const DualState* duals() const override { return &duals_; }
  DualState* mutable_duals() { return &duals_; }
  void reset(const Instance& inst, const StreamKey&) override {
    duals_ = DualState::initial(inst, eta_, zeta_);
  }

 private:
  EtaSchedule eta_;
  double zeta_;
  DualState duals_;
};

// CO-DL^M: the same with zeta = 0 and eta_t = k/sqrt(t).
class CodlMPolicy : public Policy {
 public:
  explicit CodlMPolicy(double k) : k_(k) {}
  std::string name() const override { return "co-dl-m"; }
  Decision decide(const Instance&, const PathState&, const ArrivalType&) override;
  void update(const Instance&, const Decision&, const ArrivalType&) override;
  const DualState* duals() const override { return &duals_; }
  void reset(const Instance& inst, const StreamKey&) override {
    duals_ = DualState::initial(inst, EtaSchedule::inverse_sqrt(k_), 0.0);
  }

 private:
  double k_;
  DualState duals_;
};

// One period of the idle-server dynamics: q = b + n.z, effective
// availability u = l + (1-l)s, b' = (q-u)_+, idle flags persist only
// through empty periods. Exposed for callers that drive the idle
// model directly; step_backlog dispatches here for idle instances.
PathState idle_step(const Instance& inst, const PathState& state, const Decision& decision,
                    const Grid& fresh_draw, const ArrivalType& arrival);

}  // namespace dualmatch
