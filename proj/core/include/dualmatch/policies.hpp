#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dualmatch/dual_state.hpp"
#include "dualmatch/dynamics.hpp"
#include "dualmatch/rng.hpp"
#include "dualmatch/trace.hpp"
#include "dualmatch/types.hpp"

namespace dualmatch {

// Per-arrival policy interface. decide() sees the state before the
// period (backlog b_{t-1}, remaining capacity); update() runs after
// the decision and must not look at the service draw -- dual updates
// depend on the decision only.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual Decision decide(const Instance& inst, const PathState& state,
                          const ArrivalType& arrival) = 0;
  virtual void update(const Instance& inst, const Decision& decision,
                      const ArrivalType& arrival) = 0;
  // Batch size per decision round; 0 means one-by-one.
  virtual int batch_size() const { return 0; }
  virtual const DualState* duals() const { return nullptr; }
  // Fresh state for a new sample path.
  virtual void reset(const Instance& inst, const StreamKey& algo_key) = 0;
};

struct AlgorithmConfig {
  std::string name = "ca-dl";
  // Step sizes: fixed eta for CA-DL/RO-Learning, k for the 1/sqrt(t)
  // schedule of CO-DL. Negative = use the paper's default scaling
  // (eta = 1/sqrt(T), k = 1).
  double eta = -1.0;
  double zeta = -1.0;  // negative = 10/sqrt(T) stable, sqrt(gamma/T) near-critical
  double k = 1.0;
  // Sampling parameters.
  std::shared_ptr<const Trace> pool;
  int replications = 5;
  // Batch parameters.
  int batch = 30;
  int iterations = 10;  // L
};

// Resolved per-instance step sizes following the paper's defaults.
double default_eta(const Instance& inst);
double default_zeta(const Instance& inst);

// Decision rules as free functions over an explicit dual state.
// cadl: tied forced; free cases take the best adjusted score
// w - (theta + lambda + zeta*b) when it is non-negative and every
// affiliate still has capacity, otherwise the dummy.
Decision cadl_decide(const Instance& inst, const PathState& state, const ArrivalType& arrival,
                     const DualState& duals, double zeta);
// codl: the same rule without the backlog term (and so without
// reading the backlog at all).
Decision codl_decide(const Instance& inst, const PathState& state, const ArrivalType& arrival,
                     const DualState& duals);
// ro-learning: no dummy and no global gate; the best adjusted score,
// possibly negative, among affiliates with remaining capacity.
Decision ro_learning_decide(const Instance& inst, const PathState& state,
                            const ArrivalType& arrival, const DualState& duals, double zeta);
// One multiplicative-weights update with gradient z - rho.
void dual_update(DualState& duals, const Instance& inst, const Decision& decision);

class CadlPolicy : public Policy {
 public:
  CadlPolicy(EtaSchedule eta, double zeta) : eta_(eta), zeta_(zeta) {}
  std::string name() const override { return "ca-dl"; }
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

class CodlPolicy : public Policy {
 public:
  explicit CodlPolicy(double k) : k_(k) {}
  std::string name() const override { return "co-dl"; }
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

class RoLearningPolicy : public Policy {
 public:
  RoLearningPolicy(EtaSchedule eta, double zeta) : eta_(eta), zeta_(zeta) {}
  std::string name() const override { return "ro-learning"; }
  Decision decide(const Instance&, const PathState&, const ArrivalType&) override;
  void update(const Instance&, const Decision&, const ArrivalType&) override;
  const DualState* duals() const override { return &duals_; }
  void reset(const Instance& inst, const StreamKey&) override {
    duals_ = DualState::initial(inst, eta_, zeta_);
  }

 private:
  EtaSchedule eta_;
  double zeta_;
  DualState duals_;
};

class RandomPolicy : public Policy {
 public:
  std::string name() const override { return "random"; }
  Decision decide(const Instance&, const PathState&, const ArrivalType&) override;
  void update(const Instance&, const Decision&, const ArrivalType&) override {}
  void reset(const Instance&, const StreamKey& algo_key) override {
    key_ = algo_key;
    t_ = 0;
  }

 private:
  StreamKey key_;
  int t_ = 0;
};

class MinBacklogPolicy : public Policy {
 public:
  std::string name() const override { return "min-backlog"; }
  Decision decide(const Instance&, const PathState&, const ArrivalType&) override;
  void update(const Instance&, const Decision&, const ArrivalType&) override {}
  void reset(const Instance&, const StreamKey& algo_key) override {
    key_ = algo_key;
    t_ = 0;
  }

 private:
  StreamKey key_;
  int t_ = 0;
};

// Re-solving benchmark: simulates futures from a pool trace, solves
// the net-matching-reward program with the waiting-time penalty on
// the current case, and votes over K replications.
class SamplingPolicy : public Policy {
 public:
  SamplingPolicy(std::shared_ptr<const Trace> pool, int replications)
      : pool_(std::move(pool)), replications_(replications) {}
  std::string name() const override { return "sampling"; }
  Decision decide(const Instance&, const PathState&, const ArrivalType&) override;
  void update(const Instance&, const Decision&, const ArrivalType&) override {}
  void reset(const Instance&, const StreamKey& algo_key) override {
    key_ = algo_key;
    t_ = 0;
  }

 private:
  std::shared_ptr<const Trace> pool_;
  int replications_;
  StreamKey key_;
  int t_ = 0;
};

// Waiting-time penalty applied to the current case's reward:
//   w - (gamma/T) * ceil((b - rho)/rho) * 1[b > 0].
double sampling_adjusted_reward(double w, double backlog, double rho, double gamma, int T);

// First-step decision of the re-solving program given an explicit
// future; exposed so the pool-sampling layer and tests share it.
Decision sampling_inner_decide(const Instance& inst, const PathState& state,
                               const ArrivalType& arrival,
                               const std::vector<ArrivalType>& future);

std::unique_ptr<Policy> make_policy(const Instance& inst, const AlgorithmConfig& cfg);

// Stream salt derived from a policy name, used to give randomized
// policies their own substream of the algorithm randomness.
std::uint64_t policy_salt(const std::string& name);

}  // namespace dualmatch
