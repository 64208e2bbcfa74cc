#pragma once

#include <vector>

#include "dualmatch/policies.hpp"

namespace dualmatch {

// Batched policy interface: all arrivals of a batch are observed at
// the batch start and decided together; cases still reach their
// affiliates one period at a time.
class BatchPolicy : public Policy {
 public:
  Decision decide(const Instance&, const PathState&, const ArrivalType&) override {
    throw std::logic_error("batched policy: use decide_batch");
  }
  void update(const Instance&, const Decision&, const ArrivalType&) override {}
  virtual std::vector<Decision> decide_batch(const Instance& inst, const PathState& state,
                                             const std::vector<ArrivalType>& batch) = 0;
};

// Inner program of one batch-iterate round, exposed so tests can
// check the LP's backlog variables against the deterministic-flow
// recursion on the fractional decisions.
struct BatchInnerSolution {
  std::vector<std::vector<double>> z;        // per free case, per affiliate
  std::vector<std::vector<double>> backlog;  // per batch period, per affiliate
};
BatchInnerSolution solve_batch_iterate_inner(const Instance& inst, const PathState& state,
                                             const std::vector<ArrivalType>& batch,
                                             const DualState& duals, double zeta);

// One LP over the whole batch maximizing the sum of adjusted scores,
// then a single batched dual update.
class RoLearningBatchPolicy : public BatchPolicy {
 public:
  RoLearningBatchPolicy(EtaSchedule eta, double zeta, int batch)
      : eta_(eta), zeta_(zeta), batch_(batch) {}
  std::string name() const override { return "ro-learning-b"; }
  int batch_size() const override { return batch_; }
  const DualState* duals() const override { return &duals_; }
  std::vector<Decision> decide_batch(const Instance&, const PathState&,
                                     const std::vector<ArrivalType>&) override;
  void reset(const Instance& inst, const StreamKey&) override {
    duals_ = DualState::initial(inst, eta_, zeta_);
  }

 private:
  EtaSchedule eta_;
  double zeta_;
  int batch_;
  DualState duals_;
};

// L rounds of primal-dual iteration per batch: the primal LP adds the
// within-batch backlog cost under the deterministic service flow and
// the over-allocation penalty; each dual step uses eta/L; the last
// fractional iterate is rounded per case.
class RoLearningBatchIteratePolicy : public BatchPolicy {
 public:
  RoLearningBatchIteratePolicy(EtaSchedule eta, double zeta, int batch, int iterations)
      : eta_(eta), zeta_(zeta), batch_(batch), iterations_(iterations) {
    if (iterations_ < 1) throw std::invalid_argument("L must be >= 1");
  }
  std::string name() const override { return "ro-learning-b-iterate"; }
  int batch_size() const override { return batch_; }
  const DualState* duals() const override { return &duals_; }
  std::vector<Decision> decide_batch(const Instance&, const PathState&,
                                     const std::vector<ArrivalType>&) override;
  void reset(const Instance& inst, const StreamKey&) override {
    duals_ = DualState::initial(inst, eta_, zeta_);
  }

 private:
  EtaSchedule eta_;
  double zeta_;
  int batch_;
  int iterations_;
  DualState duals_;
};

}  // namespace dualmatch
