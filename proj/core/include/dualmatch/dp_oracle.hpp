#pragma once

#include <vector>

namespace dualmatch {

// Finite-horizon optimal online policy on the near-critical
// single-affiliate instance: rewards Bernoulli(0.5), service
// Bernoulli(0.5), capacity ignored, per-period payoff
// z - (gamma/T) * b_{t-1}. Exact backward induction over backlog
// levels 0..T.
struct DpOracleResult {
  double value = 0.0;              // E[DP_T(gamma)] from b_0 = 0
  std::vector<int> thresholds;     // accept a reward-1 arrival iff b < K_t
  bool threshold_type = true;      // false if some period's accept set was not a prefix
  int violations = 0;              // number of (t,b) prefix violations observed
};

DpOracleResult dp_oracle_single_affiliate(int T, double gamma);

}  // namespace dualmatch
