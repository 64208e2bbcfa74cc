#include "dualmatch/dp_oracle.hpp"

#include <stdexcept>

namespace dualmatch {

DpOracleResult dp_oracle_single_affiliate(int T, double gamma) {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (T > 5000) throw std::invalid_argument("DP oracle capped at T = 5000");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");

  const double hold = gamma / T;
  // V[b] = value-to-go from backlog b at the start of the period.
  std::vector<double> v(T + 2, 0.0), nv(T + 2, 0.0);
  DpOracleResult res;
  res.thresholds.assign(T + 1, 0);

  for (int t = T; t >= 1; --t) {
    int threshold = 0;
    bool rejecting = false;
    for (int b = 0; b <= T; ++b) {
      int down = b > 0 ? b - 1 : 0;
      double cont_reject = 0.5 * (v[down] + v[b]);
      double reject_val = -hold * b + cont_reject;
      double accept_val = 1.0 - hold * b + 0.5 * (v[b] + v[b + 1]);
      bool accept = accept_val >= reject_val;
      // arrivals are reward-1 with probability one half; reward-0
      // arrivals are rejected outright but still pay the holding cost
      nv[b] = 0.5 * reject_val + 0.5 * (accept ? accept_val : reject_val);
      // The policy table covers reachable states only (b <= t-1 when
      // starting from an empty queue). Exact ties are indifferent, so
      // only a strict preference for accepting above a rejection
      // counts as a non-threshold state.
      if (b <= t - 1) {
        if (accept_val > reject_val + 1e-9) {
          if (rejecting) {
            res.threshold_type = false;
            ++res.violations;
          } else {
            threshold = b + 1;
          }
        } else if (!accept) {
          rejecting = true;
        }
      }
    }
    res.thresholds[t] = threshold;
    std::swap(v, nv);
  }
  res.value = v[0];
  return res;
}

}  // namespace dualmatch
