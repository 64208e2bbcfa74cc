#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dualmatch/dynamics.hpp"
#include "dualmatch/types.hpp"

namespace dualmatch {

// Hindsight solution of the offline program on one sample path.
struct OfflineSolution {
  std::vector<Decision> decisions;  // length T; tied periods are forced
  std::vector<Grid> backlog;        // replayed recursion values (m x l per period)
  double objective = 0.0;

  // Dual certificate of the LP (base and generalized layout is m x l).
  bool has_certificate = false;
  Grid theta;
  Grid lambda;
  std::vector<Grid> beta;  // per period
  double dual_value = 0.0;  // dual objective evaluated at the certificate
  bool g_event = false;     // tied consumption within capacity everywhere
};

// Exact LP solve of the offline benchmark (capacity feasibility at T,
// backlog inequalities, over-allocation linearized). Bernoulli and
// deterministic service modes; the idle benchmark is enumeration-only.
OfflineSolution solve_opt_lp(const Instance& inst, const SamplePath& path);

// Specialized exact solver for single-affiliate base-model paths with
// no tied cases: Lagrangian relaxation of the capacity constraint plus
// an exact per-path DP over integer backlog levels. Returns the same
// optimal value as the LP.
bool single_affiliate_fast_eligible(const Instance& inst, const SamplePath& path);
OfflineSolution solve_opt_single(const Instance& inst, const SamplePath& path);

// Dispatcher: fast path when eligible, LP otherwise.
OfflineSolution solve_opt(const Instance& inst, const SamplePath& path);

// Exhaustive search over integral decision sequences (T <= 12, m <= 3).
// Supports every service mode, including idle.
OfflineSolution brute_force_opt(const Instance& inst, const SamplePath& path);

// Surrogate primal: drops the backlog term entirely; the "Opt Emp"
// benchmark. Services are irrelevant.
OfflineSolution solve_surrogate_primal(const Instance& inst,
                                       const std::vector<ArrivalType>& arrivals);

// Static dual problem over an explicit discrete type distribution:
//   min over the box of E[max_z (w - theta - lambda).z] + rho.(theta+lambda)
struct StaticDualResult {
  Grid theta;
  Grid lambda;
  double value = 0.0;  // D(nu*)
  double phi(int i = 0) const { return theta(i, 0) + lambda(i, 0); }
};
StaticDualResult solve_static_dual(const Instance& inst,
                                   const std::vector<ArrivalType>& support,
                                   const std::vector<double>& probs);

// Empirical single-affiliate no-tied version in sum form:
//   minimize sum_k (w_k - phi)_+ + rho * n * phi
// returning the smallest minimizer.
struct EmpiricalDualResult {
  double phi = 0.0;
  double value = 0.0;
};
EmpiricalDualResult empirical_static_dual(const std::vector<double>& rewards, double rho);

}  // namespace dualmatch
