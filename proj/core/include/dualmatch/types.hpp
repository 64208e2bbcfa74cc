#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualmatch {

// Dense m-by-l grid of doubles. Affiliates index rows, resource types
// columns; the base model has l = 1.
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

  double sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
  }
  double min() const {
    double s = std::numeric_limits<double>::infinity();
    for (double v : data_) s = v < s ? v : s;
    return s;
  }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

enum class ServiceMode { kBernoulli, kDeterministic, kIdle };

std::string to_string(ServiceMode mode);
ServiceMode service_mode_from_string(const std::string& s);

// One case: per-affiliate match rewards, the tied target (0 = free),
// and optionally the per-resource consumption of the generalized
// model. An empty consumption grid means one unit of the single
// resource type.
struct ArrivalType {
  std::vector<double> reward;
  int target = 0;
  Grid consumption;  // m x l; empty = all-ones with l = 1

  int affiliates() const { return static_cast<int>(reward.size()); }
  bool tied() const { return target != 0; }
  // Units of resource (i,j) consumed if matched to affiliate i.
  double units(int i, int j) const {
    return consumption.empty() ? 1.0 : consumption(i, j);
  }
};

struct GeneratorSpec;  // defined in generators.hpp

// Static description of a problem instance. Capacities are always
// derived as c_{ij} = rho_{ij} * T and never stored separately.
struct Instance {
  int m = 1;
  int l = 1;
  int horizon = 0;  // T
  Grid rho;         // m x l capacity ratios in (0,1]
  double epsilon = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  ServiceMode service_mode = ServiceMode::kBernoulli;
  double n_bar = 10.0;
  std::shared_ptr<const GeneratorSpec> arrival;

  double capacity(int i, int j = 0) const { return rho(i, j) * horizon; }
  double service_rate(int i, int j = 0) const { return rho(i, j) + epsilon; }
  double min_rho() const { return rho.min(); }
  // Upper bound (1+2*alpha)/min rho for the lambda duals.
  double lambda_cap() const { return (1.0 + 2.0 * alpha) / min_rho(); }
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

// Hard violations (r >= 1, rho <= 0, ...) become errors; soft ones
// (sum rho > 1, epsilon = 0) become warnings.
ValidationReport validate_instance(const Instance& inst);

// A matching decision: either one affiliate (1..m, 0 = dummy/none)
// or an explicit fractional vector used by offline solvers.
class Decision {
 public:
  Decision() = default;
  static Decision none() { return Decision(); }
  static Decision match(int affiliate) {
    Decision d;
    d.affiliate_ = affiliate;
    return d;
  }
  static Decision fractional(std::vector<double> weights) {
    Decision d;
    d.weights_ = std::move(weights);
    return d;
  }

  bool is_fractional() const { return !weights_.empty(); }
  int affiliate() const { return affiliate_; }

  // z_i with 1-based affiliate index.
  double z(int i) const {
    if (!weights_.empty()) return weights_[static_cast<size_t>(i) - 1];
    return affiliate_ == i ? 1.0 : 0.0;
  }
  double total() const {
    if (weights_.empty()) return affiliate_ == 0 ? 0.0 : 1.0;
    double s = 0.0;
    for (double v : weights_) s += v;
    return s;
  }

  friend bool operator==(const Decision&, const Decision&) = default;

 private:
  int affiliate_ = 0;
  std::vector<double> weights_;
};

// Service availability for one period. In bernoulli and idle modes
// entries are 0/1; in deterministic mode entry (i,j) is rho_{ij}.
// `effective` is filled in idle mode only (u = l + (1-l)s).
struct ServiceDraw {
  Grid s;
  Grid effective;

  double available(int i, int j) const {
    return effective.empty() ? s(i, j) : effective(i, j);
  }
};

// Evolving per-sample-path state.
struct PathState {
  int t = 0;  // completed periods
  Grid remaining;           // m x l, starts at c_{ij}; may go negative via tied cases
  Grid backlog;             // m x l
  Grid idle;                // m x l flags in {0,1}, idle mode only
  std::vector<double> cum_matched;  // per affiliate, sum of z
  Grid cum_free_consumed;   // m x l, free-case resource consumption
  Grid cum_tied_consumed;   // m x l, tied-case resource consumption
  bool stopped = false;     // stopping time T_A reached
  int stopping_time = 0;    // first t with cum_matched >= capacity, 0 = not yet

  static PathState initial(const Instance& inst);
};

struct PeriodRecord {
  double backlog_total = 0.0;
  double accepted = 0.0;        // sum of z over affiliates
  std::vector<double> phi;      // theta + lambda per affiliate if duals known
};

// One (algorithm, sample path) outcome.
struct RunResult {
  double total_reward = 0.0;
  double over_allocation = 0.0;
  double avg_backlog = 0.0;
  double objective = 0.0;
  double net_matching_reward = 0.0;  // reward - alpha * over_allocation
  int stopping_time = 0;             // T_A (== T when capacity never binds)
  std::vector<PeriodRecord> diagnostics;  // optional per-period series
};

}  // namespace dualmatch
