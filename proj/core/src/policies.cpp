#include "dualmatch/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dualmatch/batch_policies.hpp"
#include "dualmatch/generalized.hpp"
#include "dualmatch/simplex.hpp"

namespace dualmatch {

namespace {

bool all_resources_open(const Instance& inst, const PathState& state) {
  for (int i = 0; i < inst.m; ++i)
    for (int j = 0; j < inst.l; ++j)
      if (state.remaining(i, j) <= 0.0) return false;
  return true;
}

bool free_match_feasible(const Instance& inst, const PathState& state,
                         const ArrivalType& arrival, int i) {
  for (int j = 0; j < inst.l; ++j) {
    double room = inst.capacity(i, j) - state.cum_tied_consumed(i, j);
    if (room < 0.0) room = 0.0;
    if (state.cum_free_consumed(i, j) + arrival.units(i, j) > room + 1e-9) return false;
  }
  return true;
}

std::uint64_t name_salt(std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return h;
}

}  // namespace

double default_eta(const Instance& inst) {
  return 1.0 / std::sqrt(static_cast<double>(inst.horizon));
}

double default_zeta(const Instance& inst) {
  // 10/sqrt(T) in the stable regime, sqrt(gamma/T) near-critical
  double sqrt_T = std::sqrt(static_cast<double>(inst.horizon));
  if (inst.epsilon > 0.0 && inst.epsilon * sqrt_T > 1.0) return 10.0 / sqrt_T;
  return std::sqrt(inst.gamma / inst.horizon);
}

Decision cadl_decide(const Instance& inst, const PathState& state, const ArrivalType& arrival,
                     const DualState& duals, double zeta) {
  if (arrival.tied()) return Decision::match(arrival.target);
  if (!all_resources_open(inst, state)) return Decision::none();
  int best = -1;
  double best_score = 0.0;
  for (int i = 0; i < inst.m; ++i) {
    double adj = duals.theta(i, 0) + duals.lambda(i, 0) + zeta * state.backlog(i, 0);
    double score = arrival.reward[i] - adj;
    if (best < 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best_score < 0.0) return Decision::none();
  if (!free_match_feasible(inst, state, arrival, best)) return Decision::none();
  return Decision::match(best + 1);
}

Decision codl_decide(const Instance& inst, const PathState& state, const ArrivalType& arrival,
                     const DualState& duals) {
  if (arrival.tied()) return Decision::match(arrival.target);
  if (!all_resources_open(inst, state)) return Decision::none();
  int best = -1;
  double best_score = 0.0;
  for (int i = 0; i < inst.m; ++i) {
    double adj = duals.theta(i, 0) + duals.lambda(i, 0);
    double score = arrival.reward[i] - adj;
    if (best < 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best_score < 0.0) return Decision::none();
  if (!free_match_feasible(inst, state, arrival, best)) return Decision::none();
  return Decision::match(best + 1);
}

Decision ro_learning_decide(const Instance& inst, const PathState& state,
                            const ArrivalType& arrival, const DualState& duals, double zeta) {
  if (arrival.tied()) return Decision::match(arrival.target);
  int best = -1;
  double best_score = 0.0;
  for (int i = 0; i < inst.m; ++i) {
    bool open = true;
    for (int j = 0; j < inst.l; ++j)
      if (state.remaining(i, j) <= 0.0) open = false;
    if (!open || !free_match_feasible(inst, state, arrival, i)) continue;
    double adj = duals.theta(i, 0) + duals.lambda(i, 0) + zeta * state.backlog(i, 0);
    double score = arrival.reward[i] - adj;
    if (best < 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best < 0) return Decision::none();
  return Decision::match(best + 1);
}

void dual_update(DualState& duals, const Instance& inst, const Decision& decision) {
  double eta_t = duals.eta.at(duals.t);
  for (int i = 0; i < inst.m; ++i)
    duals.update_component(i, 0, decision.z(i + 1) - inst.rho(i, 0), eta_t);
  ++duals.t;
}

Decision CadlPolicy::decide(const Instance& inst, const PathState& state,
                            const ArrivalType& arrival) {
  return cadl_decide(inst, state, arrival, duals_, zeta_);
}

void CadlPolicy::update(const Instance& inst, const Decision& decision, const ArrivalType&) {
  dual_update(duals_, inst, decision);
}

Decision CodlPolicy::decide(const Instance& inst, const PathState& state,
                            const ArrivalType& arrival) {
  return codl_decide(inst, state, arrival, duals_);
}

void CodlPolicy::update(const Instance& inst, const Decision& decision, const ArrivalType&) {
  dual_update(duals_, inst, decision);
}

Decision RoLearningPolicy::decide(const Instance& inst, const PathState& state,
                                  const ArrivalType& arrival) {
  return ro_learning_decide(inst, state, arrival, duals_, zeta_);
}

void RoLearningPolicy::update(const Instance& inst, const Decision& decision,
                              const ArrivalType&) {
  dual_update(duals_, inst, decision);
}

Decision RandomPolicy::decide(const Instance& inst, const PathState& state,
                              const ArrivalType& arrival) {
  ++t_;
  if (arrival.tied()) return Decision::match(arrival.target);
  double total = 0.0;
  for (int i = 0; i < inst.m; ++i)
    if (state.remaining(i, 0) > 0.0 && free_match_feasible(inst, state, arrival, i))
      total += state.remaining(i, 0);
  if (total <= 0.0) return Decision::none();
  CounterRng rng(key_, static_cast<std::uint64_t>(t_));
  double u = rng.next_double() * total;
  double acc = 0.0;
  int last = -1;
  for (int i = 0; i < inst.m; ++i) {
    if (state.remaining(i, 0) <= 0.0 || !free_match_feasible(inst, state, arrival, i)) continue;
    last = i;
    acc += state.remaining(i, 0);
    if (u < acc) return Decision::match(i + 1);
  }
  return Decision::match(last + 1);
}

Decision MinBacklogPolicy::decide(const Instance& inst, const PathState& state,
                                  const ArrivalType& arrival) {
  ++t_;
  if (arrival.tied()) return Decision::match(arrival.target);
  double min_b = 0.0;
  bool any = false;
  for (int i = 0; i < inst.m; ++i) {
    if (state.remaining(i, 0) <= 0.0 || !free_match_feasible(inst, state, arrival, i)) continue;
    double b = state.backlog(i, 0);
    if (!any || b < min_b) {
      min_b = b;
      any = true;
    }
  }
  if (!any) return Decision::none();
  // ties broken at random in proportion to remaining capacity
  double total = 0.0;
  for (int i = 0; i < inst.m; ++i)
    if (state.remaining(i, 0) > 0.0 && state.backlog(i, 0) == min_b &&
        free_match_feasible(inst, state, arrival, i))
      total += state.remaining(i, 0);
  CounterRng rng(key_, static_cast<std::uint64_t>(t_));
  double u = rng.next_double() * total;
  double acc = 0.0;
  int last = -1;
  for (int i = 0; i < inst.m; ++i) {
    if (state.remaining(i, 0) <= 0.0 || state.backlog(i, 0) != min_b ||
        !free_match_feasible(inst, state, arrival, i))
      continue;
    last = i;
    acc += state.remaining(i, 0);
    if (u < acc) return Decision::match(i + 1);
  }
  return Decision::match(last + 1);
}

double sampling_adjusted_reward(double w, double backlog, double rho, double gamma, int T) {
  if (backlog <= 0.0) return w;
  return w - gamma / T * std::ceil((backlog - rho) / rho);
}

Decision sampling_inner_decide(const Instance& inst, const PathState& state,
                               const ArrivalType& arrival,
                               const std::vector<ArrivalType>& future) {
  if (inst.l != 1) throw std::invalid_argument("sampling supports the base model only");
  if (arrival.tied()) return Decision::match(arrival.target);

  const int m = inst.m;
  LpProblem lp;
  // decision variables for the current case and each free future case
  std::vector<int> zcol_current(m);
  for (int i = 0; i < m; ++i) {
    double w_adj = sampling_adjusted_reward(arrival.reward[i], state.backlog(i, 0),
                                            inst.rho(i, 0), inst.gamma, inst.horizon);
    zcol_current[i] = lp.add_var(w_adj);
  }
  std::vector<std::vector<int>> zcol_future;
  std::vector<double> tied_count(m, 0.0);
  for (const ArrivalType& a : future) {
    if (a.tied()) {
      tied_count[a.target - 1] += 1.0;
      continue;
    }
    std::vector<int> cols(m);
    for (int i = 0; i < m; ++i) cols[i] = lp.add_var(a.reward[i]);
    zcol_future.push_back(std::move(cols));
  }
  std::vector<int> ocol(m);
  for (int i = 0; i < m; ++i) ocol[i] = lp.add_var(-inst.alpha);

  for (int i = 0; i < m; ++i) {
    // hard constraint and over-allocation against the remaining
    // free-case room at decision time
    double room = inst.capacity(i, 0) - state.cum_tied_consumed(i, 0) - tied_count[i];
    if (room < 0.0) room = 0.0;
    room -= state.cum_free_consumed(i, 0);
    std::vector<std::pair<int, double>> cap_terms;
    cap_terms.emplace_back(zcol_current[i], 1.0);
    for (const auto& cols : zcol_future) cap_terms.emplace_back(cols[i], 1.0);
    std::vector<std::pair<int, double>> over_terms = cap_terms;
    over_terms.emplace_back(ocol[i], -1.0);
    lp.add_row(std::move(cap_terms), room > 0.0 ? room : 0.0);
    lp.add_row(std::move(over_terms), state.remaining(i, 0) - tied_count[i]);
  }
  {
    std::vector<std::pair<int, double>> simplex_terms;
    for (int i = 0; i < m; ++i) simplex_terms.emplace_back(zcol_current[i], 1.0);
    lp.add_row(std::move(simplex_terms), 1.0);
  }
  for (const auto& cols : zcol_future) {
    std::vector<std::pair<int, double>> simplex_terms;
    for (int i = 0; i < m; ++i) simplex_terms.emplace_back(cols[i], 1.0);
    lp.add_row(std::move(simplex_terms), 1.0);
  }

  LpSolution sol = solve_lp(lp);
  if (!sol.optimal) throw std::runtime_error("sampling inner program failed: " + sol.error);

  int best = -1;
  double best_z = 1e-9;
  for (int i = 0; i < m; ++i) {
    double z = sol.x[zcol_current[i]];
    if (z > best_z) {
      best_z = z;
      best = i;
    }
  }
  if (best < 0) return Decision::none();
  Decision d = Decision::match(best + 1);
  if (!check_capacity_feasibility(inst, state, d, arrival)) return Decision::none();
  return d;
}

Decision SamplingPolicy::decide(const Instance& inst, const PathState& state,
                                const ArrivalType& arrival) {
  ++t_;
  if (arrival.tied()) return Decision::match(arrival.target);
  if (!pool_ || pool_->arrivals.empty()) throw std::runtime_error("sampling pool is empty");

  const int remaining_periods = inst.horizon - t_;
  std::vector<int> votes(inst.m + 1, 0);
  std::vector<ArrivalType> future;
  for (int rep = 0; rep < replications_; ++rep) {
    CounterRng rng(key_, (static_cast<std::uint64_t>(t_) << 16) | static_cast<std::uint64_t>(rep));
    future.clear();
    future.reserve(remaining_periods);
    for (int k = 0; k < remaining_periods; ++k) {
      std::uint64_t idx = rng.next_below(pool_->arrivals.size());
      future.push_back(pool_->arrivals[idx]);
    }
    Decision d = sampling_inner_decide(inst, state, arrival, future);
    votes[d.affiliate()] += 1;
  }
  int best = -1, best_votes = 0;
  for (int i = 1; i <= inst.m; ++i) {
    if (votes[i] > best_votes) {
      best_votes = votes[i];
      best = i;
    }
  }
  if (best < 0 || votes[0] > best_votes) return Decision::none();
  Decision d = Decision::match(best);
  if (!check_capacity_feasibility(inst, state, d, arrival)) return Decision::none();
  return d;
}

std::unique_ptr<Policy> make_policy(const Instance& inst, const AlgorithmConfig& cfg) {
  double eta = cfg.eta >= 0.0 ? cfg.eta : default_eta(inst);
  double zeta = cfg.zeta >= 0.0 ? cfg.zeta : default_zeta(inst);
  const std::string& n = cfg.name;
  if (n == "ca-dl") return std::make_unique<CadlPolicy>(EtaSchedule::fixed(eta), zeta);
  if (n == "co-dl") return std::make_unique<CodlPolicy>(cfg.k);
  if (n == "ro-learning")
    return std::make_unique<RoLearningPolicy>(EtaSchedule::fixed(eta), zeta);
  if (n == "random") return std::make_unique<RandomPolicy>();
  if (n == "min-backlog") return std::make_unique<MinBacklogPolicy>();
  if (n == "sampling") {
    if (!cfg.pool) throw std::invalid_argument("sampling needs a pool trace");
    return std::make_unique<SamplingPolicy>(cfg.pool, cfg.replications);
  }
  if (n == "ro-learning-b")
    return std::make_unique<RoLearningBatchPolicy>(EtaSchedule::fixed(eta), zeta, cfg.batch);
  if (n == "ro-learning-b-iterate")
    return std::make_unique<RoLearningBatchIteratePolicy>(EtaSchedule::fixed(eta), zeta,
                                                          cfg.batch, cfg.iterations);
  if (n == "ca-dl-m") return std::make_unique<CadlMPolicy>(EtaSchedule::fixed(eta), zeta);
  if (n == "co-dl-m") return std::make_unique<CodlMPolicy>(cfg.k);
  throw std::invalid_argument("unknown algorithm: " + n);
}

std::uint64_t policy_salt(const std::string& name) { return name_salt(name); }

}  // namespace dualmatch
