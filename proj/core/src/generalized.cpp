#include "dualmatch/generalized.hpp"

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

Decision generalized_decide(const Instance& inst, const PathState& state,
                            const ArrivalType& arrival, const DualState& duals, double zeta) {
  if (arrival.tied()) return Decision::match(arrival.target);
  if (!all_resources_open(inst, state)) return Decision::none();
  int best = -1;
  double best_score = 0.0;
  for (int i = 0; i < inst.m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < inst.l; ++j) {
      double adj = duals.theta(i, j) + duals.lambda(i, j) + zeta * state.backlog(i, j);
      acc += arrival.units(i, j) * adj;
    }
    double score = arrival.reward[i] - acc;
    if (best < 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  if (best_score < 0.0) return Decision::none();
  if (!free_match_feasible(inst, state, arrival, best)) return Decision::none();
  return Decision::match(best + 1);
}

void generalized_update(const Instance& inst, const Decision& decision,
                        const ArrivalType& arrival, DualState& duals) {
  double eta_t = duals.eta.at(duals.t);
  for (int i = 0; i < inst.m; ++i) {
    double zi = decision.z(i + 1);
    for (int j = 0; j < inst.l; ++j)
      duals.update_component(i, j, arrival.units(i, j) * zi - inst.rho(i, j), eta_t);
  }
  ++duals.t;
}

}  // namespace

Decision CadlMPolicy::decide(const Instance& inst, const PathState& state,
                             const ArrivalType& arrival) {
  return generalized_decide(inst, state, arrival, duals_, zeta_);
}

void CadlMPolicy::update(const Instance& inst, const Decision& decision,
                         const ArrivalType& arrival) {
  generalized_update(inst, decision, arrival, duals_);
}

Decision CodlMPolicy::decide(const Instance& inst, const PathState& state,
                             const ArrivalType& arrival) {
  return generalized_decide(inst, state, arrival, duals_, 0.0);
}

void CodlMPolicy::update(const Instance& inst, const Decision& decision,
                         const ArrivalType& arrival) {
  generalized_update(inst, decision, arrival, duals_);
}

PathState idle_step(const Instance& inst, const PathState& state, const Decision& decision,
                    const Grid& fresh_draw, const ArrivalType& arrival) {
  if (inst.service_mode != ServiceMode::kIdle)
    throw std::invalid_argument("idle_step requires the idle service mode");
  ServiceDraw draw;
  draw.s = fresh_draw;
  return step_backlog(inst, state, decision, draw, arrival);
}

}  // namespace dualmatch
