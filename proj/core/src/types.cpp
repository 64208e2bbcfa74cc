#include "dualmatch/types.hpp"

#include <sstream>

#include "dualmatch/generators.hpp"
#include "dualmatch/trace.hpp"

namespace dualmatch {

std::string to_string(ServiceMode mode) {
  switch (mode) {
    case ServiceMode::kBernoulli: return "bernoulli";
    case ServiceMode::kDeterministic: return "deterministic";
    case ServiceMode::kIdle: return "idle";
  }
  return "bernoulli";
}

ServiceMode service_mode_from_string(const std::string& s) {
  if (s == "bernoulli") return ServiceMode::kBernoulli;
  if (s == "deterministic") return ServiceMode::kDeterministic;
  if (s == "idle") return ServiceMode::kIdle;
  throw std::invalid_argument("unknown service mode: " + s);
}

PathState PathState::initial(const Instance& inst) {
  PathState st;
  st.t = 0;
  st.remaining = Grid(inst.m, inst.l);
  for (int i = 0; i < inst.m; ++i)
    for (int j = 0; j < inst.l; ++j) st.remaining(i, j) = inst.capacity(i, j);
  st.backlog = Grid(inst.m, inst.l, 0.0);
  if (inst.service_mode == ServiceMode::kIdle) st.idle = Grid(inst.m, inst.l, 0.0);
  st.cum_matched.assign(inst.m, 0.0);
  st.cum_free_consumed = Grid(inst.m, inst.l, 0.0);
  st.cum_tied_consumed = Grid(inst.m, inst.l, 0.0);
  return st;
}

ValidationReport validate_instance(const Instance& inst) {
  ValidationReport rep;
  auto err = [&rep](const std::string& s) { rep.errors.push_back(s); };
  auto warn = [&rep](const std::string& s) { rep.warnings.push_back(s); };

  if (inst.m < 1) err("m must be >= 1");
  if (inst.l < 1) err("l must be >= 1");
  if (inst.horizon < 1) err("T must be >= 1");
  if (inst.alpha < 0.0) err("alpha must be >= 0");
  if (inst.gamma < 0.0) err("gamma must be >= 0");
  if (inst.epsilon < 0.0) err("epsilon must be >= 0");
  if (inst.n_bar <= 0.0) err("n_bar must be > 0");
  if (inst.rho.rows() != inst.m || inst.rho.cols() != inst.l)
    err("rho must be an m x l matrix");
  if (!rep.errors.empty()) return rep;

  for (int i = 0; i < inst.m; ++i) {
    for (int j = 0; j < inst.l; ++j) {
      std::ostringstream at;
      at << "(" << i + 1 << "," << j + 1 << ")";
      if (inst.rho(i, j) <= 0.0) err("rho" + at.str() + " must be > 0");
      else if (inst.rho(i, j) > 1.0) err("rho" + at.str() + " must be <= 1");
      if (inst.rho(i, j) + inst.epsilon >= 1.0)
        err("service rate r" + at.str() + " = rho + epsilon must be < 1");
    }
  }
  for (int j = 0; j < inst.l; ++j) {
    double s = 0.0;
    for (int i = 0; i < inst.m; ++i) s += inst.rho(i, j);
    if (s > 1.0 + 1e-12) {
      std::ostringstream msg;
      msg << "sum of rho over affiliates is " << s << " > 1 for resource type " << j + 1;
      warn(msg.str());
    }
  }
  if (inst.epsilon == 0.0) warn("epsilon = 0: near-critical regime");

  // alpha only matters when tied cases can force over-allocation
  bool may_have_tied = true;
  if (inst.arrival) {
    switch (inst.arrival->kind) {
      case GeneratorKind::kUniformSingle:
      case GeneratorKind::kLbThreeReward:
      case GeneratorKind::kLbDeterministic:
      case GeneratorKind::kLbBernoulli:
        may_have_tied = false;
        break;
      case GeneratorKind::kSyntheticMulti: {
        may_have_tied = false;
        for (double p : inst.arrival->tied_probs)
          if (p > 0.0) may_have_tied = true;
        break;
      }
      case GeneratorKind::kTrace: {
        may_have_tied = false;
        if (inst.arrival->trace)
          for (const auto& a : inst.arrival->trace->arrivals)
            if (a.tied()) may_have_tied = true;
        break;
      }
      default:
        break;
    }
  }
  if (may_have_tied && inst.alpha < 1.0)
    warn("alpha < 1: over-allocation cheaper than a unit reward");

  if (inst.arrival) {
    for (const auto& e : validate_generator(*inst.arrival, inst)) rep.errors.push_back(e);
  }
  return rep;
}

}  // namespace dualmatch
