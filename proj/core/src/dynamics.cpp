#include "dualmatch/dynamics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dualmatch/dual_state.hpp"

namespace dualmatch {

ServiceDraw draw_service(const Instance& inst, const StreamKey& service_key, int period) {
  ServiceDraw draw;
  draw.s = Grid(inst.m, inst.l);
  if (inst.service_mode == ServiceMode::kDeterministic) {
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.l; ++j) draw.s(i, j) = inst.rho(i, j);
    return draw;
  }
  CounterRng rng(service_key, static_cast<std::uint64_t>(period));
  for (int i = 0; i < inst.m; ++i)
    for (int j = 0; j < inst.l; ++j)
      draw.s(i, j) = rng.next_bernoulli(inst.service_rate(i, j)) ? 1.0 : 0.0;
  return draw;
}

bool check_capacity_feasibility(const Instance& inst, const PathState& state,
                                const Decision& decision, const ArrivalType& arrival) {
  if (arrival.tied()) return true;
  for (int i = 0; i < inst.m; ++i) {
    double zi = decision.z(i + 1);
    if (zi == 0.0) continue;
    for (int j = 0; j < inst.l; ++j) {
      double free_used = state.cum_free_consumed(i, j) + arrival.units(i, j) * zi;
      double room = inst.capacity(i, j) - state.cum_tied_consumed(i, j);
      if (room < 0.0) room = 0.0;
      if (free_used > room + 1e-9) return false;
    }
  }
  return true;
}

Grid idle_effective(const PathState& state, const Grid& fresh) {
  Grid u = fresh;
  if (state.idle.empty()) return u;
  for (int i = 0; i < u.rows(); ++i)
    for (int j = 0; j < u.cols(); ++j) {
      double l_flag = state.idle(i, j);
      u(i, j) = l_flag + (1.0 - l_flag) * fresh(i, j);
    }
  return u;
}

PathState step_backlog(const Instance& inst, const PathState& state,
                       const Decision& decision, const ServiceDraw& draw,
                       const ArrivalType& arrival) {
  if (arrival.affiliates() != inst.m)
    throw std::invalid_argument("arrival dimension does not match instance");
  if (state.backlog.rows() != inst.m || state.backlog.cols() != inst.l)
    throw std::invalid_argument("state dimension does not match instance");
  if (draw.s.rows() != inst.m || draw.s.cols() != inst.l)
    throw std::invalid_argument("service draw dimension does not match instance");

  PathState next = state;
  next.t = state.t + 1;
  const bool idle_mode = inst.service_mode == ServiceMode::kIdle;
  if (idle_mode && next.idle.empty()) next.idle = Grid(inst.m, inst.l, 0.0);

  for (int i = 0; i < inst.m; ++i) {
    double zi = decision.z(i + 1);
    if (zi < -1e-12) throw std::invalid_argument("negative decision component");
    next.cum_matched[i] += zi;
    for (int j = 0; j < inst.l; ++j) {
      double load = arrival.units(i, j) * zi;
      if (load < 0.0) throw std::invalid_argument("negative consumption");
      next.remaining(i, j) -= load;
      if (arrival.tied())
        next.cum_tied_consumed(i, j) += load;
      else
        next.cum_free_consumed(i, j) += load;

      double q = state.backlog(i, j) + load;
      double avail;
      if (idle_mode) {
        double l_flag = state.idle.empty() ? 0.0 : state.idle(i, j);
        double u = l_flag + (1.0 - l_flag) * draw.s(i, j);
        avail = u;
        next.idle(i, j) = (q == 0.0 && (l_flag == 1.0 || draw.s(i, j) == 1.0)) ? 1.0 : 0.0;
      } else {
        avail = draw.s(i, j);
      }
      double b = q - avail;
      next.backlog(i, j) = b > 0.0 ? b : 0.0;
    }
  }

  if (!next.stopped) {
    // first period at which some resource's cumulative consumption
    // reaches its capacity (sum of z_{tau,i} >= c_i in the base model)
    for (int i = 0; i < inst.m && !next.stopped; ++i) {
      for (int j = 0; j < inst.l; ++j) {
        double used = next.cum_free_consumed(i, j) + next.cum_tied_consumed(i, j);
        if (used >= inst.capacity(i, j) - 1e-12) {
          next.stopped = true;
          next.stopping_time = next.t;
          break;
        }
      }
    }
  }
  return next;
}

DriftRecord drift_diagnostics(const Instance& inst, const std::vector<double>& prev_backlog,
                              const Decision& decision, const ServiceDraw& draw,
                              const DualState& duals, const ArrivalType& arrival) {
  const int m = inst.m;
  DriftRecord rec;
  double psi_before = 0.0, psi_after = 0.0, linear = 0.0;
  double score = 0.0;
  for (int i = 0; i < m; ++i) {
    double b = prev_backlog[i];
    double zi = decision.z(i + 1);
    double si = draw.s(i, 0);
    double b2 = b + zi - si;
    if (b2 < 0.0) b2 = 0.0;
    psi_before += 0.5 * b * b;
    psi_after += 0.5 * b2 * b2;
    linear += b * (zi - si);
    score += arrival.reward[i] * zi + duals.theta(i, 0) * (inst.rho(i, 0) - zi) +
             duals.lambda(i, 0) * (inst.rho(i, 0) - zi);
  }
  rec.psi_before = psi_before;
  rec.psi_after = psi_after;
  rec.drift = psi_after - psi_before;
  rec.lower_bound = linear;
  rec.upper_bound = linear + 0.5 * (1.0 + m);
  rec.pseudo_reward = score - duals.zeta * rec.drift;
  return rec;
}

RunResult evaluate_objective(const Instance& inst, const SamplePath& path,
                             const std::vector<Decision>& decisions,
                             bool keep_diagnostics, bool allow_infeasible) {
  const int T = path.horizon();
  if (static_cast<int>(decisions.size()) != T)
    throw std::invalid_argument("decision sequence length does not match path");

  PathState st = PathState::initial(inst);
  RunResult res;
  double backlog_sum = 0.0;
  if (keep_diagnostics) res.diagnostics.reserve(T);

  for (int t = 1; t <= T; ++t) {
    const ArrivalType& a = path.arrivals[t - 1];
    const Decision& d = decisions[t - 1];
    if (a.tied()) {
      if (std::abs(d.z(a.target) - 1.0) > 1e-9 || std::abs(d.total() - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg << "period " << t << ": tied case must be matched to affiliate " << a.target;
        throw std::runtime_error(msg.str());
      }
    } else if (!allow_infeasible && !check_capacity_feasibility(inst, st, d, a)) {
      std::ostringstream msg;
      msg << "period " << t << ": decision violates capacity feasibility";
      throw std::runtime_error(msg.str());
    }
    for (int i = 0; i < inst.m; ++i) res.total_reward += a.reward[i] * d.z(i + 1);
    st = step_backlog(inst, st, d, path.services[t - 1], a);
    backlog_sum += st.backlog.sum();
    if (keep_diagnostics) {
      PeriodRecord pr;
      pr.backlog_total = st.backlog.sum();
      pr.accepted = d.total();
      res.diagnostics.push_back(std::move(pr));
    }
  }

  // over-allocation from cumulative tallies at the horizon end
  for (int i = 0; i < inst.m; ++i) {
    for (int j = 0; j < inst.l; ++j) {
      double over = st.cum_free_consumed(i, j) + st.cum_tied_consumed(i, j) -
                    inst.capacity(i, j);
      if (over > 0.0) res.over_allocation += over;
    }
  }
  res.avg_backlog = backlog_sum / T;
  res.net_matching_reward = res.total_reward - inst.alpha * res.over_allocation;
  res.objective = res.net_matching_reward - inst.gamma * res.avg_backlog;
  res.stopping_time = st.stopped ? st.stopping_time : T;
  return res;
}

}  // namespace dualmatch
