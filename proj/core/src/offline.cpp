#include "dualmatch/offline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dualmatch/simplex.hpp"

namespace dualmatch {

namespace {

double tied_load(const ArrivalType& a, int i, int j) {
  return (a.tied() && a.target == i + 1) ? a.units(i, j) : 0.0;
}

// Backlog recursion replayed on a (possibly fractional) profile.
std::vector<Grid> replay_backlog(const Instance& inst, const SamplePath& path,
                                 const std::vector<Decision>& decisions) {
  const int T = path.horizon();
  std::vector<Grid> out;
  out.reserve(T);
  Grid b(inst.m, inst.l, 0.0);
  for (int t = 0; t < T; ++t) {
    const ArrivalType& a = path.arrivals[t];
    for (int i = 0; i < inst.m; ++i) {
      for (int j = 0; j < inst.l; ++j) {
        double q = b(i, j) + a.units(i, j) * decisions[t].z(i + 1) - path.services[t].s(i, j);
        b(i, j) = q > 0.0 ? q : 0.0;
      }
    }
    out.push_back(b);
  }
  return out;
}

double profile_objective(const Instance& inst, const SamplePath& path,
                         const std::vector<Decision>& decisions) {
  const int T = path.horizon();
  double reward = 0.0;
  Grid used(inst.m, inst.l, 0.0);
  for (int t = 0; t < T; ++t) {
    const ArrivalType& a = path.arrivals[t];
    for (int i = 0; i < inst.m; ++i) {
      double z = decisions[t].z(i + 1);
      reward += a.reward[i] * z;
      for (int j = 0; j < inst.l; ++j) used(i, j) += a.units(i, j) * z;
    }
  }
  double over = 0.0;
  for (int i = 0; i < inst.m; ++i)
    for (int j = 0; j < inst.l; ++j)
      over += std::max(0.0, used(i, j) - inst.capacity(i, j));
  double backlog_sum = 0.0;
  for (const Grid& b : replay_backlog(inst, path, decisions)) backlog_sum += b.sum();
  return reward - inst.alpha * over - inst.gamma / inst.horizon * backlog_sum;
}

}  // namespace

OfflineSolution solve_opt_lp(const Instance& inst, const SamplePath& path) {
  if (inst.service_mode == ServiceMode::kIdle)
    throw std::invalid_argument(
        "offline LP is undefined under server idleness; use brute_force_opt");
  const int T = path.horizon();
  const int m = inst.m, l = inst.l;

  // Tied decisions are forced, so they enter the program as constants.
  Grid tied_total(m, l, 0.0);
  double tied_reward = 0.0;
  std::vector<int> free_ts;
  for (int t = 0; t < T; ++t) {
    const ArrivalType& a = path.arrivals[t];
    if (a.tied()) {
      tied_reward += a.reward[a.target - 1];
      for (int j = 0; j < l; ++j) tied_total(a.target - 1, j) += a.units(a.target - 1, j);
    } else {
      free_ts.push_back(t);
    }
  }
  bool g_event = true;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < l; ++j)
      if (tied_total(i, j) > inst.capacity(i, j) + 1e-9) g_event = false;

  LpProblem lp;
  std::vector<int> zcol(static_cast<size_t>(T) * m, -1);
  for (int t : free_ts)
    for (int i = 0; i < m; ++i)
      zcol[static_cast<size_t>(t) * m + i] = lp.add_var(path.arrivals[t].reward[i]);
  const int b0 = lp.num_vars;
  for (int k = 0; k < T * m * l; ++k) lp.add_var(-inst.gamma / T);
  auto bvar = [&](int t, int i, int j) { return b0 + (t * m + i) * l + j; };
  std::vector<int> ocol(static_cast<size_t>(m) * l);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < l; ++j) ocol[i * l + j] = lp.add_var(-inst.alpha);

  // Backlog inequalities b_t >= b_{t-1} + n z - s, written as
  // b_{t-1} - b_t + n z <= s - tied load.
  std::vector<int> backlog_row(static_cast<size_t>(T) * m * l);
  for (int t = 0; t < T; ++t) {
    const ArrivalType& a = path.arrivals[t];
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < l; ++j) {
        std::vector<std::pair<int, double>> terms;
        terms.emplace_back(bvar(t, i, j), -1.0);
        if (t > 0) terms.emplace_back(bvar(t - 1, i, j), 1.0);
        double rhs = path.services[t].s(i, j);
        if (a.tied()) {
          rhs -= tied_load(a, i, j);
        } else if (a.units(i, j) != 0.0) {
          terms.emplace_back(zcol[static_cast<size_t>(t) * m + i], a.units(i, j));
        }
        backlog_row[(static_cast<size_t>(t) * m + i) * l + j] =
            static_cast<int>(lp.rows.size());
        lp.add_row(std::move(terms), rhs);
      }
    }
  }

  // Capacity feasibility at T and the over-allocation linearization.
  std::vector<int> cap_row(static_cast<size_t>(m) * l), over_row(static_cast<size_t>(m) * l);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < l; ++j) {
      std::vector<std::pair<int, double>> terms;
      for (int t : free_ts) {
        double u = path.arrivals[t].units(i, j);
        if (u != 0.0) terms.emplace_back(zcol[static_cast<size_t>(t) * m + i], u);
      }
      double room = inst.capacity(i, j) - tied_total(i, j);
      cap_row[i * l + j] = static_cast<int>(lp.rows.size());
      lp.add_row(terms, room > 0.0 ? room : 0.0);
      terms.emplace_back(ocol[i * l + j], -1.0);
      over_row[i * l + j] = static_cast<int>(lp.rows.size());
      lp.add_row(std::move(terms), room);
    }
  }

  // One unit to distribute per free period.
  for (int t : free_ts) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < m; ++i) terms.emplace_back(zcol[static_cast<size_t>(t) * m + i], 1.0);
    lp.add_row(std::move(terms), 1.0);
  }

  LpSolution sol = solve_lp(lp);
  if (!sol.optimal) throw std::runtime_error("offline LP failed: " + sol.error);

  OfflineSolution out;
  out.decisions.resize(T);
  for (int t = 0; t < T; ++t) {
    const ArrivalType& a = path.arrivals[t];
    if (a.tied()) {
      out.decisions[t] = Decision::match(a.target);
    } else {
      std::vector<double> w(m);
      for (int i = 0; i < m; ++i) w[i] = std::max(0.0, sol.x[zcol[static_cast<size_t>(t) * m + i]]);
      out.decisions[t] = Decision::fractional(std::move(w));
    }
  }
  out.backlog = replay_backlog(inst, path, out.decisions);
  out.objective = sol.value + tied_reward;
  out.g_event = g_event;

  out.has_certificate = true;
  out.theta = Grid(m, l);
  out.lambda = Grid(m, l);
  out.beta.assign(T, Grid(m, l));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < l; ++j) {
      out.theta(i, j) = sol.duals[over_row[i * l + j]];
      out.lambda(i, j) = sol.duals[cap_row[i * l + j]];
      for (int t = 0; t < T; ++t)
        out.beta[t](i, j) = sol.duals[backlog_row[(static_cast<size_t>(t) * m + i) * l + j]];
    }
  }
  // Dual objective in the certificate's own terms: per-period inner
  // maxima plus rho.theta + rho.lambda + s.beta_t.
  double dual_value = 0.0;
  for (int t = 0; t < T; ++t) {
    const ArrivalType& a = path.arrivals[t];
    double inner;
    if (a.tied()) {
      int i = a.target - 1;
      inner = a.reward[i];
      for (int j = 0; j < l; ++j)
        inner -= a.units(i, j) * (out.theta(i, j) + out.lambda(i, j) + out.beta[t](i, j));
    } else {
      inner = 0.0;
      for (int i = 0; i < m; ++i) {
        double score = a.reward[i];
        for (int j = 0; j < l; ++j)
          score -= a.units(i, j) * (out.theta(i, j) + out.lambda(i, j) + out.beta[t](i, j));
        inner = std::max(inner, score);
      }
    }
    dual_value += inner;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < l; ++j)
        dual_value += inst.rho(i, j) * (out.theta(i, j) + out.lambda(i, j)) +
                      path.services[t].s(i, j) * out.beta[t](i, j);
  }
  out.dual_value = dual_value;
  return out;
}

bool single_affiliate_fast_eligible(const Instance& inst, const SamplePath& path) {
  if (inst.m != 1 || inst.l != 1) return false;
  if (inst.service_mode != ServiceMode::kBernoulli) return false;
  for (const ArrivalType& a : path.arrivals) {
    if (a.tied()) return false;
    if (!a.consumption.empty() && a.consumption(0, 0) != 1.0) return false;
  }
  return true;
}

namespace {

// Inner problem of the Lagrangian: max over z of
//   sum (w_t - mu) z_t - (gamma/T) sum b_t
// via an exact DP over integer backlog levels 0..b_max. Returns the
// value and, through z_count, the number of accepted cases of the
// recovered maximizer (ties broken toward rejection).
double single_inner_dp(const Instance& inst, const SamplePath& path, double mu, int b_max,
                       double* z_count, std::vector<Decision>* decisions) {
  const int T = path.horizon();
  const double hold = inst.gamma / T;
  std::vector<double> v(b_max + 1, 0.0), nv(b_max + 1, 0.0);
  std::vector<std::vector<bool>> choice;
  if (z_count || decisions) choice.assign(T, std::vector<bool>(b_max + 1, false));

  for (int t = T - 1; t >= 0; --t) {
    const double w = path.arrivals[t].reward[0] - mu;
    const int s = path.services[t].s(0, 0) > 0.5 ? 1 : 0;
    for (int b = 0; b <= b_max; ++b) {
      int b_rej = b - s;
      if (b_rej < 0) b_rej = 0;
      double reject = -hold * b_rej + v[b_rej];
      double best = reject;
      bool take = false;
      int b_acc = b + 1 - s;
      if (b_acc <= b_max) {
        double accept = w - hold * b_acc + v[b_acc];
        if (accept > best) {
          best = accept;
          take = true;
        }
      }
      nv[b] = best;
      if (!choice.empty()) choice[t][b] = take;
    }
    std::swap(v, nv);
  }

  if (z_count || decisions) {
    double count = 0.0;
    int b = 0;
    for (int t = 0; t < T; ++t) {
      bool take = choice[t][b];
      if (take) count += 1.0;
      if (decisions) (*decisions)[t] = take ? Decision::match(1) : Decision::none();
      int s = path.services[t].s(0, 0) > 0.5 ? 1 : 0;
      b = b + (take ? 1 : 0) - s;
      if (b < 0) b = 0;
    }
    if (z_count) *z_count = count;
  }
  return v[0];
}

}  // namespace

OfflineSolution solve_opt_single(const Instance& inst, const SamplePath& path) {
  if (!single_affiliate_fast_eligible(inst, path))
    throw std::invalid_argument("fast offline solver needs a single-affiliate no-tied path");
  const int T = path.horizon();
  const double cap = inst.capacity(0, 0);
  OfflineSolution out;
  out.decisions.assign(T, Decision::none());
  out.g_event = true;

  if (inst.gamma <= 0.0) {
    // no backlog cost: take the best rewards up to capacity, with the
    // marginal unit fractional when c is not integral
    std::vector<double> w(T);
    for (int t = 0; t < T; ++t) w[t] = path.arrivals[t].reward[0];
    std::vector<int> order(T);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });
    double value = 0.0, room = cap;
    for (int idx : order) {
      if (room <= 0.0 || w[idx] <= 0.0) break;
      double take = std::min(1.0, room);
      value += take * w[idx];
      out.decisions[idx] =
          take >= 1.0 ? Decision::match(1) : Decision::fractional({take});
      room -= take;
    }
    out.objective = value;
    out.backlog = replay_backlog(inst, path, out.decisions);
    return out;
  }

  // Useful backlog levels are bounded: a unit pushed past depth
  // T/gamma waits long enough to cost more than any reward.
  int b_max = static_cast<int>(std::ceil(T / inst.gamma)) + 3;
  if (b_max > T) b_max = T;

  std::vector<Decision> primal(T, Decision::none());
  double count0 = 0.0;
  double best_value = single_inner_dp(inst, path, 0.0, b_max, &count0, &primal);
  if (count0 > cap) {
    // price the capacity constraint: h(mu) = L(mu) + mu*c is convex
    // with subgradient c - accepted(mu); bisect to the breakpoint
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
      double mid = 0.5 * (lo + hi);
      double cnt = 0.0;
      double val = single_inner_dp(inst, path, mid, b_max, &cnt, nullptr);
      best_value = std::min(best_value, val + mid * cap);
      if (cnt > cap)
        lo = mid;
      else
        hi = mid;
    }
    double cnt = 0.0;
    double vhi = single_inner_dp(inst, path, hi, b_max, &cnt, &primal);
    best_value = std::min(best_value, vhi + hi * cap);
  }
  out.decisions = primal;
  out.objective = best_value;
  out.backlog = replay_backlog(inst, path, out.decisions);
  return out;
}

OfflineSolution solve_opt(const Instance& inst, const SamplePath& path) {
  if (single_affiliate_fast_eligible(inst, path)) return solve_opt_single(inst, path);
  return solve_opt_lp(inst, path);
}

OfflineSolution brute_force_opt(const Instance& inst, const SamplePath& path) {
  const int T = path.horizon();
  if (T > 12 || inst.m > 3) throw std::invalid_argument("brute force capped at T <= 12, m <= 3");

  std::vector<Decision> current(T), best(T);
  double best_value = -std::numeric_limits<double>::infinity();

  // depth-first over integral decisions, pruning infeasible branches
  PathState st = PathState::initial(inst);
  std::vector<PathState> stack;
  stack.reserve(T + 1);
  stack.push_back(st);

  struct Frame {
    int t;
    int next_choice;  // 0 = none, 1..m = affiliates, m+1 = done
  };
  std::vector<Frame> frames;
  frames.push_back({0, 0});
  while (!frames.empty()) {
    Frame& f = frames.back();
    if (f.t == T) {
      double val = profile_objective(inst, path, current);
      if (val > best_value) {
        best_value = val;
        best = current;
      }
      frames.pop_back();
      stack.pop_back();
      continue;
    }
    const ArrivalType& a = path.arrivals[f.t];
    bool advanced = false;
    while (f.next_choice <= inst.m) {
      int choice = f.next_choice++;
      Decision d;
      if (a.tied()) {
        if (choice != 0) break;  // only one branch for tied cases
        d = Decision::match(a.target);
        f.next_choice = inst.m + 1;
      } else {
        d = choice == 0 ? Decision::none() : Decision::match(choice);
        if (choice != 0 && !check_capacity_feasibility(inst, stack.back(), d, a)) continue;
      }
      current[f.t] = d;
      PathState next = step_backlog(inst, stack.back(), d, path.services[f.t], a);
      stack.push_back(std::move(next));
      frames.push_back({f.t + 1, 0});
      advanced = true;
      break;
    }
    if (!advanced && f.next_choice > inst.m) {
      frames.pop_back();
      stack.pop_back();
    }
  }

  OfflineSolution out;
  out.decisions = best;
  out.objective = best_value;
  out.backlog = replay_backlog(inst, path, best);
  out.g_event = true;
  for (int i = 0; i < inst.m; ++i) {
    for (int j = 0; j < inst.l; ++j) {
      double tied = 0.0;
      for (const auto& a : path.arrivals) tied += tied_load(a, i, j);
      if (tied > inst.capacity(i, j) + 1e-9) out.g_event = false;
    }
  }
  return out;
}

OfflineSolution solve_surrogate_primal(const Instance& inst,
                                       const std::vector<ArrivalType>& arrivals) {
  const int T = static_cast<int>(arrivals.size());
  const int m = inst.m, l = inst.l;

  Grid tied_total(m, l, 0.0);
  double tied_reward = 0.0;
  std::vector<int> free_ts;
  for (int t = 0; t < T; ++t) {
    const ArrivalType& a = arrivals[t];
    if (a.tied()) {
      tied_reward += a.reward[a.target - 1];
      for (int j = 0; j < l; ++j) tied_total(a.target - 1, j) += a.units(a.target - 1, j);
    } else {
      free_ts.push_back(t);
    }
  }

  LpProblem lp;
  std::vector<int> zcol(static_cast<size_t>(T) * m, -1);
  for (int t : free_ts)
    for (int i = 0; i < m; ++i)
      zcol[static_cast<size_t>(t) * m + i] = lp.add_var(arrivals[t].reward[i]);
  std::vector<int> ocol(static_cast<size_t>(m) * l);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < l; ++j) ocol[i * l + j] = lp.add_var(-inst.alpha);

  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < l; ++j) {
      std::vector<std::pair<int, double>> terms;
      for (int t : free_ts) {
        double u = arrivals[t].units(i, j);
        if (u != 0.0) terms.emplace_back(zcol[static_cast<size_t>(t) * m + i], u);
      }
      double room = inst.capacity(i, j) - tied_total(i, j);
      lp.add_row(terms, room > 0.0 ? room : 0.0);
      terms.emplace_back(ocol[i * l + j], -1.0);
      lp.add_row(std::move(terms), room);
    }
  }
  for (int t : free_ts) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < m; ++i) terms.emplace_back(zcol[static_cast<size_t>(t) * m + i], 1.0);
    lp.add_row(std::move(terms), 1.0);
  }

  LpSolution sol = solve_lp(lp);
  if (!sol.optimal) throw std::runtime_error("surrogate primal LP failed: " + sol.error);

  OfflineSolution out;
  out.decisions.resize(T);
  for (int t = 0; t < T; ++t) {
    const ArrivalType& a = arrivals[t];
    if (a.tied()) {
      out.decisions[t] = Decision::match(a.target);
    } else {
      std::vector<double> w(m);
      for (int i = 0; i < m; ++i) w[i] = std::max(0.0, sol.x[zcol[static_cast<size_t>(t) * m + i]]);
      out.decisions[t] = Decision::fractional(std::move(w));
    }
  }
  out.objective = sol.value + tied_reward;
  return out;
}

StaticDualResult solve_static_dual(const Instance& inst,
                                   const std::vector<ArrivalType>& support,
                                   const std::vector<double>& probs) {
  if (support.empty() || support.size() != probs.size())
    throw std::invalid_argument("static dual needs a discrete distribution");
  const int m = inst.m;
  const double lambda_cap = inst.lambda_cap();
  // Shift the epigraph variables so every variable is non-negative:
  // u_k >= -(alpha + lambda_cap) always.
  const double shift = inst.alpha + lambda_cap + 1.0;

  LpProblem lp;
  std::vector<int> tcol(m), lcol(m);
  // minimize  sum p_k u_k + sum rho (theta + lambda)  ==
  // maximize -sum p_k v_k - sum rho (theta + lambda) + shift
  for (int i = 0; i < m; ++i) tcol[i] = lp.add_var(-inst.rho(i, 0));
  for (int i = 0; i < m; ++i) lcol[i] = lp.add_var(-inst.rho(i, 0));
  std::vector<int> vcol(support.size());
  for (size_t k = 0; k < support.size(); ++k) vcol[k] = lp.add_var(-probs[k]);

  for (int i = 0; i < m; ++i) {
    lp.add_row({{tcol[i], 1.0}}, inst.alpha);
    lp.add_row({{lcol[i], 1.0}}, lambda_cap);
  }
  for (size_t k = 0; k < support.size(); ++k) {
    const ArrivalType& a = support[k];
    if (a.tied()) {
      int i = a.target - 1;
      // v_k >= w + shift - theta_i - lambda_i
      lp.add_row({{vcol[k], -1.0}, {tcol[i], -1.0}, {lcol[i], -1.0}},
                 -(a.reward[i] + shift));
    } else {
      lp.add_row({{vcol[k], -1.0}}, -shift);  // u_k >= 0
      for (int i = 0; i < m; ++i)
        lp.add_row({{vcol[k], -1.0}, {tcol[i], -1.0}, {lcol[i], -1.0}},
                   -(a.reward[i] + shift));
    }
  }

  LpSolution sol = solve_lp(lp);
  if (!sol.optimal) throw std::runtime_error("static dual LP failed: " + sol.error);

  StaticDualResult res;
  res.theta = Grid(m, 1);
  res.lambda = Grid(m, 1);
  for (int i = 0; i < m; ++i) {
    res.theta(i, 0) = sol.x[tcol[i]];
    res.lambda(i, 0) = sol.x[lcol[i]];
  }
  // undo the epigraph shift: min D = -(lp value) - shift
  res.value = -sol.value - shift;
  return res;
}

EmpiricalDualResult empirical_static_dual(const std::vector<double>& rewards, double rho) {
  const size_t n = rewards.size();
  if (n == 0) throw std::invalid_argument("empty reward sample");
  auto objective = [&](double phi) {
    double s = 0.0;
    for (double w : rewards) s += std::max(0.0, w - phi);
    return s + rho * static_cast<double>(n) * phi;
  };
  // smallest minimizer: the least candidate phi (zero or a sample
  // value) whose right-derivative rho*n - #{w > phi} is >= 0
  std::vector<double> cand = rewards;
  cand.push_back(0.0);
  std::sort(cand.begin(), cand.end());
  double target = rho * static_cast<double>(n);
  for (double phi : cand) {
    size_t above = 0;
    for (double w : rewards)
      if (w > phi) ++above;
    if (static_cast<double>(above) <= target)
      return {phi, objective(phi)};
  }
  double phi = cand.back();
  return {phi, objective(phi)};
}

}  // namespace dualmatch
