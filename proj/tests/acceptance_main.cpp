// Acceptance suite: every criterion prints one [PASS]/[FAIL] line with
// the measured quantities; the process exits nonzero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dualmatch/batch_policies.hpp"
#include "dualmatch/dp_oracle.hpp"
#include "dualmatch/dynamics.hpp"
#include "dualmatch/episode.hpp"
#include "dualmatch/experiment.hpp"
#include "dualmatch/generalized.hpp"
#include "dualmatch/generators.hpp"
#include "dualmatch/offline.hpp"
#include "dualmatch/policies.hpp"

using namespace dualmatch;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (detail.tellp() > 0) detail << "; ";
      detail << what;
    }
  }
};

int failures = 0;

void run_criterion(int index, const std::string& name, const std::function<void(Check&)>& fn) {
  auto start = std::chrono::steady_clock::now();
  Check check;
  try {
    fn(check);
  } catch (const std::exception& e) {
    check.ok = false;
    check.detail << "exception: " << e.what();
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("[%s] criterion %2d: %-28s (%.1fs)%s%s\n", check.ok ? "PASS" : "FAIL", index,
              name.c_str(), secs, check.detail.tellp() > 0 ? " -- " : "",
              check.detail.str().c_str());
  std::fflush(stdout);
  if (!check.ok) ++failures;
}

Instance random_invariant_instance(CounterRng& rng) {
  int m = 1 + static_cast<int>(rng.next_below(4));
  std::vector<double> rho(m), tied(m);
  for (int i = 0; i < m; ++i) {
    rho[i] = 0.15 + 0.6 * rng.next_double() / m;
    tied[i] = rho[i] * 0.5 * rng.next_double();
  }
  RewardSpec reward;
  reward.kind = RewardSpec::Kind::kUniformBox;
  reward.lo.assign(m, 0.0);
  reward.hi.assign(m, 1.0);
  Instance inst = make_synthetic_multi(m, 200, tied, reward, rho, 0.05);
  inst.alpha = 1.0 + 2.0 * rng.next_double();
  inst.gamma = 5.0 * rng.next_double();
  return inst;
}

// -- 1 ----------------------------------------------------------------
void invariant_suite(Check& check) {
  StreamKey key{1001, 0, StreamPurpose::kArrival, 0};
  int violations = 0;
  for (int rep = 0; rep < 50; ++rep) {
    CounterRng rng(key, rep);
    Instance inst = random_invariant_instance(rng);
    const double zeta = default_zeta(inst);
    SamplePath path = materialize_path(inst, 2000 + rep, 0);

    CadlPolicy policy(EtaSchedule::fixed(default_eta(inst)), zeta);
    StreamKey akey{2000ull + rep, 0, StreamPurpose::kAlgorithm, policy_salt("ca-dl")};
    policy.reset(inst, akey);

    PathState st = PathState::initial(inst);
    std::vector<double> beta(inst.m, 0.0);
    for (int t = 1; t <= inst.horizon; ++t) {
      const ArrivalType& a = path.arrivals[t - 1];
      const ServiceDraw& s = path.services[t - 1];
      Decision d = policy.decide(inst, st, a);
      if (!check_capacity_feasibility(inst, st, d, a)) ++violations;

      std::vector<double> prev(inst.m);
      for (int i = 0; i < inst.m; ++i) prev[i] = st.backlog(i, 0);
      DriftRecord drift = drift_diagnostics(inst, prev, d, s, *policy.duals(), a);
      if (drift.drift < drift.lower_bound - 1e-9 || drift.drift > drift.upper_bound + 1e-9)
        ++violations;

      st = step_backlog(inst, st, d, s, a);
      policy.update(inst, d, a);
      if (!policy.duals()->within_bounds(1e-12)) ++violations;
      for (int i = 0; i < inst.m; ++i) {
        if (st.backlog(i, 0) < 0.0) ++violations;
        beta[i] = std::max(0.0, beta[i] + zeta * (d.z(i + 1) - s.s(i, 0)));
        if (std::abs(beta[i] - zeta * st.backlog(i, 0)) > 1e-9) ++violations;
      }
    }
  }
  check.detail << "violations=" << violations;
  check.require(violations == 0, "invariant violations detected");
}

// -- 2 ----------------------------------------------------------------
void oracle_equivalence(Check& check) {
  StreamKey key{77, 0, StreamPurpose::kArrival, 0};
  int integral_cases = 0, g_cases = 0;
  double worst_gap = 0.0, worst_duality = 0.0;
  bool ok = true;
  for (int rep = 0; rep < 100; ++rep) {
    CounterRng rng(key, rep);
    int m = 1 + static_cast<int>(rng.next_below(3));
    int T = 4 + static_cast<int>(rng.next_below(7));
    std::vector<double> rho(m), tied(m);
    for (int i = 0; i < m; ++i) {
      rho[i] = 0.3 + 0.4 * rng.next_double();
      tied[i] = rho[i] * 0.5 * rng.next_double();
    }
    RewardSpec reward;
    reward.kind = RewardSpec::Kind::kUniformBox;
    reward.lo.assign(m, 0.0);
    reward.hi.assign(m, 1.0);
    Instance inst = make_synthetic_multi(m, T, tied, reward, rho, 0.05);
    inst.alpha = 1.0 + 2.0 * rng.next_double();
    inst.gamma = 4.0 * rng.next_double();

    SamplePath path = materialize_path(inst, 3000 + rep, 0);
    for (auto& a : path.arrivals)
      for (auto& w : a.reward) w = std::round(w * 4.0) / 4.0;  // integral-rewards grid

    OfflineSolution lp = solve_opt_lp(inst, path);
    OfflineSolution bf = brute_force_opt(inst, path);
    if (lp.objective < bf.objective - 1e-6) ok = false;

    bool integral = true;
    for (const auto& d : lp.decisions)
      for (int i = 1; i <= inst.m; ++i) {
        double z = d.z(i);
        if (z > 1e-7 && z < 1.0 - 1e-7) integral = false;
      }
    if (integral) {
      ++integral_cases;
      double gap = std::abs(lp.objective - bf.objective);
      worst_gap = std::max(worst_gap, gap);
      if (gap > 1e-6) ok = false;
    }
    if (lp.g_event) {
      ++g_cases;
      double dgap = std::abs(lp.dual_value - lp.objective);
      worst_duality = std::max(worst_duality, dgap);
      if (dgap > 1e-6) ok = false;
    }
  }
  check.detail << "integral=" << integral_cases << " gap=" << worst_gap
               << " G_T=" << g_cases << " duality_gap=" << worst_duality;
  check.require(ok, "oracle mismatch");
  check.require(integral_cases >= 20, "too few integral LP optima to certify");
  check.require(g_cases >= 50, "too few G_T paths");
}

// -- 3 ----------------------------------------------------------------
void relaxation_dominance(Check& check) {
  ShiftPair pair = make_shift_pair(60);
  Instance inst = pair.run_year;
  inst.service_mode = ServiceMode::kBernoulli;  // the LP benchmark needs draws

  SamplePath pool_path = materialize_path(pair.pool_year, 904, 0);
  auto pool = std::make_shared<Trace>();
  pool->m = inst.m;
  pool->l = inst.l;
  pool->arrivals = pool_path.arrivals;

  std::vector<AlgorithmConfig> algos(6);
  algos[0].name = "ca-dl";
  algos[1].name = "co-dl";
  algos[2].name = "ro-learning";
  algos[3].name = "sampling";
  algos[3].pool = pool;
  algos[4].name = "random";
  algos[5].name = "min-backlog";

  const int P = 200;
  std::vector<int> bad(P, 0);
  parallel_for_paths(P, [&](int p) {
    SamplePath path = materialize_path(inst, 905, p);
    OfflineSolution opt = solve_opt(inst, path);
    for (const auto& cfg : algos) {
      auto policy = make_policy(inst, cfg);
      RunResult r = run_episode(inst, *policy, path, 905, p);
      if (opt.objective < r.objective - 1e-6) bad[p]++;
    }
  });
  int total_bad = 0;
  for (int b : bad) total_bad += b;
  check.detail << "violations=" << total_bad << " over " << P << " paths x 6 algorithms";
  check.require(total_bad == 0, "offline optimum undercut an online run");
}

// -- 4 ----------------------------------------------------------------
void example41_reproduction(Check& check) {
  const int T = 2000;
  Example41Result res = recipe_example41(T, 1000, 41);
  check.detail << "mean_phi=" << res.mean_phi_half << " q05=" << res.phi_half_q05
               << " q95=" << res.phi_half_q95 << " max_backlog=" << res.max_mean_backlog;
  check.require(std::abs(res.mean_phi_half - 0.5) <= 0.02, "mean phi off 0.5 +- 0.02");
  check.require(std::abs(res.phi_half_q05 - 0.5) <= 0.05, "q05 off 0.5 +- 0.05");
  check.require(std::abs(res.phi_half_q95 - 0.5) <= 0.05, "q95 off 0.5 +- 0.05");
  check.require(res.max_mean_backlog <= 15.0, "mean backlog exceeded 15");

  // no increasing trend over the last half: OLS drift across [T/2, T]
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int t = T / 2; t < T; ++t) {
    double x = t, y = res.mean_backlog[t];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double drift_across_half = slope * (T / 2.0);
  check.detail << " drift=" << drift_across_half;
  check.require(drift_across_half <= 1.0, "backlog trends upward over the last half");
}

// -- 5 ----------------------------------------------------------------
void near_critical_separation(Check& check) {
  NearCriticalResult res =
      recipe_near_critical_ratio({500, 1000, 2000, 4000}, 500, 5005, "", false, true);
  std::vector<double> ratios;
  for (const auto& row : res.rows)
    if (row.regime == "nc_sqrt") ratios.push_back(row.ratio);
  check.detail << "ratios=";
  for (double r : ratios) check.detail << r << " ";
  check.require(ratios.size() == 4, "missing rows");
  for (size_t k = 0; k + 1 < ratios.size(); ++k)
    check.require(ratios[k + 1] > ratios[k] * 0.98, "ratio not increasing in T");
  check.require(ratios.back() / ratios.front() >= 1.5, "growth below 1.5x");
}

// -- 6 ----------------------------------------------------------------
void codl_backlog_growth(Check& check) {
  auto mean_backlog = [&](int T) {
    Instance inst = make_uniform_single(T, 0.5, 0.5 / std::sqrt(static_cast<double>(T)));
    std::vector<double> avg(600, 0.0);
    parallel_for_paths(600, [&](int p) {
      SamplePath path = materialize_path(inst, 606, p);
      CodlPolicy policy(1.0);
      RunResult r = run_episode(inst, policy, path, 606, p);
      avg[p] = r.avg_backlog;
    });
    double s = 0.0;
    for (double v : avg) s += v;
    return s / avg.size();
  };
  double b1000 = mean_backlog(1000);
  double b4000 = mean_backlog(4000);
  check.detail << "avg_backlog(1000)=" << b1000 << " avg_backlog(4000)=" << b4000
               << " ratio=" << b4000 / b1000;
  check.require(b4000 >= 1.5 * b1000, "backlog growth below 1.5x");
}

// -- 7 ----------------------------------------------------------------
void impossibility_instance(Check& check) {
  const int T = 2500;
  ImpossibilityResult res = recipe_impossibility(T, 0.0, 1000, 707);
  check.detail << "E[min(S,c)]=" << res.mean_offline_bound << " ref=" << res.reference
               << " accept=" << res.cadl_mean_acceptances
               << " backlog=" << res.cadl_mean_total_backlog;
  check.require(res.mean_offline_bound >= res.reference,
                "offline bound under 0.5T - 2sqrt(T)");
  if (res.cadl_mean_acceptances >= 0.25 * T) {
    double floor = 0.5 * (0.25 * T) - 3.0 * std::sqrt(static_cast<double>(T)) * std::log(T);
    check.require(res.cadl_mean_total_backlog >= floor, "backlog under the proof bound");
  }
}

// -- 8 ----------------------------------------------------------------
void dp_gap_scaling(Check& check) {
  for (double gamma : {1.0, 4.0}) {
    double g100 = 0.5 * 100 - dp_oracle_single_affiliate(100, gamma).value;
    double g400 = 0.5 * 400 - dp_oracle_single_affiliate(400, gamma).value;
    double ratio = g400 / g100;
    check.detail << "gamma=" << gamma << " ratio=" << ratio << " ";
    check.require(ratio >= 1.4 && ratio <= 2.9, "gap ratio outside [1.4, 2.9]");
  }
}

// -- 9 ----------------------------------------------------------------
void reduction_identities(Check& check) {
  // (a) generalized reduces to the base algorithm bit-exactly
  Instance inst = make_uniform_single(400, 0.5, 0.1);
  inst.alpha = 2.0;
  inst.gamma = 3.0;
  for (std::uint64_t seed = 900; seed < 920; ++seed) {
    SamplePath path = materialize_path(inst, seed, 0);
    CadlPolicy base(EtaSchedule::fixed(default_eta(inst)), 0.25);
    CadlMPolicy gen(EtaSchedule::fixed(default_eta(inst)), 0.25);
    StreamKey k1{seed, 0, StreamPurpose::kAlgorithm, 0};
    base.reset(inst, k1);
    gen.reset(inst, k1);
    PathState st = PathState::initial(inst);
    for (int t = 1; t <= inst.horizon; ++t) {
      const ArrivalType& a = path.arrivals[t - 1];
      Decision db = base.decide(inst, st, a);
      Decision dg = gen.decide(inst, st, a);
      check.require(db == dg, "decision diverged in reduction (a)");
      st = step_backlog(inst, st, db, path.services[t - 1], a);
      base.update(inst, db, a);
      gen.update(inst, dg, a);
      check.require(base.duals()->theta(0, 0) == gen.duals()->theta(0, 0) &&
                        base.duals()->lambda(0, 0) == gen.duals()->lambda(0, 0),
                    "dual diverged in reduction (a)");
      if (!check.ok) return;
    }
  }

  // (b) co-dl equals ca-dl at zeta=0 with matched schedules
  for (std::uint64_t seed = 930; seed < 940; ++seed) {
    SamplePath path = materialize_path(inst, seed, 0);
    CodlPolicy co(1.0);
    CadlPolicy ca(EtaSchedule::inverse_sqrt(1.0), 0.0);
    auto d1 = collect_decisions(inst, co, path, seed, 0);
    auto d2 = collect_decisions(inst, ca, path, seed, 0);
    check.require(d1 == d2, "co-dl != ca-dl(zeta=0)");
    if (!check.ok) return;
  }

  // (c) unit batches equal ro-learning plus the standard update
  Instance shift = make_shift_pair(300).run_year;
  for (std::uint64_t seed = 950; seed < 960; ++seed) {
    SamplePath path = materialize_path(shift, seed, 0);
    RoLearningPolicy ro(EtaSchedule::fixed(default_eta(shift)), default_zeta(shift));
    RoLearningBatchPolicy rob(EtaSchedule::fixed(default_eta(shift)), default_zeta(shift), 1);
    auto d1 = collect_decisions(shift, ro, path, seed, 0);
    auto d2 = collect_decisions(shift, rob, path, seed, 0);
    check.require(d1 == d2, "ro-learning-b(1) != ro-learning");
    if (!check.ok) return;
  }
  check.detail << "20+10+10 seeded runs identical";
}

// -- 10 ---------------------------------------------------------------
void idle_dominance(Check& check) {
  Instance base = make_uniform_single(300, 0.5, 0.1);
  Instance idle = base;
  idle.service_mode = ServiceMode::kIdle;
  int violations = 0;
  for (int p = 0; p < 100; ++p) {
    SamplePath path = materialize_path(base, 333, p);
    StreamKey akey{333, static_cast<std::uint32_t>(p), StreamPurpose::kAlgorithm, 17};
    PathState sb = PathState::initial(base);
    PathState si = PathState::initial(idle);
    for (int t = 1; t <= base.horizon; ++t) {
      CounterRng rng(akey, t);
      const ArrivalType& a = path.arrivals[t - 1];
      Decision d = rng.next_bernoulli(0.55) ? Decision::match(1) : Decision::none();
      if (!check_capacity_feasibility(base, sb, d, a)) d = Decision::none();
      const ServiceDraw& s = path.services[t - 1];
      Grid u = idle_effective(si, s.s);
      if (u(0, 0) < s.s(0, 0)) ++violations;
      sb = step_backlog(base, sb, d, s, a);
      si = step_backlog(idle, si, d, s, a);
      if (si.backlog(0, 0) > sb.backlog(0, 0) + 1e-12) ++violations;
    }
  }
  check.detail << "violations=" << violations;
  check.require(violations == 0, "idle-mode dominance failed");
}

// -- 11 ---------------------------------------------------------------
void batched_ordering(Check& check) {
  auto rows = recipe_batch_table(600, 24, 1111, 30, 10);
  double ro = 0, rob = 0, robi = 0;
  for (const auto& r : rows) {
    if (r.algo == "ro-learning") ro = r.mean_objective;
    if (r.algo == "ro-learning-b") rob = r.mean_objective;
    if (r.algo == "ro-learning-b-iterate") robi = r.mean_objective;
  }
  check.detail << "ro=" << ro << " b=" << rob << " b-iterate=" << robi;
  check.require(rob <= ro, "ro-learning-b should not beat ro-learning");
  check.require(robi >= rob, "b-iterate should not lose to plain batching");
}

// -- 12 ---------------------------------------------------------------
void codl_service_independence(Check& check) {
  Instance inst = make_uniform_single(2000, 0.5, 0.1);
  SamplePath base = materialize_path(inst, 1212, 0);
  CodlPolicy p0(1.0);
  auto reference = collect_decisions(inst, p0, base, 1212, 0);
  for (std::uint64_t sseed = 1; sseed <= 10; ++sseed) {
    SamplePath path = base;
    StreamKey skey{sseed * 13, 0, StreamPurpose::kService, 0};
    for (int t = 1; t <= inst.horizon; ++t)
      path.services[t - 1] = draw_service(inst, skey, t);
    CodlPolicy p(1.0);
    auto decisions = collect_decisions(inst, p, path, 1212, 0);
    check.require(decisions == reference, "decisions changed with the service seed");
    if (!check.ok) return;
  }
  check.detail << "10 service seeds, identical decision sequences";
}

}  // namespace

int main() {
  std::printf("dualmatch acceptance suite\n");
  run_criterion(1, "invariant suite", invariant_suite);
  run_criterion(2, "oracle equivalence", oracle_equivalence);
  run_criterion(3, "relaxation dominance", relaxation_dominance);
  run_criterion(4, "example 4.1 reproduction", example41_reproduction);
  run_criterion(5, "near-critical separation", near_critical_separation);
  run_criterion(6, "co-dl backlog growth", codl_backlog_growth);
  run_criterion(7, "impossibility instance", impossibility_instance);
  run_criterion(8, "dp gap scaling", dp_gap_scaling);
  run_criterion(9, "reduction identities", reduction_identities);
  run_criterion(10, "idle-server dominance", idle_dominance);
  run_criterion(11, "batched ordering", batched_ordering);
  run_criterion(12, "co-dl service independence", codl_service_independence);
  std::printf("%d of 12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
