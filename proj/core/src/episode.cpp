#include "dualmatch/episode.hpp"

#include <sstream>
#include <stdexcept>

namespace dualmatch {

namespace {

RunResult run_episode_impl(const Instance& inst, Policy& policy, const SamplePath& path,
                           std::uint64_t seed, std::uint32_t path_index,
                           const EpisodeObserver& observer,
                           std::vector<Decision>* decisions_out) {
  const int T = path.horizon();
  StreamKey algo_key{seed, path_index, StreamPurpose::kAlgorithm, policy_salt(policy.name())};
  policy.reset(inst, algo_key);

  PathState st = PathState::initial(inst);
  RunResult res;
  double backlog_sum = 0.0;
  auto* batch_policy = dynamic_cast<BatchPolicy*>(&policy);
  const int B = policy.batch_size();

  std::vector<Decision> batch_decisions;
  std::vector<ArrivalType> batch;
  int t = 1;
  while (t <= T) {
    int count = 1;
    if (batch_policy && B > 0) {
      count = std::min(B, T - t + 1);
      batch.assign(path.arrivals.begin() + (t - 1), path.arrivals.begin() + (t - 1) + count);
      batch_decisions = batch_policy->decide_batch(inst, st, batch);
      if (static_cast<int>(batch_decisions.size()) != count)
        throw std::logic_error("batched policy returned wrong number of decisions");
    }
    for (int k = 0; k < count; ++k, ++t) {
      const ArrivalType& a = path.arrivals[t - 1];
      Decision d = (batch_policy && B > 0) ? batch_decisions[k] : policy.decide(inst, st, a);
      if (!a.tied() && !check_capacity_feasibility(inst, st, d, a)) {
        std::ostringstream msg;
        msg << policy.name() << " emitted an infeasible decision at period " << t;
        throw std::logic_error(msg.str());
      }
      for (int i = 0; i < inst.m; ++i) res.total_reward += a.reward[i] * d.z(i + 1);
      st = step_backlog(inst, st, d, path.services[t - 1], a);
      backlog_sum += st.backlog.sum();
      // observe before the dual update so duals() is the value the
      // period-t decision actually used
      if (observer) observer(t, st, d, policy.duals());
      if (!batch_policy) policy.update(inst, d, a);
      if (decisions_out) decisions_out->push_back(d);
    }
  }

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

}  // namespace

RunResult run_episode(const Instance& inst, Policy& policy, const SamplePath& path,
                      std::uint64_t seed, std::uint32_t path_index,
                      const EpisodeObserver& observer) {
  return run_episode_impl(inst, policy, path, seed, path_index, observer, nullptr);
}

std::vector<Decision> collect_decisions(const Instance& inst, Policy& policy,
                                        const SamplePath& path, std::uint64_t seed,
                                        std::uint32_t path_index) {
  std::vector<Decision> decisions;
  decisions.reserve(path.horizon());
  run_episode_impl(inst, policy, path, seed, path_index, nullptr, &decisions);
  return decisions;
}

}  // namespace dualmatch
