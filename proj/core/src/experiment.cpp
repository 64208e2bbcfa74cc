#include "dualmatch/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "dualmatch/csv.hpp"
#include "dualmatch/dp_oracle.hpp"
#include "dualmatch/generators.hpp"

namespace dualmatch {

int worker_count() {
  if (const char* env = std::getenv("DUALMATCH_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void parallel_for_paths(int n, const std::function<void(int)>& fn, int threads) {
  if (threads <= 0) threads = worker_count();
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::exception_ptr first_error;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (true) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<RegretEstimate> estimate_regret(const ExperimentConfig& config) {
  const int P = config.num_paths;
  const size_t A = config.algorithms.size();
  std::vector<double> opt_values(P, 0.0);
  std::vector<std::vector<double>> alg_values(A, std::vector<double>(P, 0.0));

  parallel_for_paths(P, [&](int p) {
    SamplePath path =
        materialize_path(config.instance, config.seed, static_cast<std::uint32_t>(p));
    OfflineSolution opt;
    try {
      opt = solve_opt(config.instance, path);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "offline solve failed on path " << p << " (seed " << config.seed
          << "): " << e.what();
      throw std::runtime_error(msg.str());
    }
    opt_values[p] = opt.objective;
    for (size_t a = 0; a < A; ++a) {
      auto policy = make_policy(config.instance, config.algorithms[a]);
      RunResult r = run_episode(config.instance, *policy, path, config.seed,
                                static_cast<std::uint32_t>(p));
      alg_values[a][p] = r.objective;
    }
  });

  std::vector<RegretEstimate> out;
  out.reserve(A);
  for (size_t a = 0; a < A; ++a) {
    RegretEstimate est;
    est.algo = config.algorithms[a].name;
    est.per_path.resize(P);
    double sum_opt = 0.0, sum_alg = 0.0, sum_reg = 0.0, sum_reg2 = 0.0;
    for (int p = 0; p < P; ++p) {
      double reg = opt_values[p] - alg_values[a][p];
      est.per_path[p] = {p, opt_values[p], alg_values[a][p], reg};
      sum_opt += opt_values[p];
      sum_alg += alg_values[a][p];
      sum_reg += reg;
      sum_reg2 += reg * reg;
    }
    est.mean_opt = sum_opt / P;
    est.mean_alg = sum_alg / P;
    est.mean_regret = sum_reg / P;
    if (P > 1) {
      double var = (sum_reg2 - sum_reg * sum_reg / P) / (P - 1);
      est.std_err = std::sqrt(std::max(0.0, var) / P);
    }
    out.push_back(std::move(est));
  }
  return out;
}

std::vector<RunTableRow> run_algorithms(const ExperimentConfig& config) {
  const int P = config.num_paths;
  const size_t A = config.algorithms.size();
  std::vector<RunTableRow> rows(static_cast<size_t>(P) * A);

  parallel_for_paths(P, [&](int p) {
    SamplePath path =
        materialize_path(config.instance, config.seed, static_cast<std::uint32_t>(p));
    for (size_t a = 0; a < A; ++a) {
      auto policy = make_policy(config.instance, config.algorithms[a]);
      RunResult r = run_episode(config.instance, *policy, path, config.seed,
                                static_cast<std::uint32_t>(p));
      rows[static_cast<size_t>(p) * A + a] = {p, config.algorithms[a].name, std::move(r)};
    }
  });
  return rows;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double idx = q * (v.size() - 1);
  size_t lo = static_cast<size_t>(idx);
  size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = idx - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / name);
  if (!out) throw std::runtime_error("cannot write " + name + " under " + dir);
  return out;
}

}  // namespace

Example41Result recipe_example41(int T, int num_paths, std::uint64_t seed,
                                 const std::string& out_dir) {
  Instance inst = make_uniform_single(T, 0.5, 0.1);

  Example41Result res;
  res.T = T;
  res.num_paths = num_paths;
  res.snapshot_ts = {static_cast<int>(std::lround(std::sqrt(static_cast<double>(T)))),
                     static_cast<int>(std::lround(std::pow(static_cast<double>(T), 2.0 / 3.0))),
                     T / 2};
  res.phi_samples.assign(res.snapshot_ts.size(), std::vector<double>(num_paths, 0.0));
  std::vector<std::vector<double>> backlog_sum(worker_count(), std::vector<double>(T, 0.0));
  std::vector<std::vector<double>> accept_sum(worker_count(), std::vector<double>(T, 0.0));
  std::atomic<int> worker_ids{0};
  thread_local int worker_slot = -1;

  parallel_for_paths(num_paths, [&](int p) {
    if (worker_slot < 0) worker_slot = worker_ids.fetch_add(1) % worker_count();
    SamplePath path = materialize_path(inst, seed, static_cast<std::uint32_t>(p));
    CodlPolicy policy(1.0);
    auto observer = [&](int t, const PathState& st, const Decision& d, const DualState* duals) {
      backlog_sum[worker_slot][t - 1] += st.backlog.sum();
      accept_sum[worker_slot][t - 1] += d.total();
      for (size_t k = 0; k < res.snapshot_ts.size(); ++k)
        if (t == res.snapshot_ts[k] && duals)
          res.phi_samples[k][p] = duals->theta(0, 0) + duals->lambda(0, 0);
    };
    run_episode(inst, policy, path, seed, static_cast<std::uint32_t>(p), observer);
  });

  res.mean_backlog.assign(T, 0.0);
  res.mean_accept.assign(T, 0.0);
  for (int w = 0; w < worker_count(); ++w) {
    for (int t = 0; t < T; ++t) {
      res.mean_backlog[t] += backlog_sum[w][t];
      res.mean_accept[t] += accept_sum[w][t];
    }
  }
  for (int t = 0; t < T; ++t) {
    res.mean_backlog[t] /= num_paths;
    res.mean_accept[t] /= num_paths;
  }
  const auto& phi_half = res.phi_samples.back();
  double s = 0.0;
  for (double v : phi_half) s += v;
  res.mean_phi_half = s / num_paths;
  res.phi_half_q05 = quantile(phi_half, 0.05);
  res.phi_half_q95 = quantile(phi_half, 0.95);
  res.max_mean_backlog = *std::max_element(res.mean_backlog.begin(), res.mean_backlog.end());

  if (!out_dir.empty()) {
    auto phi = open_out(out_dir, "example41_phi.csv");
    phi << "path,snapshot_t,phi\n";
    for (size_t k = 0; k < res.snapshot_ts.size(); ++k)
      for (int p = 0; p < num_paths; ++p)
        phi << p << "," << res.snapshot_ts[k] << ","
            << csv::format_double(res.phi_samples[k][p]) << "\n";
    auto series = open_out(out_dir, "example41_series.csv");
    series << "t,mean_backlog,mean_accept\n";
    for (int t = 0; t < T; ++t)
      series << t + 1 << "," << csv::format_double(res.mean_backlog[t]) << ","
             << csv::format_double(res.mean_accept[t]) << "\n";
  }
  return res;
}

NearCriticalResult recipe_near_critical_ratio(const std::vector<int>& T_list, int num_paths,
                                              std::uint64_t seed, const std::string& out_dir,
                                              bool accept_series, bool nc_sqrt_only) {
  NearCriticalResult res;
  const int largest_T = *std::max_element(T_list.begin(), T_list.end());

  for (int T : T_list) {
    const double gamma = std::sqrt(static_cast<double>(T));
    struct Regime {
      std::string label;
      double epsilon;
      bool stable;
    };
    const double sqrt_T = std::sqrt(static_cast<double>(T));
    std::vector<Regime> regimes = {{"stable", 0.1, true},
                                   {"nc_sqrt", 0.5 / sqrt_T, false},
                                   {"nc_linear", 0.5 / T, false}};
    if (nc_sqrt_only) regimes = {{"nc_sqrt", 0.5 / sqrt_T, false}};
    for (const Regime& reg : regimes) {
      Instance inst = make_uniform_single(T, 0.5, reg.epsilon);
      inst.gamma = gamma;
      const double eta = 1.0 / sqrt_T;
      const double zeta = reg.stable ? 10.0 / sqrt_T : std::sqrt(gamma / T);

      std::vector<double> diff_co(num_paths, 0.0), diff_ca(num_paths, 0.0);
      bool track = accept_series && T == largest_T && reg.label == "nc_sqrt";
      std::vector<double> z_co, z_ca;
      std::mutex series_mutex;
      if (track) {
        z_co.assign(T, 0.0);
        z_ca.assign(T, 0.0);
      }

      parallel_for_paths(num_paths, [&](int p) {
        SamplePath path = materialize_path(inst, seed, static_cast<std::uint32_t>(p));
        OfflineSolution opt = solve_opt(inst, path);

        CodlPolicy co(1.0);
        CadlPolicy ca(EtaSchedule::fixed(eta), zeta);
        std::vector<double> local_co, local_ca;
        EpisodeObserver co_obs = nullptr, ca_obs = nullptr;
        if (track) {
          local_co.assign(T, 0.0);
          local_ca.assign(T, 0.0);
          co_obs = [&](int t, const PathState&, const Decision& d, const DualState*) {
            local_co[t - 1] = d.total();
          };
          ca_obs = [&](int t, const PathState&, const Decision& d, const DualState*) {
            local_ca[t - 1] = d.total();
          };
        }
        RunResult rco = run_episode(inst, co, path, seed, static_cast<std::uint32_t>(p), co_obs);
        RunResult rca = run_episode(inst, ca, path, seed, static_cast<std::uint32_t>(p), ca_obs);
        diff_co[p] = opt.objective - rco.objective;
        diff_ca[p] = opt.objective - rca.objective;
        if (track) {
          std::lock_guard<std::mutex> lock(series_mutex);
          for (int t = 0; t < T; ++t) {
            z_co[t] += local_co[t];
            z_ca[t] += local_ca[t];
          }
        }
      });

      NearCriticalRow row;
      row.T = T;
      row.regime = reg.label;
      row.epsilon = reg.epsilon;
      for (int p = 0; p < num_paths; ++p) {
        row.diff_co += diff_co[p];
        row.diff_ca += diff_ca[p];
      }
      row.diff_co /= num_paths;
      row.diff_ca /= num_paths;
      row.ratio = row.diff_ca != 0.0 ? row.diff_co / row.diff_ca : 0.0;
      res.rows.push_back(row);
      if (track) {
        res.mean_z_co.assign(T, 0.0);
        res.mean_z_ca.assign(T, 0.0);
        for (int t = 0; t < T; ++t) {
          res.mean_z_co[t] = z_co[t] / num_paths;
          res.mean_z_ca[t] = z_ca[t] / num_paths;
        }
      }
    }
  }

  if (!out_dir.empty()) {
    auto out = open_out(out_dir, "near_critical_ratio.csv");
    out << "T,regime,epsilon,diff_co,diff_ca,ratio\n";
    for (const auto& r : res.rows)
      out << r.T << "," << r.regime << "," << csv::format_double(r.epsilon) << ","
          << csv::format_double(r.diff_co) << "," << csv::format_double(r.diff_ca) << ","
          << csv::format_double(r.ratio) << "\n";
    if (!res.mean_z_co.empty()) {
      auto acc = open_out(out_dir, "near_critical_accept.csv");
      acc << "t,mean_z_co,mean_z_ca\n";
      for (size_t t = 0; t < res.mean_z_co.size(); ++t)
        acc << t + 1 << "," << csv::format_double(res.mean_z_co[t]) << ","
            << csv::format_double(res.mean_z_ca[t]) << "\n";
    }
  }
  return res;
}

ImpossibilityResult recipe_impossibility(int T, double gamma, int num_paths,
                                         std::uint64_t seed, const std::string& out_dir) {
  Instance inst = make_lower_bound_instance(LowerBoundInstance::kI3, T, 0.0);
  inst.gamma = gamma;

  ImpossibilityResult res;
  res.T = T;
  res.gamma = gamma;
  res.reference = 0.5 * T - 2.0 * std::sqrt(static_cast<double>(T));

  std::vector<double> bound(num_paths, 0.0), accepted(num_paths, 0.0),
      total_backlog(num_paths, 0.0);
  parallel_for_paths(num_paths, [&](int p) {
    SamplePath path = materialize_path(inst, seed, static_cast<std::uint32_t>(p));
    // service-following feasible solution: z_t = 1[s_t = 1] up to
    // capacity; it earns min(S_T, c) with zero backlog
    double services = 0.0;
    for (int t = 0; t < T; ++t) services += path.services[t].s(0, 0);
    bound[p] = std::min(services, inst.capacity(0, 0));

    CadlPolicy ca(EtaSchedule::fixed(default_eta(inst)), default_zeta(inst));
    RunResult r = run_episode(inst, ca, path, seed, static_cast<std::uint32_t>(p));
    accepted[p] = r.total_reward;  // unit rewards: reward == acceptances
    total_backlog[p] = r.avg_backlog * T;
  });
  for (int p = 0; p < num_paths; ++p) {
    res.mean_offline_bound += bound[p];
    res.cadl_mean_acceptances += accepted[p];
    res.cadl_mean_total_backlog += total_backlog[p];
  }
  res.mean_offline_bound /= num_paths;
  res.cadl_mean_acceptances /= num_paths;
  res.cadl_mean_total_backlog /= num_paths;

  if (!out_dir.empty()) {
    auto out = open_out(out_dir, "impossibility.csv");
    out << "T,gamma,mean_offline_bound,reference,cadl_mean_acceptances,cadl_mean_total_"
           "backlog\n";
    out << T << "," << csv::format_double(gamma) << ","
        << csv::format_double(res.mean_offline_bound) << ","
        << csv::format_double(res.reference) << ","
        << csv::format_double(res.cadl_mean_acceptances) << ","
        << csv::format_double(res.cadl_mean_total_backlog) << "\n";
  }
  return res;
}

std::vector<DpGapRow> recipe_dp_gap(const std::vector<int>& T_list,
                                    const std::vector<double>& gamma_list,
                                    const std::string& out_dir) {
  std::vector<DpGapRow> rows;
  for (int T : T_list) {
    for (double gamma : gamma_list) {
      DpOracleResult dp = dp_oracle_single_affiliate(T, gamma);
      rows.push_back({T, gamma, dp.value, 0.5 * T - dp.value});
    }
  }
  if (!out_dir.empty()) {
    auto out = open_out(out_dir, "dp_gap.csv");
    out << "T,gamma,dp_value,gap\n";
    for (const auto& r : rows)
      out << r.T << "," << csv::format_double(r.gamma) << "," << csv::format_double(r.dp_value)
          << "," << csv::format_double(r.gap) << "\n";
  }
  return rows;
}

ShiftPair make_shift_pair(int T) {
  // Two years with the same capacities but a shifted tied-case
  // composition. Rewards are strongly ranked across affiliates so
  // score-greedy matching is bursty unless the duals self-correct
  // within a batch.
  RewardSpec reward;
  reward.kind = RewardSpec::Kind::kUniformBox;
  reward.lo = {0.55, 0.35, 0.15};
  reward.hi = {1.0, 0.8, 0.6};
  std::vector<double> rho = {0.35, 0.33, 0.32};

  ShiftPair pair;
  pair.pool_year = make_synthetic_multi(3, T, {0.05, 0.05, 0.2}, reward, rho, 0.05);
  pair.run_year = make_synthetic_multi(3, T, {0.2, 0.05, 0.05}, reward, rho, 0.05);
  for (Instance* inst : {&pair.pool_year, &pair.run_year}) {
    inst->alpha = 3.0;
    inst->gamma = 5.0;
    inst->service_mode = ServiceMode::kDeterministic;
  }
  return pair;
}

namespace {

std::vector<BenchmarkRow> summarize_runs(const ExperimentConfig& config) {
  auto rows = run_algorithms(config);
  std::vector<BenchmarkRow> out;
  for (const auto& cfg : config.algorithms) {
    BenchmarkRow row;
    row.algo = cfg.name;
    int count = 0;
    for (const auto& r : rows) {
      if (r.algo != cfg.name) continue;
      row.mean_objective += r.result.objective;
      row.mean_reward += r.result.total_reward;
      row.mean_overalloc += r.result.over_allocation;
      row.mean_avg_backlog += r.result.avg_backlog;
      ++count;
    }
    row.mean_objective /= count;
    row.mean_reward /= count;
    row.mean_overalloc /= count;
    row.mean_avg_backlog /= count;
    out.push_back(row);
  }
  return out;
}

void write_benchmark_rows(const std::string& out_dir, const std::string& name,
                          const std::vector<BenchmarkRow>& rows) {
  auto out = open_out(out_dir, name);
  out << "algo,mean_objective,mean_reward,mean_overalloc,mean_avg_backlog\n";
  for (const auto& r : rows)
    out << r.algo << "," << csv::format_double(r.mean_objective) << ","
        << csv::format_double(r.mean_reward) << "," << csv::format_double(r.mean_overalloc)
        << "," << csv::format_double(r.mean_avg_backlog) << "\n";
}

}  // namespace

std::vector<BenchmarkRow> recipe_batch_table(int T, int num_paths, std::uint64_t seed,
                                             int batch, int iterations,
                                             const std::string& out_dir) {
  ShiftPair pair = make_shift_pair(T);
  ExperimentConfig config;
  config.instance = pair.run_year;
  config.num_paths = num_paths;
  config.seed = seed;

  AlgorithmConfig ro;
  ro.name = "ro-learning";
  AlgorithmConfig rob;
  rob.name = "ro-learning-b";
  rob.batch = batch;
  AlgorithmConfig robi;
  robi.name = "ro-learning-b-iterate";
  robi.batch = batch;
  robi.iterations = iterations;
  config.algorithms = {ro, rob, robi};

  auto rows = summarize_runs(config);
  if (!out_dir.empty()) write_benchmark_rows(out_dir, "batch_table.csv", rows);
  return rows;
}

std::vector<BenchmarkRow> recipe_shift_robustness(int T, int num_paths, std::uint64_t seed,
                                                  const std::string& out_dir) {
  ShiftPair pair = make_shift_pair(T);

  // the sampling pool is one realized arrival year from the pool
  // distribution; the run year follows the shifted distribution
  SamplePath pool_path = materialize_path(pair.pool_year, seed ^ 0x706f6f6cULL, 0);
  auto pool = std::make_shared<Trace>();
  pool->m = pair.pool_year.m;
  pool->l = pair.pool_year.l;
  pool->arrivals = pool_path.arrivals;

  ExperimentConfig config;
  config.instance = pair.run_year;
  config.num_paths = num_paths;
  config.seed = seed;

  AlgorithmConfig ro;
  ro.name = "ro-learning";
  AlgorithmConfig sampling;
  sampling.name = "sampling";
  sampling.pool = pool;
  config.algorithms = {ro, sampling};

  auto rows = summarize_runs(config);
  if (!out_dir.empty()) write_benchmark_rows(out_dir, "shift_robustness.csv", rows);
  return rows;
}

}  // namespace dualmatch
