#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dualmatch/episode.hpp"
#include "dualmatch/offline.hpp"
#include "dualmatch/policies.hpp"

namespace dualmatch {

// Worker-pool size: DUALMATCH_THREADS when set, hardware default
// otherwise.
int worker_count();

// Runs fn(path_index) for every index in [0, n); results must be
// written into per-index slots by the callers.
void parallel_for_paths(int n, const std::function<void(int)>& fn, int threads = 0);

struct ExperimentConfig {
  Instance instance;
  std::vector<AlgorithmConfig> algorithms;
  int num_paths = 1;
  std::uint64_t seed = 1;
  bool diagnostics = false;
};

struct PathOutcome {
  int path = 0;
  double opt = 0.0;
  double alg_value = 0.0;
  double regret = 0.0;
};

struct RegretEstimate {
  std::string algo;
  double mean_opt = 0.0;
  double mean_alg = 0.0;
  double mean_regret = 0.0;  // mean(opt - alg) over common paths
  double std_err = 0.0;      // of the paired regret
  std::vector<PathOutcome> per_path;
};

// Paired regret with common random numbers: for each path seed the
// realized path is shared by every algorithm and by the offline solve.
std::vector<RegretEstimate> estimate_regret(const ExperimentConfig& config);

// Per-path run results without the offline benchmark.
struct RunTableRow {
  int path = 0;
  std::string algo;
  RunResult result;
};
std::vector<RunTableRow> run_algorithms(const ExperimentConfig& config);

// ---- canonical experiment recipes ----------------------------------

struct Example41Result {
  int T = 0;
  int num_paths = 0;
  std::vector<int> snapshot_ts;                 // sqrt(T), T^(2/3), T/2
  std::vector<std::vector<double>> phi_samples; // per snapshot, one phi per path
  std::vector<double> mean_backlog;             // per period
  std::vector<double> mean_accept;              // per period
  double mean_phi_half = 0.0;
  double phi_half_q05 = 0.0;
  double phi_half_q95 = 0.0;
  double max_mean_backlog = 0.0;
};
Example41Result recipe_example41(int T, int num_paths, std::uint64_t seed,
                                 const std::string& out_dir = "");

struct NearCriticalRow {
  int T = 0;
  std::string regime;  // "stable", "nc_sqrt", "nc_linear"
  double epsilon = 0.0;
  double diff_co = 0.0;
  double diff_ca = 0.0;
  double ratio = 0.0;
};
struct NearCriticalResult {
  std::vector<NearCriticalRow> rows;
  // acceptance-rate series at the largest T, epsilon = 0.5/sqrt(T)
  std::vector<double> mean_z_co;
  std::vector<double> mean_z_ca;
};
NearCriticalResult recipe_near_critical_ratio(const std::vector<int>& T_list, int num_paths,
                                              std::uint64_t seed,
                                              const std::string& out_dir = "",
                                              bool accept_series = false,
                                              bool nc_sqrt_only = false);

struct ImpossibilityResult {
  int T = 0;
  double gamma = 0.0;
  double mean_offline_bound = 0.0;  // E[min(S_T, 0.5T)], service-following value
  double reference = 0.0;           // 0.5T - 2 sqrt(T)
  double cadl_mean_acceptances = 0.0;
  double cadl_mean_total_backlog = 0.0;
};
ImpossibilityResult recipe_impossibility(int T, double gamma, int num_paths,
                                         std::uint64_t seed, const std::string& out_dir = "");

struct DpGapRow {
  int T = 0;
  double gamma = 0.0;
  double dp_value = 0.0;
  double gap = 0.0;  // 0.5T - dp_value
};
std::vector<DpGapRow> recipe_dp_gap(const std::vector<int>& T_list,
                                    const std::vector<double>& gamma_list,
                                    const std::string& out_dir = "");

struct BenchmarkRow {
  std::string algo;
  double mean_objective = 0.0;
  double mean_reward = 0.0;
  double mean_overalloc = 0.0;
  double mean_avg_backlog = 0.0;
};
// The synthetic distribution-shift pair: the pool year and run year
// differ in tied-case composition. Used by the batch and robustness
// recipes.
struct ShiftPair {
  Instance pool_year;
  Instance run_year;
};
ShiftPair make_shift_pair(int T);

std::vector<BenchmarkRow> recipe_batch_table(int T, int num_paths, std::uint64_t seed,
                                             int batch, int iterations,
                                             const std::string& out_dir = "");
std::vector<BenchmarkRow> recipe_shift_robustness(int T, int num_paths, std::uint64_t seed,
                                                  const std::string& out_dir = "");

}  // namespace dualmatch
