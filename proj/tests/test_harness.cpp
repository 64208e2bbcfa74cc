#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "dualmatch/csv.hpp"
#include "dualmatch/experiment.hpp"
#include "dualmatch/generators.hpp"
#include "dualmatch/io.hpp"
#include "test_helpers.hpp"

using namespace dualmatch;
using namespace dmtest;

TEST_CASE("paired regret on a deterministic-arrival instance") {
  Instance inst = make_lower_bound_instance(LowerBoundInstance::kI3, 60, 0.1);
  inst.gamma = 1.0;

  ExperimentConfig config;
  config.instance = inst;
  config.num_paths = 1;
  config.seed = 3;
  AlgorithmConfig ca;
  ca.name = "ca-dl";
  config.algorithms = {ca};

  auto est = estimate_regret(config);
  REQUIRE(est.size() == 1);
  CHECK(est[0].per_path.size() == 1);
  CHECK(est[0].mean_regret ==
        doctest::Approx(est[0].per_path[0].opt - est[0].per_path[0].alg_value));
  CHECK(est[0].mean_regret == doctest::Approx(est[0].mean_opt - est[0].mean_alg));
  CHECK(est[0].per_path[0].regret >= -1e-6);
}

TEST_CASE("doubling the path count keeps the first half unchanged") {
  Instance inst = make_uniform_single(80, 0.5, 0.1);
  inst.gamma = 2.0;
  ExperimentConfig config;
  config.instance = inst;
  config.seed = 12;
  AlgorithmConfig co;
  co.name = "co-dl";
  config.algorithms = {co};

  config.num_paths = 10;
  auto small = estimate_regret(config);
  config.num_paths = 20;
  auto big = estimate_regret(config);
  for (int p = 0; p < 10; ++p) {
    CHECK(small[0].per_path[p].opt == big[0].per_path[p].opt);
    CHECK(small[0].per_path[p].alg_value == big[0].per_path[p].alg_value);
  }
}

TEST_CASE("common random numbers: every algorithm sees the same path") {
  Instance inst = make_shift_pair(100).run_year;
  SamplePath a = materialize_path(inst, 9, 4);
  SamplePath b = materialize_path(inst, 9, 4);
  REQUIRE(a.horizon() == b.horizon());
  for (int t = 0; t < a.horizon(); ++t) {
    CHECK(a.arrivals[t].reward == b.arrivals[t].reward);
    CHECK(a.arrivals[t].target == b.arrivals[t].target);
    CHECK(a.services[t].s == b.services[t].s);
  }
}

TEST_CASE("results CSV rows satisfy the objective identity") {
  Instance inst = make_shift_pair(120).run_year;
  ExperimentConfig config;
  config.instance = inst;
  config.num_paths = 6;
  config.seed = 5;
  AlgorithmConfig ro;
  ro.name = "ro-learning";
  config.algorithms = {ro};
  auto rows = run_algorithms(config);
  REQUIRE(rows.size() == 6);

  auto path = std::filesystem::temp_directory_path() / "dm_results.csv";
  write_results_csv(path.string(), rows);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  int count = 0;
  while (std::getline(in, line)) {
    auto cols = csv::split(line);
    REQUIRE(cols.size() == 7);
    double reward = csv::parse_double(cols[2]);
    double over = csv::parse_double(cols[3]);
    double backlog = csv::parse_double(cols[4]);
    double objective = csv::parse_double(cols[5]);
    CHECK(std::abs(objective - (reward - inst.alpha * over - inst.gamma * backlog)) < 1e-9);
    ++count;
  }
  CHECK(count == 6);
}

TEST_CASE("recipes are deterministic given the seed") {
  auto a = recipe_dp_gap({50, 100}, {1.0});
  auto b = recipe_dp_gap({50, 100}, {1.0});
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].dp_value == b[i].dp_value);

  auto r1 = recipe_impossibility(200, 0.0, 50, 77);
  auto r2 = recipe_impossibility(200, 0.0, 50, 77);
  CHECK(r1.mean_offline_bound == r2.mean_offline_bound);
  CHECK(r1.cadl_mean_total_backlog == r2.cadl_mean_total_backlog);
}

TEST_CASE("worker pool honors DUALMATCH_THREADS") {
  setenv("DUALMATCH_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  unsetenv("DUALMATCH_THREADS");
  CHECK(worker_count() >= 1);
}

TEST_CASE("parallel results are schedule-invariant") {
  Instance inst = make_uniform_single(60, 0.5, 0.1);
  inst.gamma = 1.0;
  ExperimentConfig config;
  config.instance = inst;
  config.num_paths = 16;
  config.seed = 31;
  AlgorithmConfig ca;
  ca.name = "ca-dl";
  config.algorithms = {ca};

  setenv("DUALMATCH_THREADS", "1", 1);
  auto serial = estimate_regret(config);
  setenv("DUALMATCH_THREADS", "8", 1);
  auto parallel = estimate_regret(config);
  unsetenv("DUALMATCH_THREADS");
  for (int p = 0; p < 16; ++p) {
    CHECK(serial[0].per_path[p].opt == parallel[0].per_path[p].opt);
    CHECK(serial[0].per_path[p].alg_value == parallel[0].per_path[p].alg_value);
  }
}

TEST_CASE("instance JSON round-trips") {
  Instance inst = make_shift_pair(240).run_year;
  auto path = std::filesystem::temp_directory_path() / "dm_instance.json";
  save_instance(inst, path.string());
  Instance loaded = load_instance(path.string());
  CHECK(loaded.m == inst.m);
  CHECK(loaded.horizon == inst.horizon);
  CHECK(loaded.rho == inst.rho);
  CHECK(loaded.alpha == inst.alpha);
  CHECK(loaded.service_mode == inst.service_mode);
  REQUIRE(loaded.arrival);
  CHECK(loaded.arrival->kind == GeneratorKind::kSyntheticMulti);
  CHECK(loaded.arrival->tied_probs == inst.arrival->tied_probs);
  CHECK(validate_instance(loaded).ok());
}
