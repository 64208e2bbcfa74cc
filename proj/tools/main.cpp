#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dualmatch/csv.hpp"
#include "dualmatch/dp_oracle.hpp"
#include "dualmatch/experiment.hpp"
#include "dualmatch/generators.hpp"
#include "dualmatch/io.hpp"
#include "dualmatch/trace.hpp"

namespace {

using namespace dualmatch;

struct GlobalOpts {
  std::uint64_t seed = 1;
  int paths = 1;
  std::string out_dir = ".";
  std::string format = "csv";
  bool diagnostics = false;
};

// "a..b", "a..b:step", or a comma list.
std::vector<double> parse_range(const std::string& text) {
  std::vector<double> values;
  auto dots = text.find("..");
  if (dots != std::string::npos) {
    double lo = csv::parse_double(text.substr(0, dots));
    std::string rest = text.substr(dots + 2);
    double step = 1.0;
    auto colon = rest.find(':');
    if (colon != std::string::npos) {
      step = csv::parse_double(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    double hi = csv::parse_double(rest);
    if (step <= 0.0) throw CLI::ValidationError("range step must be positive");
    for (double v = lo; v <= hi + 1e-12; v += step) values.push_back(v);
    return values;
  }
  for (auto part : csv::split(text)) values.push_back(csv::parse_double(part));
  return values;
}

Instance instance_from_kind(const std::string& kind, int T, double rho, double epsilon) {
  if (kind == "uniform_single") return make_uniform_single(T, rho, epsilon);
  if (kind == "lb_i1") return make_lower_bound_instance(LowerBoundInstance::kI1, T, epsilon);
  if (kind == "lb_i2") return make_lower_bound_instance(LowerBoundInstance::kI2, T, epsilon);
  if (kind == "lb_i3") return make_lower_bound_instance(LowerBoundInstance::kI3, T, epsilon);
  if (kind == "lb_i4") return make_lower_bound_instance(LowerBoundInstance::kI4, T, epsilon);
  if (kind == "shift_pool") return make_shift_pair(T).pool_year;
  if (kind == "shift_run") return make_shift_pair(T).run_year;
  throw CLI::ValidationError("unknown instance kind: " + kind);
}

std::filesystem::path out_path(const GlobalOpts& g, const std::string& name) {
  std::filesystem::create_directories(g.out_dir);
  return std::filesystem::path(g.out_dir) / name;
}

AlgorithmConfig algo_config(const Instance& inst, const std::string& name, double eta,
                            double zeta, double k, const std::string& pool_path,
                            int replications, int batch, int iterations) {
  AlgorithmConfig cfg;
  cfg.name = name;
  cfg.eta = eta;
  cfg.zeta = zeta;
  cfg.k = k;
  cfg.replications = replications;
  cfg.batch = batch;
  cfg.iterations = iterations;
  if (name == "sampling") {
    if (pool_path.empty()) throw CLI::ValidationError("sampling requires --pool <trace.csv>");
    auto pool = std::make_shared<Trace>(load_trace(pool_path));
    if (pool->m != inst.m) throw CLI::ValidationError("pool trace affiliate count mismatch");
    cfg.pool = pool;
  }
  return cfg;
}

void write_diagnostics(const GlobalOpts& g, const ExperimentConfig& config) {
  std::ofstream out(out_path(g, "diagnostics.csv"));
  out << "path,algo,t,backlog_total,accepted,phi_1\n";
  for (int p = 0; p < config.num_paths; ++p) {
    SamplePath path = materialize_path(config.instance, config.seed, p);
    for (const auto& acfg : config.algorithms) {
      auto policy = make_policy(config.instance, acfg);
      auto observer = [&](int t, const PathState& st, const Decision& d,
                          const DualState* duals) {
        out << p << "," << acfg.name << "," << t << ","
            << csv::format_double(st.backlog.sum()) << "," << csv::format_double(d.total())
            << "," << (duals ? csv::format_double(duals->theta(0, 0) + duals->lambda(0, 0)) : "")
            << "\n";
      };
      run_episode(config.instance, *policy, path, config.seed, p, observer);
    }
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"dualmatch: online matching with post-allocation service"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--paths", g.paths, "number of sample paths");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--format", g.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--diagnostics", g.diagnostics, "emit per-period series");

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "write an instance config and optionally a trace");
  std::string gen_kind = "uniform_single";
  int gen_T = 1000;
  double gen_rho = 0.5, gen_eps = 0.1, gen_alpha = 0.0, gen_gamma = 0.0;
  std::string gen_mode = "bernoulli";
  std::string gen_instance_out = "instance.json";
  std::string gen_trace_out;
  bool gen_with_services = false;
  gen->add_option("--kind", gen_kind,
                  "uniform_single|lb_i1|lb_i2|lb_i3|lb_i4|shift_pool|shift_run");
  gen->add_option("--T", gen_T, "horizon");
  gen->add_option("--rho", gen_rho, "capacity ratio (single-affiliate kinds)");
  gen->add_option("--epsilon", gen_eps, "service slack");
  gen->add_option("--alpha", gen_alpha, "over-allocation penalty");
  gen->add_option("--gamma", gen_gamma, "congestion penalty");
  gen->add_option("--service-mode", gen_mode, "bernoulli|deterministic|idle");
  gen->add_option("--instance-out", gen_instance_out, "instance JSON path");
  gen->add_option("--emit-trace", gen_trace_out, "also sample one arrival trace to this CSV");
  gen->add_flag("--with-services", gen_with_services, "embed service draws in the trace");

  // ---- run ----
  auto* run = app.add_subcommand("run", "run one algorithm over N paths");
  std::string run_algo = "ca-dl", run_instance, run_pool;
  double run_eta = -1.0, run_zeta = -1.0, run_k = 1.0;
  int run_reps = 5, run_batch = 30, run_iters = 10;
  run->add_option("--algo", run_algo,
                  "ca-dl|co-dl|ro-learning|sampling|random|min-backlog|"
                  "ro-learning-b|ro-learning-b-iterate")
      ->required();
  run->add_option("--instance", run_instance, "instance JSON")->required();
  run->add_option("--eta", run_eta, "fixed step size (default 1/sqrt(T))");
  run->add_option("--zeta", run_zeta, "backlog step size (default per regime)");
  run->add_option("--k", run_k, "co-dl step constant");
  run->add_option("--pool", run_pool, "sampling pool trace");
  run->add_option("--replications", run_reps, "sampling replications");
  run->add_option("--batch", run_batch, "batch size");
  run->add_option("--iterations", run_iters, "batch primal-dual iterations");

  // ---- sweep ----
  auto* sweep = app.add_subcommand("sweep", "grid over penalties and step scalars");
  std::string sweep_instance, sweep_algo = "ca-dl", sweep_pool;
  std::string sweep_alpha = "", sweep_gamma = "", sweep_eps = "", sweep_T = "";
  std::string sweep_eta = "", sweep_zeta = "";
  sweep->add_option("--instance", sweep_instance, "instance JSON")->required();
  sweep->add_option("--algo", sweep_algo, "algorithm name");
  sweep->add_option("--pool", sweep_pool, "sampling pool trace");
  sweep->add_option("--alpha", sweep_alpha, "alpha grid, e.g. 1..5");
  sweep->add_option("--gamma", sweep_gamma, "gamma grid, e.g. 0..10");
  sweep->add_option("--epsilon", sweep_eps, "epsilon grid");
  sweep->add_option("--T", sweep_T, "horizon grid");
  sweep->add_option("--eta", sweep_eta, "eta grid");
  sweep->add_option("--zeta", sweep_zeta, "zeta grid");

  // ---- offline ----
  auto* offline = app.add_subcommand("offline", "solve the offline benchmark on a trace");
  std::string off_trace, off_instance, off_solver = "opt";
  double off_alpha = 0.0, off_gamma = 0.0, off_rho = 0.5, off_eps = 0.1;
  offline->add_option("--trace", off_trace, "trace CSV (uses --rho/--epsilon/penalties)");
  offline->add_option("--instance", off_instance, "instance JSON (alternative to --trace)");
  offline->add_option("--alpha", off_alpha, "over-allocation penalty");
  offline->add_option("--gamma", off_gamma, "congestion penalty");
  offline->add_option("--rho", off_rho, "capacity ratio for --trace");
  offline->add_option("--epsilon", off_eps, "service slack for --trace");
  offline->add_option("--solver", off_solver, "opt|surrogate")
      ->check(CLI::IsMember({"opt", "surrogate"}));

  // ---- recipe ----
  auto* recipe = app.add_subcommand("recipe", "canonical experiments");
  std::string recipe_name;
  int rec_T = 2000;
  double rec_gamma = 0.0;
  std::string rec_T_list = "500,1000,2000,4000", rec_gamma_list = "1,4";
  int rec_batch = 30, rec_iters = 10;
  recipe->add_option("name", recipe_name,
                     "example41|near_critical_ratio|impossibility|dp_gap|batch_table|"
                     "shift_robustness")
      ->required();
  recipe->add_option("--T", rec_T, "horizon");
  recipe->add_option("--gamma", rec_gamma, "congestion penalty");
  recipe->add_option("--T-list", rec_T_list, "comma list of horizons");
  recipe->add_option("--gamma-list", rec_gamma_list, "comma list of gammas");
  recipe->add_option("--batch", rec_batch, "batch size");
  recipe->add_option("--iterations", rec_iters, "batch iterations");

  // ---- dp ----
  auto* dp = app.add_subcommand("dp", "single-affiliate DP oracle");
  int dp_T = 400;
  double dp_gamma = 1.0;
  dp->add_option("--T", dp_T, "horizon")->required();
  dp->add_option("--gamma", dp_gamma, "congestion penalty")->required();

  // ---- validate ----
  auto* validate = app.add_subcommand("validate", "check an instance config");
  std::string val_instance;
  validate->add_option("--instance", val_instance, "instance JSON")->required();

  // global flags may appear after the subcommand
  for (CLI::App* sub : {gen, run, sweep, offline, recipe, dp, validate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (gen->parsed()) {
    Instance inst = instance_from_kind(gen_kind, gen_T, gen_rho, gen_eps);
    inst.alpha = gen_alpha;
    inst.gamma = gen_gamma;
    inst.service_mode = service_mode_from_string(gen_mode);
    auto rep = validate_instance(inst);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    if (!rep.ok()) {
      for (const auto& e : rep.errors) std::cerr << "error: " << e << "\n";
      return 2;
    }
    save_instance(inst, (out_path(g, gen_instance_out)).string());
    std::cout << "wrote " << (out_path(g, gen_instance_out)).string() << "\n";
    if (!gen_trace_out.empty()) {
      SamplePath path = materialize_path(inst, g.seed, 0);
      Trace trace;
      trace.m = inst.m;
      trace.l = inst.l;
      trace.arrivals = path.arrivals;
      if (gen_with_services)
        for (const auto& s : path.services) trace.services.push_back(s.s);
      save_trace(trace, out_path(g, gen_trace_out).string());
      std::cout << "wrote " << out_path(g, gen_trace_out).string() << "\n";
    }
    return 0;
  }

  if (run->parsed()) {
    ExperimentConfig config;
    config.instance = load_instance(run_instance);
    auto rep = validate_instance(config.instance);
    if (!rep.ok()) {
      for (const auto& e : rep.errors) std::cerr << "error: " << e << "\n";
      return 2;
    }
    config.num_paths = g.paths;
    config.seed = g.seed;
    config.algorithms = {algo_config(config.instance, run_algo, run_eta, run_zeta, run_k,
                                     run_pool, run_reps, run_batch, run_iters)};
    auto rows = run_algorithms(config);
    if (g.format == "json") {
      std::ofstream out(out_path(g, "results.json"));
      out << "[\n";
      for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out << "  {\"path\": " << r.path << ", \"algo\": \"" << r.algo
            << "\", \"reward\": " << r.result.total_reward
            << ", \"overalloc\": " << r.result.over_allocation
            << ", \"avg_backlog\": " << r.result.avg_backlog
            << ", \"objective\": " << r.result.objective
            << ", \"stopping_time\": " << r.result.stopping_time << "}"
            << (i + 1 < rows.size() ? "," : "") << "\n";
      }
      out << "]\n";
      std::cout << "wrote " << out_path(g, "results.json").string() << "\n";
    } else {
      write_results_csv(out_path(g, "results.csv").string(), rows);
      std::cout << "wrote " << out_path(g, "results.csv").string() << "\n";
    }
    if (g.diagnostics) write_diagnostics(g, config);
    return 0;
  }

  if (sweep->parsed()) {
    Instance base = load_instance(sweep_instance);
    auto grid_or = [](const std::string& text, double fallback) {
      return text.empty() ? std::vector<double>{fallback} : parse_range(text);
    };
    auto alphas = grid_or(sweep_alpha, base.alpha);
    auto gammas = grid_or(sweep_gamma, base.gamma);
    auto epsilons = grid_or(sweep_eps, base.epsilon);
    auto horizons = grid_or(sweep_T, base.horizon);
    auto etas = sweep_eta.empty() ? std::vector<double>{-1.0} : parse_range(sweep_eta);
    auto zetas = sweep_zeta.empty() ? std::vector<double>{-1.0} : parse_range(sweep_zeta);

    std::ofstream out(out_path(g, "sweep.csv"));
    out << "alpha,gamma,epsilon,T,eta,zeta,algo,mean_reward,mean_overalloc,mean_avg_backlog,"
           "mean_objective\n";
    for (double T : horizons)
      for (double alpha : alphas)
        for (double gamma : gammas)
          for (double eps : epsilons)
            for (double eta : etas)
              for (double zeta : zetas) {
                ExperimentConfig config;
                config.instance = base;
                config.instance.horizon = static_cast<int>(T);
                config.instance.alpha = alpha;
                config.instance.gamma = gamma;
                config.instance.epsilon = eps;
                auto rep = validate_instance(config.instance);
                if (!rep.ok()) {
                  for (const auto& e : rep.errors) std::cerr << "error: " << e << "\n";
                  return 2;
                }
                config.num_paths = g.paths;
                config.seed = g.seed;
                config.algorithms = {algo_config(config.instance, sweep_algo, eta, zeta, 1.0,
                                                 sweep_pool, 5, 30, 10)};
                auto rows = run_algorithms(config);
                double reward = 0, over = 0, backlog = 0, objective = 0;
                for (const auto& r : rows) {
                  reward += r.result.total_reward;
                  over += r.result.over_allocation;
                  backlog += r.result.avg_backlog;
                  objective += r.result.objective;
                }
                int n = static_cast<int>(rows.size());
                out << alpha << "," << gamma << "," << eps << "," << static_cast<int>(T) << ","
                    << eta << "," << zeta << "," << sweep_algo << ","
                    << csv::format_double(reward / n) << "," << csv::format_double(over / n)
                    << "," << csv::format_double(backlog / n) << ","
                    << csv::format_double(objective / n) << "\n";
              }
    std::cout << "wrote " << out_path(g, "sweep.csv").string() << "\n";
    return 0;
  }

  if (offline->parsed()) {
    Instance inst;
    SamplePath path;
    if (!off_instance.empty()) {
      inst = load_instance(off_instance);
      path = materialize_path(inst, g.seed, 0);
    } else if (!off_trace.empty()) {
      auto trace = std::make_shared<Trace>(load_trace(off_trace));
      inst.m = trace->m;
      inst.l = trace->l;
      inst.horizon = trace->length();
      inst.rho = Grid(inst.m, inst.l, off_rho);
      inst.epsilon = off_eps;
      auto spec = std::make_shared<GeneratorSpec>();
      spec->kind = GeneratorKind::kTrace;
      spec->trace_path = off_trace;
      spec->trace = trace;
      inst.arrival = spec;
      path = materialize_path(inst, g.seed, 0);
    } else {
      std::cerr << "error: offline needs --trace or --instance\n";
      return 2;
    }
    inst.alpha = off_alpha;
    inst.gamma = off_gamma;

    OfflineSolution sol = off_solver == "surrogate"
                              ? solve_surrogate_primal(inst, path.arrivals)
                              : solve_opt(inst, path);
    std::cout << "objective " << csv::format_double(sol.objective) << "\n";
    write_certificate_json(out_path(g, "offline_certificate.json").string(), inst, sol);
    std::cout << "wrote " << out_path(g, "offline_certificate.json").string() << "\n";
    return 0;
  }

  if (recipe->parsed()) {
    if (recipe_name == "example41") {
      auto res = recipe_example41(rec_T, g.paths, g.seed, g.out_dir);
      std::cout << "mean phi at T/2: " << res.mean_phi_half
                << "  q05: " << res.phi_half_q05 << "  q95: " << res.phi_half_q95
                << "  max mean backlog: " << res.max_mean_backlog << "\n";
    } else if (recipe_name == "near_critical_ratio") {
      std::vector<int> Ts;
      for (double v : parse_range(rec_T_list)) Ts.push_back(static_cast<int>(v));
      auto res = recipe_near_critical_ratio(Ts, g.paths, g.seed, g.out_dir, true);
      for (const auto& r : res.rows)
        std::cout << "T=" << r.T << " " << r.regime << " ratio=" << r.ratio << "\n";
    } else if (recipe_name == "impossibility") {
      auto res = recipe_impossibility(rec_T, rec_gamma, g.paths, g.seed, g.out_dir);
      std::cout << "E[min(S_T, c)] = " << res.mean_offline_bound
                << " vs 0.5T - 2sqrt(T) = " << res.reference << "\n";
    } else if (recipe_name == "dp_gap") {
      std::vector<int> Ts;
      for (double v : parse_range(rec_T_list)) Ts.push_back(static_cast<int>(v));
      auto rows = recipe_dp_gap(Ts, parse_range(rec_gamma_list), g.out_dir);
      for (const auto& r : rows)
        std::cout << "T=" << r.T << " gamma=" << r.gamma << " gap=" << r.gap << "\n";
    } else if (recipe_name == "batch_table") {
      auto rows = recipe_batch_table(rec_T, g.paths, g.seed, rec_batch, rec_iters, g.out_dir);
      for (const auto& r : rows)
        std::cout << r.algo << " objective=" << r.mean_objective << "\n";
    } else if (recipe_name == "shift_robustness") {
      auto rows = recipe_shift_robustness(rec_T, g.paths, g.seed, g.out_dir);
      for (const auto& r : rows)
        std::cout << r.algo << " objective=" << r.mean_objective << "\n";
    } else {
      std::cerr << "error: unknown recipe " << recipe_name << "\n";
      return 2;
    }
    return 0;
  }

  if (dp->parsed()) {
    auto res = dp_oracle_single_affiliate(dp_T, dp_gamma);
    std::cout << "value " << csv::format_double(res.value) << " gap "
              << csv::format_double(0.5 * dp_T - res.value) << "\n";
    std::ofstream out(out_path(g, "dp_policy.csv"));
    out << "t,threshold\n";
    for (int t = 1; t <= dp_T; ++t) out << t << "," << res.thresholds[t] << "\n";
    if (!res.threshold_type)
      std::cerr << "warning: " << res.violations << " non-threshold states observed\n";
    return 0;
  }

  if (validate->parsed()) {
    Instance inst = load_instance(val_instance);
    auto rep = validate_instance(inst);
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
    for (const auto& e : rep.errors) std::cout << "error: " << e << "\n";
    if (!rep.ok()) return 2;
    std::cout << "ok\n";
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t seed_hint = 1;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string_view(argv[i]) == "--seed") seed_hint = std::strtoull(argv[i + 1], nullptr, 10);
  try {
    return run_cli(argc, argv);
  } catch (const CLI::Error&) {
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error (seed " << seed_hint << "): " << e.what() << "\n";
    return 1;
  }
}
