#include "dualmatch/io.hpp"

#include <fstream>

#include <json.hpp>

#include "dualmatch/csv.hpp"
#include "dualmatch/generators.hpp"
#include "dualmatch/trace.hpp"

namespace dualmatch {

using nlohmann::json;

namespace {

Grid parse_rho(const json& j, int m, int l) {
  Grid rho(m, l);
  if (j.is_number()) {
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < l; ++k) rho(i, k) = j.get<double>();
  } else if (j.is_array() && !j.empty() && j[0].is_array()) {
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < l; ++k) rho(i, k) = j.at(i).at(k).get<double>();
  } else {
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < l; ++k) rho(i, k) = j.at(i).get<double>();
  }
  return rho;
}

std::shared_ptr<GeneratorSpec> parse_arrival(const json& j) {
  auto spec = std::make_shared<GeneratorSpec>();
  spec->kind = generator_kind_from_string(j.at("kind").get<std::string>());
  if (spec->kind == GeneratorKind::kTrace) {
    spec->trace_path = j.at("path").get<std::string>();
    spec->trace = std::make_shared<Trace>(load_trace(spec->trace_path));
    return spec;
  }
  if (spec->kind == GeneratorKind::kSyntheticMulti) {
    spec->tied_probs = j.at("tied_probs").get<std::vector<double>>();
    const json& r = j.at("reward");
    std::string rk = r.at("kind").get<std::string>();
    if (rk == "uniform") {
      spec->reward.kind = RewardSpec::Kind::kUniformBox;
      spec->reward.lo = r.at("lo").get<std::vector<double>>();
      spec->reward.hi = r.at("hi").get<std::vector<double>>();
    } else if (rk == "discrete") {
      spec->reward.kind = RewardSpec::Kind::kDiscrete;
      spec->reward.values = r.at("values").get<std::vector<std::vector<double>>>();
      spec->reward.probs = r.at("probs").get<std::vector<double>>();
    } else {
      throw std::invalid_argument("unknown reward kind: " + rk);
    }
    if (j.contains("consumption")) {
      const json& c = j.at("consumption");
      std::string ck = c.at("kind").get<std::string>();
      if (ck == "uniform_int") {
        spec->consumption.kind = ConsumptionSpec::Kind::kUniformInt;
        spec->consumption.lo = c.at("lo").get<int>();
        spec->consumption.hi = c.at("hi").get<int>();
      } else if (ck != "ones") {
        throw std::invalid_argument("unknown consumption kind: " + ck);
      }
    }
  }
  return spec;
}

}  // namespace

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance config: " + path);
  json j = json::parse(in);

  Instance inst;
  inst.m = j.value("m", 1);
  inst.l = j.value("l", 1);
  inst.horizon = j.at("T").get<int>();
  inst.rho = parse_rho(j.at("rho"), inst.m, inst.l);
  inst.epsilon = j.value("epsilon", 0.0);
  inst.alpha = j.value("alpha", 0.0);
  inst.gamma = j.value("gamma", 0.0);
  inst.service_mode = service_mode_from_string(j.value("service_mode", "bernoulli"));
  inst.n_bar = j.value("n_bar", 10.0);
  if (j.contains("arrival")) inst.arrival = parse_arrival(j.at("arrival"));
  return inst;
}

void save_instance(const Instance& inst, const std::string& path) {
  json j;
  j["m"] = inst.m;
  j["l"] = inst.l;
  j["T"] = inst.horizon;
  std::vector<std::vector<double>> rho(inst.m, std::vector<double>(inst.l));
  for (int i = 0; i < inst.m; ++i)
    for (int k = 0; k < inst.l; ++k) rho[i][k] = inst.rho(i, k);
  j["rho"] = rho;
  j["epsilon"] = inst.epsilon;
  j["alpha"] = inst.alpha;
  j["gamma"] = inst.gamma;
  j["service_mode"] = to_string(inst.service_mode);
  j["n_bar"] = inst.n_bar;
  if (inst.arrival) {
    json a;
    a["kind"] = to_string(inst.arrival->kind);
    if (inst.arrival->kind == GeneratorKind::kTrace) {
      a["path"] = inst.arrival->trace_path;
    } else if (inst.arrival->kind == GeneratorKind::kSyntheticMulti) {
      a["tied_probs"] = inst.arrival->tied_probs;
      json r;
      if (inst.arrival->reward.kind == RewardSpec::Kind::kUniformBox) {
        r["kind"] = "uniform";
        r["lo"] = inst.arrival->reward.lo;
        r["hi"] = inst.arrival->reward.hi;
      } else {
        r["kind"] = "discrete";
        r["values"] = inst.arrival->reward.values;
        r["probs"] = inst.arrival->reward.probs;
      }
      a["reward"] = r;
      if (inst.arrival->consumption.kind == ConsumptionSpec::Kind::kUniformInt) {
        a["consumption"] = {{"kind", "uniform_int"},
                            {"lo", inst.arrival->consumption.lo},
                            {"hi", inst.arrival->consumption.hi}};
      }
    }
    j["arrival"] = a;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance config: " + path);
  out << j.dump(2) << "\n";
}

void write_results_csv(const std::string& path, const std::vector<RunTableRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write results csv: " + path);
  out << "path,algo,reward,overalloc,avg_backlog,objective,stopping_time\n";
  for (const auto& r : rows) {
    out << r.path << "," << r.algo << "," << csv::format_double(r.result.total_reward) << ","
        << csv::format_double(r.result.over_allocation) << ","
        << csv::format_double(r.result.avg_backlog) << ","
        << csv::format_double(r.result.objective) << "," << r.result.stopping_time << "\n";
  }
}

void write_regret_csv(const std::string& path, const std::vector<RegretEstimate>& estimates) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write regret csv: " + path);
  out << "path,opt,algo,alg_value,regret\n";
  for (const auto& est : estimates) {
    for (const auto& row : est.per_path) {
      out << row.path << "," << csv::format_double(row.opt) << "," << est.algo << ","
          << csv::format_double(row.alg_value) << "," << csv::format_double(row.regret)
          << "\n";
    }
  }
}

void write_certificate_json(const std::string& path, const Instance& inst,
                            const OfflineSolution& sol) {
  json j;
  j["objective"] = sol.objective;
  j["g_event"] = sol.g_event;
  if (sol.has_certificate) {
    j["dual_value"] = sol.dual_value;
    std::vector<std::vector<double>> theta(inst.m, std::vector<double>(inst.l));
    std::vector<std::vector<double>> lambda(inst.m, std::vector<double>(inst.l));
    for (int i = 0; i < inst.m; ++i)
      for (int k = 0; k < inst.l; ++k) {
        theta[i][k] = sol.theta(i, k);
        lambda[i][k] = sol.lambda(i, k);
      }
    j["theta"] = theta;
    j["lambda"] = lambda;
    std::vector<std::vector<double>> beta;
    for (const Grid& g : sol.beta) {
      std::vector<double> flat;
      for (int i = 0; i < inst.m; ++i)
        for (int k = 0; k < inst.l; ++k) flat.push_back(g(i, k));
      beta.push_back(std::move(flat));
    }
    j["beta"] = beta;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write certificate json: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace dualmatch
