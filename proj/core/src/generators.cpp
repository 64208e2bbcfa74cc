#include "dualmatch/generators.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dualmatch/dynamics.hpp"
#include "dualmatch/trace.hpp"

namespace dualmatch {

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kUniformSingle: return "uniform_single";
    case GeneratorKind::kLbTiedFree: return "lb_tied_free";
    case GeneratorKind::kLbThreeReward: return "lb_three_reward";
    case GeneratorKind::kLbDeterministic: return "lb_deterministic";
    case GeneratorKind::kLbBernoulli: return "lb_bernoulli";
    case GeneratorKind::kSyntheticMulti: return "synthetic_multi";
    case GeneratorKind::kTrace: return "trace";
  }
  return "uniform_single";
}

GeneratorKind generator_kind_from_string(const std::string& s) {
  if (s == "uniform_single") return GeneratorKind::kUniformSingle;
  if (s == "lb_tied_free") return GeneratorKind::kLbTiedFree;
  if (s == "lb_three_reward") return GeneratorKind::kLbThreeReward;
  if (s == "lb_deterministic") return GeneratorKind::kLbDeterministic;
  if (s == "lb_bernoulli") return GeneratorKind::kLbBernoulli;
  if (s == "synthetic_multi") return GeneratorKind::kSyntheticMulti;
  if (s == "trace") return GeneratorKind::kTrace;
  throw std::invalid_argument("unknown generator kind: " + s);
}

namespace {

Instance base_single(int T, double rho, double epsilon, GeneratorKind kind) {
  Instance inst;
  inst.m = 1;
  inst.l = 1;
  inst.horizon = T;
  inst.rho = Grid(1, 1, rho);
  inst.epsilon = epsilon;
  auto spec = std::make_shared<GeneratorSpec>();
  spec->kind = kind;
  inst.arrival = spec;
  return inst;
}

}  // namespace

Instance make_uniform_single(int T, double rho, double epsilon) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in (0,1)");
  if (rho + epsilon >= 1.0) throw std::invalid_argument("rho + epsilon must be < 1");
  return base_single(T, rho, epsilon, GeneratorKind::kUniformSingle);
}

Instance make_lower_bound_instance(LowerBoundInstance which, int T, double epsilon) {
  if (T < 4) throw std::invalid_argument("lower-bound instances need T >= 4");
  switch (which) {
    case LowerBoundInstance::kI1:
      return base_single(T, 0.5, epsilon, GeneratorKind::kLbTiedFree);
    case LowerBoundInstance::kI2:
      if (1.0 / std::sqrt(static_cast<double>(T)) > 0.5)
        throw std::invalid_argument("I2 needs 1/sqrt(T) <= 1/2");
      return base_single(T, 0.5, epsilon, GeneratorKind::kLbThreeReward);
    case LowerBoundInstance::kI3:
      return base_single(T, 0.5, epsilon, GeneratorKind::kLbDeterministic);
    case LowerBoundInstance::kI4:
      // service rate exactly 0.5 in this instance
      return base_single(T, 0.5, 0.0, GeneratorKind::kLbBernoulli);
  }
  throw std::invalid_argument("unknown lower-bound instance");
}

Instance make_synthetic_multi(int m, int T, std::vector<double> tied_probs,
                              RewardSpec reward, std::vector<double> rho,
                              double epsilon) {
  if (static_cast<int>(tied_probs.size()) != m || static_cast<int>(rho.size()) != m)
    throw std::invalid_argument("tied_probs and rho must have m entries");
  Instance inst;
  inst.m = m;
  inst.l = 1;
  inst.horizon = T;
  inst.rho = Grid(m, 1);
  for (int i = 0; i < m; ++i) inst.rho(i, 0) = rho[i];
  inst.epsilon = epsilon;
  auto spec = std::make_shared<GeneratorSpec>();
  spec->kind = GeneratorKind::kSyntheticMulti;
  spec->tied_probs = std::move(tied_probs);
  spec->reward = std::move(reward);
  inst.arrival = spec;

  auto errors = validate_generator(*spec, inst);
  if (!errors.empty()) throw std::invalid_argument(errors.front());
  return inst;
}

std::vector<std::string> validate_generator(const GeneratorSpec& spec, const Instance& inst) {
  std::vector<std::string> errors;
  switch (spec.kind) {
    case GeneratorKind::kUniformSingle:
    case GeneratorKind::kLbTiedFree:
    case GeneratorKind::kLbThreeReward:
    case GeneratorKind::kLbDeterministic:
    case GeneratorKind::kLbBernoulli:
      if (inst.m != 1) errors.push_back("single-affiliate generator requires m = 1");
      break;
    case GeneratorKind::kSyntheticMulti: {
      if (static_cast<int>(spec.tied_probs.size()) != inst.m) {
        errors.push_back("tied_probs must have m entries");
        break;
      }
      double total = 0.0;
      for (int i = 0; i < inst.m; ++i) {
        total += spec.tied_probs[i];
        if (spec.tied_probs[i] < 0.0) {
          errors.push_back("tied_probs must be non-negative");
        } else if (spec.tied_probs[i] >= inst.rho(i, 0)) {
          // several dual caps assume rho_i - P[tied to i] > 0
          std::ostringstream msg;
          msg << "tied probability " << spec.tied_probs[i] << " is not below rho = "
              << inst.rho(i, 0) << " for affiliate " << i + 1;
          errors.push_back(msg.str());
        }
      }
      if (total > 1.0 + 1e-12) errors.push_back("tied_probs must sum to <= 1");
      if (spec.reward.kind == RewardSpec::Kind::kUniformBox) {
        if (static_cast<int>(spec.reward.lo.size()) != inst.m ||
            static_cast<int>(spec.reward.hi.size()) != inst.m) {
          errors.push_back("reward box must have m lo/hi entries");
        } else {
          for (int i = 0; i < inst.m; ++i) {
            if (spec.reward.lo[i] < 0.0 || spec.reward.hi[i] > 1.0 ||
                spec.reward.lo[i] > spec.reward.hi[i])
              errors.push_back("reward box must satisfy 0 <= lo <= hi <= 1");
          }
        }
      } else {
        if (spec.reward.values.empty() || spec.reward.values.size() != spec.reward.probs.size())
          errors.push_back("discrete reward table needs matching values/probs");
        double p = 0.0;
        for (double q : spec.reward.probs) p += q;
        if (std::abs(p - 1.0) > 1e-9) errors.push_back("discrete reward probs must sum to 1");
        for (const auto& v : spec.reward.values) {
          if (static_cast<int>(v.size()) != inst.m)
            errors.push_back("discrete reward vectors must have m entries");
          for (double w : v)
            if (w < 0.0 || w > 1.0) errors.push_back("rewards must lie in [0,1]");
        }
      }
      if (spec.consumption.kind == ConsumptionSpec::Kind::kUniformInt) {
        if (spec.consumption.lo < 0 || spec.consumption.lo > spec.consumption.hi)
          errors.push_back("consumption range must satisfy 0 <= lo <= hi");
        if (spec.consumption.hi > inst.n_bar)
          errors.push_back("consumption exceeds the configured n_bar");
      }
      break;
    }
    case GeneratorKind::kTrace: {
      if (!spec.trace) {
        errors.push_back("trace generator has no resolved trace");
        break;
      }
      if (spec.trace->m != inst.m || spec.trace->l != inst.l)
        errors.push_back("trace dimensions do not match instance");
      if (spec.trace->length() != inst.horizon)
        errors.push_back("trace length does not match horizon T");
      break;
    }
  }
  return errors;
}

ArrivalType sample_arrival(const Instance& inst, const StreamKey& arrival_key, int t) {
  if (!inst.arrival) throw std::runtime_error("instance has no arrival source");
  const GeneratorSpec& spec = *inst.arrival;
  ArrivalType a;
  a.reward.assign(inst.m, 0.0);

  if (spec.kind == GeneratorKind::kTrace) {
    if (t < 1 || t > spec.trace->length())
      throw std::out_of_range("trace period out of range");
    return spec.trace->arrivals[t - 1];
  }

  CounterRng rng(arrival_key, static_cast<std::uint64_t>(t));
  switch (spec.kind) {
    case GeneratorKind::kUniformSingle:
      a.reward[0] = rng.next_double();
      break;
    case GeneratorKind::kLbTiedFree: {
      // tied with probability 0.5 - eps, reward one either way
      a.reward[0] = 1.0;
      a.target = rng.next_double() < 0.5 - inst.epsilon ? 1 : 0;
      break;
    }
    case GeneratorKind::kLbThreeReward: {
      double u = rng.next_double();
      double p1 = 0.5 - 1.0 / std::sqrt(static_cast<double>(inst.horizon));
      double p23 = 1.0 / std::sqrt(static_cast<double>(inst.horizon));
      a.reward[0] = u < p1 ? 1.0 : (u < p1 + p23 ? 2.0 / 3.0 : 1.0 / 3.0);
      break;
    }
    case GeneratorKind::kLbDeterministic:
      a.reward[0] = 1.0;
      break;
    case GeneratorKind::kLbBernoulli:
      a.reward[0] = rng.next_double() < 0.5 ? 1.0 : 0.0;
      break;
    case GeneratorKind::kSyntheticMulti: {
      double u = rng.next_double();
      double acc = 0.0;
      a.target = 0;
      for (int i = 0; i < inst.m; ++i) {
        acc += spec.tied_probs[i];
        if (u < acc) {
          a.target = i + 1;
          break;
        }
      }
      if (spec.reward.kind == RewardSpec::Kind::kUniformBox) {
        for (int i = 0; i < inst.m; ++i)
          a.reward[i] = spec.reward.lo[i] +
                        (spec.reward.hi[i] - spec.reward.lo[i]) * rng.next_double();
      } else {
        double v = rng.next_double();
        double acc2 = 0.0;
        size_t idx = spec.reward.values.size() - 1;
        for (size_t k = 0; k < spec.reward.probs.size(); ++k) {
          acc2 += spec.reward.probs[k];
          if (v < acc2) {
            idx = k;
            break;
          }
        }
        a.reward = spec.reward.values[idx];
      }
      if (spec.consumption.kind == ConsumptionSpec::Kind::kUniformInt) {
        a.consumption = Grid(inst.m, inst.l);
        for (int i = 0; i < inst.m; ++i)
          for (int j = 0; j < inst.l; ++j)
            a.consumption(i, j) = static_cast<double>(
                spec.consumption.lo +
                static_cast<int>(rng.next_below(spec.consumption.hi - spec.consumption.lo + 1)));
      }
      break;
    }
    case GeneratorKind::kTrace:
      break;  // handled above
  }
  return a;
}

SamplePath materialize_path(const Instance& inst, std::uint64_t seed, std::uint32_t path) {
  SamplePath sp;
  const int T = inst.horizon;
  sp.arrivals.reserve(T);
  sp.services.reserve(T);
  StreamKey arrival_key{seed, path, StreamPurpose::kArrival, 0};
  StreamKey service_key{seed, path, StreamPurpose::kService, 0};

  const Trace* trace = nullptr;
  if (inst.arrival && inst.arrival->kind == GeneratorKind::kTrace)
    trace = inst.arrival->trace.get();

  for (int t = 1; t <= T; ++t) {
    sp.arrivals.push_back(sample_arrival(inst, arrival_key, t));
    if (trace && trace->has_services()) {
      ServiceDraw d;
      d.s = trace->services[t - 1];
      sp.services.push_back(std::move(d));
    } else {
      sp.services.push_back(draw_service(inst, service_key, t));
    }
  }
  return sp;
}

}  // namespace dualmatch
