#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dualmatch/dynamics.hpp"
#include "dualmatch/rng.hpp"
#include "dualmatch/types.hpp"

namespace dualmatch {

enum class GeneratorKind {
  kUniformSingle,   // single affiliate, free cases, rewards ~ U(0,1)
  kLbTiedFree,      // I1: reward 1, tied w.p. 0.5 - eps
  kLbThreeReward,   // I2: rewards {1/3, 2/3, 1}
  kLbDeterministic, // I3: reward 1, all free
  kLbBernoulli,     // I4: reward ~ Ber(0.5), eps forced to 0
  kSyntheticMulti,
  kTrace,
};

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& s);

struct RewardSpec {
  enum class Kind { kUniformBox, kDiscrete } kind = Kind::kUniformBox;
  // Uniform box: per-affiliate [lo_i, hi_i].
  std::vector<double> lo, hi;
  // Discrete table: reward vectors with probabilities.
  std::vector<std::vector<double>> values;
  std::vector<double> probs;
};

struct ConsumptionSpec {
  enum class Kind { kOnes, kUniformInt } kind = Kind::kOnes;
  int lo = 1, hi = 1;  // uniform integer units per (i,j)
};

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::kUniformSingle;
  // synthetic_multi parameters
  std::vector<double> tied_probs;
  RewardSpec reward;
  ConsumptionSpec consumption;
  // trace parameters
  std::string trace_path;
  std::shared_ptr<const struct Trace> trace;  // resolved trace
};

// Factory helpers mirroring the canonical instances. Each returns a
// fully populated Instance (rho, epsilon, horizon, arrival source);
// penalties default to zero and can be set by the caller.
Instance make_uniform_single(int T, double rho, double epsilon);

enum class LowerBoundInstance { kI1, kI2, kI3, kI4 };
Instance make_lower_bound_instance(LowerBoundInstance which, int T, double epsilon);

Instance make_synthetic_multi(int m, int T, std::vector<double> tied_probs,
                              RewardSpec reward, std::vector<double> rho,
                              double epsilon);

// Generator-specific validation, reported through validate_instance.
std::vector<std::string> validate_generator(const GeneratorSpec& spec, const Instance& inst);

// Samples the arrival of period `t` (1-based) on path `key.path`.
// Identical (seed, path, t) triples produce identical arrivals.
ArrivalType sample_arrival(const Instance& inst, const StreamKey& arrival_key, int t);

// Materializes a whole path: T arrivals plus service draws. A trace
// with embedded service columns overrides the drawn services.
SamplePath materialize_path(const Instance& inst, std::uint64_t seed, std::uint32_t path);

}  // namespace dualmatch
