#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dualmatch/generators.hpp"
#include "dualmatch/trace.hpp"
#include "test_helpers.hpp"

using namespace dualmatch;
using namespace dmtest;

namespace {

std::string temp_file(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("uniform_single samples U(0,1) rewards") {
  Instance inst = make_uniform_single(5000, 0.5, 0.1);
  StreamKey key{123, 0, StreamPurpose::kArrival, 0};

  const int N = 100000;
  double sum = 0.0;
  std::vector<double> sample;
  sample.reserve(N);
  for (int t = 1; t <= N; ++t) {
    ArrivalType a = sample_arrival(inst, key, t);
    REQUIRE(a.target == 0);
    REQUIRE(a.reward[0] >= 0.0);
    REQUIRE(a.reward[0] <= 1.0);
    sum += a.reward[0];
    sample.push_back(a.reward[0]);
  }
  CHECK(sum / N == doctest::Approx(0.5).epsilon(0.02));

  // Kolmogorov distance to the uniform cdf
  std::sort(sample.begin(), sample.end());
  double ks = 0.0;
  for (int k = 0; k < N; ++k) {
    double ecdf_hi = static_cast<double>(k + 1) / N;
    double ecdf_lo = static_cast<double>(k) / N;
    ks = std::max(ks, std::max(std::abs(ecdf_hi - sample[k]), std::abs(sample[k] - ecdf_lo)));
  }
  CHECK(ks < 0.01);
}

TEST_CASE("uniform_single rejects bad parameters") {
  CHECK_THROWS_AS(make_uniform_single(100, 1.2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_uniform_single(100, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("lower-bound instance I1 mixes tied and free at 0.5 -+ eps") {
  Instance inst = make_lower_bound_instance(LowerBoundInstance::kI1, 1000, 0.1);
  StreamKey key{7, 0, StreamPurpose::kArrival, 0};
  int tied = 0;
  const int N = 100000;
  for (int t = 1; t <= N; ++t) {
    ArrivalType a = sample_arrival(inst, key, t);
    REQUIRE(a.reward[0] == 1.0);
    if (a.tied()) ++tied;
  }
  CHECK(static_cast<double>(tied) / N == doctest::Approx(0.4).epsilon(0.025));
}

TEST_CASE("lower-bound instance I2 reward distribution") {
  // T = 100: probabilities 0.4 / 0.1 / 0.5 for rewards 1, 2/3, 1/3
  Instance inst = make_lower_bound_instance(LowerBoundInstance::kI2, 100, 0.0);
  StreamKey key{11, 0, StreamPurpose::kArrival, 0};
  int n1 = 0, n23 = 0, n13 = 0;
  const int N = 200000;
  for (int t = 1; t <= N; ++t) {
    ArrivalType a = sample_arrival(inst, key, t);
    if (a.reward[0] == 1.0) ++n1;
    else if (a.reward[0] == doctest::Approx(2.0 / 3.0)) ++n23;
    else ++n13;
  }
  CHECK(static_cast<double>(n1) / N == doctest::Approx(0.4).epsilon(0.03));
  CHECK(static_cast<double>(n23) / N == doctest::Approx(0.1).epsilon(0.08));
  CHECK(static_cast<double>(n13) / N == doctest::Approx(0.5).epsilon(0.03));
  CHECK_THROWS_AS(make_lower_bound_instance(LowerBoundInstance::kI2, 3, 0.0),
                  std::invalid_argument);
}

TEST_CASE("I3 arrivals are all free with unit reward; I4 forces eps = 0") {
  Instance i3 = make_lower_bound_instance(LowerBoundInstance::kI3, 50, 0.2);
  StreamKey key{1, 0, StreamPurpose::kArrival, 0};
  for (int t = 1; t <= 50; ++t) {
    ArrivalType a = sample_arrival(i3, key, t);
    CHECK(a.reward[0] == 1.0);
    CHECK_FALSE(a.tied());
  }
  Instance i4 = make_lower_bound_instance(LowerBoundInstance::kI4, 50, 0.3);
  CHECK(i4.epsilon == 0.0);
  int ones = 0;
  for (int t = 1; t <= 10000; ++t) {
    ArrivalType a = sample_arrival(i4, key, t);
    CHECK((a.reward[0] == 0.0 || a.reward[0] == 1.0));
    if (a.reward[0] == 1.0) ++ones;
  }
  CHECK(ones / 10000.0 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("arrival sampling is a pure function of (seed, path, t)") {
  Instance inst = make_uniform_single(100, 0.5, 0.1);
  StreamKey a{42, 3, StreamPurpose::kArrival, 0};
  StreamKey b{42, 3, StreamPurpose::kArrival, 0};
  for (int t = 1; t <= 100; ++t) {
    ArrivalType x = sample_arrival(inst, a, t);
    ArrivalType y = sample_arrival(inst, b, t);
    CHECK(x.reward[0] == y.reward[0]);
  }
  StreamKey other{42, 4, StreamPurpose::kArrival, 0};
  int diffs = 0;
  for (int t = 1; t <= 100; ++t)
    if (sample_arrival(inst, a, t).reward[0] != sample_arrival(inst, other, t).reward[0])
      ++diffs;
  CHECK(diffs > 90);
}

TEST_CASE("synthetic multi validates the tied-below-rho assumption") {
  RewardSpec reward;
  reward.kind = RewardSpec::Kind::kUniformBox;
  reward.lo = {0.0, 0.0};
  reward.hi = {1.0, 1.0};
  CHECK_NOTHROW(make_synthetic_multi(2, 100, {0.1, 0.1}, reward, {0.3, 0.4}, 0.05));
  CHECK_THROWS_WITH_AS(make_synthetic_multi(2, 100, {0.35, 0.1}, reward, {0.3, 0.4}, 0.05),
                       doctest::Contains("affiliate 1"), std::invalid_argument);
}

TEST_CASE("trace round-trips bit-exactly") {
  Instance inst = make_uniform_single(1000, 0.5, 0.1);
  SamplePath path = materialize_path(inst, 2024, 0);
  Trace trace;
  trace.m = 1;
  trace.l = 1;
  trace.arrivals = path.arrivals;
  for (const auto& s : path.services) trace.services.push_back(s.s);

  std::string p1 = temp_file("dm_trace_a.csv");
  std::string p2 = temp_file("dm_trace_b.csv");
  save_trace(trace, p1);
  Trace loaded = load_trace(p1);
  REQUIRE(loaded.length() == 1000);
  save_trace(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  for (int t = 0; t < 1000; ++t) {
    CHECK(loaded.arrivals[t].reward[0] == trace.arrivals[t].reward[0]);
    CHECK(loaded.services[t](0, 0) == trace.services[t](0, 0));
  }
}

TEST_CASE("trace loading rejects malformed files") {
  std::string p = temp_file("dm_trace_bad.csv");
  {
    std::ofstream out(p);
  }
  CHECK_THROWS_WITH_AS(load_trace(p), doctest::Contains("no rows"), std::runtime_error);
  {
    std::ofstream out(p);
    out << "t,target,w_1\n1,0,1.5\n";
  }
  CHECK_THROWS_WITH_AS(load_trace(p), doctest::Contains("outside [0,1]"), std::runtime_error);
  {
    std::ofstream out(p);
    out << "t,target,w_1\n1,2,0.5\n";
  }
  CHECK_THROWS_WITH_AS(load_trace(p), doctest::Contains("out of range"), std::runtime_error);

  {
    std::ofstream out(p);
    out << "t,target,w_1,w_2\n1,0,0.25,0.5\n2,1,1,0\n3,2,0,1\n";
  }
  Trace t3 = load_trace(p);
  CHECK(t3.length() == 3);
  CHECK(t3.m == 2);
  CHECK(t3.arrivals[1].target == 1);
  CHECK(t3.arrivals[2].reward[1] == 1.0);
}

TEST_CASE("instance validation tiers") {
  Instance inst = bare_instance(2, 100, {0.6, 0.6}, 0.1);
  auto rep = validate_instance(inst);
  CHECK(rep.ok());
  REQUIRE_FALSE(rep.warnings.empty());
  CHECK(rep.warnings.front().find("> 1") != std::string::npos);

  Instance bad = bare_instance(1, 100, {0.5}, 0.5);  // r = 1.0
  auto rep2 = validate_instance(bad);
  CHECK_FALSE(rep2.ok());

  Instance ex41 = make_uniform_single(5000, 0.5, 0.1);
  auto rep3 = validate_instance(ex41);
  CHECK(rep3.ok());
  CHECK(rep3.warnings.empty());
}
