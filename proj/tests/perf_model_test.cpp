/* Copyright 2025 The pdsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "pdsim/errors.hpp"
#include "pdsim/perf_model.hpp"

using namespace pdsim;

namespace {

// Reference evaluator: walk the breakpoints left to right instead of
// bisecting.
double eval_by_scan(const PiecewiseAlphaBeta& curve, double load) {
  std::size_t idx = 0;
  for (double b : curve.breakpoints()) {
    if (load >= b) {
      ++idx;
    }
  }
  const AlphaBetaSegment& s = curve.segments()[idx];
  return s.alpha + s.beta * load;
}

PiecewiseAlphaBeta sample_curve() {
  return PiecewiseAlphaBeta({100.0, 500.0},
                            {{0.01, 1e-4}, {0.01, 2e-4}, {0.02, 3e-4}});
}

}  // namespace

TEST_CASE("piecewise eval matches a linear scan") {
  const PiecewiseAlphaBeta curve = sample_curve();
  std::mt19937_64 rng(42);
  for (int i = 0; i < 2000; ++i) {
    const double load = static_cast<double>(rng() % 100000) / 100.0;
    CAPTURE(load);
    CHECK(curve.eval(load) == eval_by_scan(curve, load));
  }
}

TEST_CASE("a load exactly at a breakpoint uses the right segment") {
  const PiecewiseAlphaBeta curve = sample_curve();
  CHECK(curve.eval(100.0) == doctest::Approx(0.01 + 2e-4 * 100.0));
  CHECK(curve.eval(500.0) == doctest::Approx(0.02 + 3e-4 * 500.0));
  // Just below stays on the left segment.
  CHECK(curve.eval(99.999) == doctest::Approx(0.01 + 1e-4 * 99.999));
}

TEST_CASE("curve validation rejects malformed structures") {
  CHECK_THROWS_AS(PiecewiseAlphaBeta({}, {}).validate("t"), ConfigError);
  // segment count must be breakpoints + 1
  CHECK_THROWS_AS(PiecewiseAlphaBeta({10.0}, {{0.1, 0.1}}).validate("t"),
                  ConfigError);
  // breakpoints must increase
  CHECK_THROWS_AS(PiecewiseAlphaBeta({10.0, 10.0},
                                     {{0.1, 0.1}, {0.1, 0.1}, {0.1, 0.1}})
                      .validate("t"),
                  ConfigError);
  // negative coefficients
  CHECK_THROWS_AS(PiecewiseAlphaBeta({}, {{-0.1, 0.1}}).validate("t"),
                  ConfigError);
  CHECK_NOTHROW(sample_curve().validate("t"));
}

TEST_CASE("synthetic profiles validate and scale down with degree") {
  const SynthProfileSpec spec;
  for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
    const PerfProfile p = synth_profile(spec, seed);
    CHECK_NOTHROW(p.validate());
    CHECK(p.degrees == std::vector<int>{1, 2, 4, 8});
    for (std::size_t i = 1; i < p.degrees.size(); ++i) {
      const int lo = p.degrees[i - 1];
      const int hi = p.degrees[i];
      for (double load : {1.0, 100.0, 3000.0, 9000.0}) {
        CHECK(p.prefill_cost.at(hi).eval(load) <
              p.prefill_cost.at(lo).eval(load));
      }
      for (double b : {1.0, 32.0, 100.0}) {
        CHECK(p.decode_cost.at(hi).eval(b) < p.decode_cost.at(lo).eval(b));
      }
    }
  }
}

TEST_CASE("t_prefill uses the weighted history load") {
  const PerfProfile p = synth_profile(SynthProfileSpec{}, 5);
  const ParallelismStrategy theta{2};
  const TokenCount l_hist = 900;
  const TokenCount l_incr = 300;
  const double load =
      static_cast<double>(l_incr) + p.history_weight * static_cast<double>(l_hist);
  const double expected = p.prefill_cost.at(2).eval(load);
  CHECK(t_prefill(p, l_hist, l_incr, theta) == expected);
  CHECK_THROWS_AS(t_prefill(p, 0, 0, theta), DomainError);
}

TEST_CASE("t_kv is zero for empty context and symmetric in volume") {
  const PerfProfile p = synth_profile(SynthProfileSpec{}, 5);
  CHECK(t_kv(p, 0, {1}, {4}) == 0.0);
  CHECK(t_kv(p, 1000, {1}, {4}) > 0.0);
  // More tokens never transfer faster.
  CHECK(t_kv(p, 2000, {1}, {4}) > t_kv(p, 1000, {1}, {4}));
}

TEST_CASE("t_decode grows with batch size") {
  const PerfProfile p = synth_profile(SynthProfileSpec{}, 5);
  double prev = 0.0;
  for (int b : {1, 8, 64, 200}) {
    const double cur = t_decode(p, b, {1});
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_THROWS_AS(t_decode(p, 0, {1}), DomainError);
}

TEST_CASE("profile save/load round trip") {
  const PerfProfile p = synth_profile(SynthProfileSpec{}, 11);
  const std::string text = save_profile(p);
  const PerfProfile q = load_profile(text);
  CHECK(p == q);
  // Canonical form: a second save is byte identical.
  CHECK(save_profile(q) == text);
}

TEST_CASE("profile loader rejects junk") {
  CHECK_THROWS_AS(load_profile("not json"), ParseError);
  CHECK_THROWS_AS(load_profile("{}"), ParseError);
  CHECK_THROWS_AS(load_profile(R"({"version":"bogus_v9"})"), ParseError);
}

TEST_CASE("unknown degrees are rejected by the cost functions") {
  const PerfProfile p = synth_profile(SynthProfileSpec{}, 3);
  CHECK_THROWS_AS(t_prefill(p, 0, 10, {3}), DomainError);
  CHECK_THROWS_AS(t_decode(p, 1, {5}), DomainError);
  CHECK_THROWS_AS(t_kv(p, 10, {1}, {3}), DomainError);
}
