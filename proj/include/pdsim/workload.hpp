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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdsim/perf_model.hpp"

namespace pdsim {

// One round of a multi-round session: new prompt tokens, generated tokens,
// and the environment/tool time after this round (0 for the final round).
struct Round {
  TokenCount incr_input_len = 0;
  TokenCount decode_len = 0;
  double interaction_delay = 0.0;  // seconds

  friend bool operator==(const Round&, const Round&) = default;
};

struct SessionSpec {
  std::int64_t session_id = 0;
  double arrival_time = 0.0;  // seconds from trace start
  std::vector<Round> rounds;

  TokenCount total_prefill() const;
  TokenCount total_decode() const;

  friend bool operator==(const SessionSpec&, const SessionSpec&) = default;
};

struct SloSpec {
  double ttft_thres = 5.0;  // seconds
  double itl_thres = 0.1;   // seconds

  friend bool operator==(const SloSpec&, const SloSpec&) = default;
};

struct Trace {
  std::string name;
  SloSpec slo;
  std::vector<SessionSpec> sessions;  // sorted by arrival_time

  void validate() const;  // throws ConfigError anchored at the offending session

  friend bool operator==(const Trace&, const Trace&) = default;
};

// Target statistics for synthetic trace generation. Prefill length is the
// per-session total, split across rounds; decode length is per round.
struct TraceStats {
  std::string name = "custom";
  double mean_rounds = 3.0;
  bool fixed_rounds = false;  // true: round count is exactly mean_rounds
  double mean_prefill_len = 1000.0;
  double mean_decode_len = 100.0;
  double length_cv = 0.5;            // coefficient of variation for lengths
  double first_round_fraction = 0.5; // share of prefill tokens in round 1
  double mean_interaction_delay = 0.5;  // seconds, exponential
  SloSpec slo;
};

// Presets named after the evaluated workload traces:
// "toolbench", "gaia", "hotpotqa", "dureader". Throws ConfigError otherwise.
TraceStats preset_stats(const std::string& name);

// Poisson arrivals at the given rate; per-session shapes drawn from the
// configured distributions. Pure function of (stats, rate, count, seed).
Trace gen_trace(const TraceStats& stats, double arrival_rate, int num_sessions,
                std::uint64_t seed);

// trace_v1 document format; canonical save, lossless round-trip.
std::string save_trace(const Trace& trace);
Trace load_trace(const std::string& text);  // throws ParseError

}  // namespace pdsim
