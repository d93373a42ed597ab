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

// Discrete-event execution of a trace against a deployed cluster: session
// binding, prefill routing, queue reordering, decode batching with
// prefill preemption, KV transfers overlapped with compute, and background
// environment interactions.

#ifndef PDSIM_SIM_ENGINE_HPP_
#define PDSIM_SIM_ENGINE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdsim/coordinator.hpp"
#include "pdsim/perf_model.hpp"
#include "pdsim/planner.hpp"
#include "pdsim/worker_state.hpp"
#include "pdsim/workload.hpp"

namespace pdsim {

enum class RoutingMode {
  kAdaptive,      // slack scan, then ITL slack, then cost argmin
  kAlwaysRemote,  // round-robin over prefill workers; local only if none
  kAlwaysLocal,   // bound decode worker serves every prefill
};

const char* to_string(RoutingMode mode);
RoutingMode routing_mode_from_string(const std::string& text);

struct SchedulerParams {
  RoutingMode routing = RoutingMode::kAdaptive;
  bool reorder = true;
  double alpha = 0.9;        // TTFT slack factor
  double beta = 0.85;        // ITL slack factor
  int window = 3;            // reorder lookahead / postponement cap
  double stat_window = 10.0;  // seconds, trailing window for worker stats
  void validate() const;      // throws ConfigError
};

struct TtftSample {
  std::int64_t session_id = 0;
  int round = 0;  // 1-based
  TaskKind kind = TaskKind::kInitial;
  bool local = false;
  double created_time = 0.0;
  double completion_time = 0.0;
  double value = 0.0;  // completion - created
};

struct ItlSample {
  std::int64_t session_id = 0;
  int round = 0;
  int token_index = 0;  // position within the round; first token emits none
  double completion_time = 0.0;
  double value = 0.0;
};

struct SessionOutcome {
  std::int64_t session_id = 0;
  double arrival_time = 0.0;
  double completion_time = 0.0;
  int rounds = 0;
  double admission_wait = 0.0;  // time parked at the coordinator
  double mean_itl = 0.0;        // 0 when the session produced no ITL samples
  bool ttft_ok = true;
  bool itl_ok = true;
  bool slo_ok = true;
};

struct DecisionRecord {
  double time = 0.0;
  std::int64_t session_id = 0;
  int round = 0;
  bool local = false;
  int worker = -1;  // global worker id the task was placed on
  RouteRationale rationale = RouteRationale::kArgmin;
  std::optional<double> estimated_cost;
};

struct SimCounters {
  std::int64_t tasks_created = 0;
  std::int64_t tasks_completed = 0;
  std::int64_t tokens_decoded = 0;
  std::int64_t kv_bytes_residual = 0;  // decode-worker KV left after the run
  int max_postpone_observed = 0;
  bool events_in_order = true;
};

struct SimResult {
  std::string trace_name;
  SloSpec slo;
  std::int64_t total_sessions = 0;
  std::vector<TtftSample> ttft_samples;
  std::vector<ItlSample> itl_samples;
  std::vector<SessionOutcome> sessions;  // completed, sorted by session id
  std::vector<DecisionRecord> decisions;
  SimCounters counters;
};

// Session verdict: every prefill TTFT within threshold AND mean ITL within
// threshold. No ITL samples (all rounds decode a single token) passes the
// ITL component vacuously.
bool slo_verdict(const std::vector<double>& ttft_values,
                 const std::vector<double>& itl_values, const SloSpec& slo);

// Runs the trace to completion. Deterministic per seed: identical inputs
// yield an identical SimResult. Worker ids: prefill replicas take
// 0..P-1 (ascending degree), decode replicas P..P+D-1.
SimResult run(const Trace& trace, const DeploymentPlan& plan,
              const PerfProfile& profile, const SchedulerParams& params,
              std::uint64_t seed);

}  // namespace pdsim

#endif  // PDSIM_SIM_ENGINE_HPP_
