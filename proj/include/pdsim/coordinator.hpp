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

#include <optional>
#include <random>
#include <vector>

#include "pdsim/perf_model.hpp"
#include "pdsim/worker_state.hpp"

namespace pdsim {

enum class RouteRationale {
  kSlackRemote,  // a prefill worker had TTFT slack
  kSlackLocal,   // the bound decode worker had ITL slack
  kArgmin,       // cost comparison between local and all remote candidates
  kForcedRemote, // baseline mode, routing disabled
  kForcedLocal,  // baseline mode, routing disabled
};

const char* to_string(RouteRationale rationale);

struct RoutingDecision {
  bool local = false;
  int prefill_worker = -1;  // valid when !local
  // Set for argmin decisions (the chosen candidate's estimate); unset for
  // slack-based decisions.
  std::optional<double> estimated_cost;
  RouteRationale rationale = RouteRationale::kArgmin;
};

struct RoutingParams {
  double alpha = 0.9;  // TTFT slack factor, in (0, 1]
  double beta = 0.85;  // ITL slack factor, in (0, 1]
  double ttft_thres = 5.0;
  double itl_thres = 0.1;
};

// Decode worker with minimum KV memory usage; lowest index on ties.
int bind_session(const std::vector<WorkerState>& decode_workers);

// Estimated local-execution cost on the bound decode worker: the task's own
// prefill time plus the prefill time of everything already queued there.
double estimate_local(const PrefillTask& task, const WorkerState& decode_worker,
                      const PerfProfile& profile);

// Estimated remote-execution cost on a prefill worker: prefill time, both KV
// legs (history read from the decode worker, incremental write-back), and the
// queuing time on that worker.
double estimate_remote(const PrefillTask& task,
                       const WorkerState& prefill_worker,
                       const WorkerState& decode_worker,
                       const PerfProfile& profile);

// The SLO-oriented adaptive routing mechanism. Serialized decision-maker;
// each call reads one consistent snapshot of the worker states.
class Coordinator {
 public:
  Coordinator(RoutingParams params, std::uint64_t seed);

  RoutingDecision route(const PrefillTask& task,
                        const WorkerState& bound_decode_worker,
                        const std::vector<WorkerState>& prefill_workers,
                        const PerfProfile& profile, double now);

  const RoutingParams& params() const { return params_; }

 private:
  RoutingParams params_;
  std::mt19937_64 rng_;
};

}  // namespace pdsim
