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

// Offline deployment planning. Per-degree P95 latency coefficients are
// estimated with small single-replica phase simulations, then the cluster
// assignment (how many prefill and decode replicas at which parallelism
// degree) is solved exactly: minimize the worst instantiated coefficient
// subject to the GPU budget.

#ifndef PDSIM_PLANNER_HPP_
#define PDSIM_PLANNER_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pdsim/perf_model.hpp"
#include "pdsim/workload.hpp"

namespace pdsim {

struct DeploymentPlan {
  // degree -> replica count; zero-count degrees are omitted.
  std::map<int, int> x;  // prefill replicas
  std::map<int, int> y;  // decode replicas
  double objective_z = 0.0;
  int gpus_used = 0;
  bool feasible = false;

  int prefill_replicas() const;
  int decode_replicas() const;
  int gpus() const;  // recomputed from x and y

  // Checks counts >= 0, gpus_used consistency, and (when a budget is given)
  // the capacity bound. Throws ConfigError with `where` anchors.
  void validate(const std::string& where, int total_gpus = -1) const;
};

bool operator==(const DeploymentPlan& a, const DeploymentPlan& b);

struct LatencyCoefficients {
  std::map<int, double> tau_pre;  // feasible degrees only, seconds
  std::map<int, double> tau_dec;
  std::set<int> infeasible_pre;  // degrees whose reference-load sim diverged
  std::set<int> infeasible_dec;
  std::string provenance;  // parameters the coefficients were estimated under
};

struct PhaseSimResult {
  double p95 = 0.0;
  bool infeasible = false;
  std::int64_t sample_count = 0;
};

// Single-replica phase simulations under a fixed trace. The prefill replica
// serves every prefill task of the trace in FIFO order and reports P95 of
// task latency (queuing + compute); the decode replica batch-steps every
// decode token and reports P95 inter-token latency. Both flag infeasibility
// when demand exceeds the replica's service capacity.
PhaseSimResult simulate_prefill_replica(const Trace& trace,
                                        const PerfProfile& profile,
                                        int degree);
PhaseSimResult simulate_decode_replica(const Trace& trace,
                                       const PerfProfile& profile, int degree);

// For each degree n, generates a reference-load trace carrying the
// GPU-proportional share rate * n / total_gpus of the aggregate arrival rate
// and runs both phase simulations. Deterministic per seed.
LatencyCoefficients estimate_coefficients(const TraceStats& stats, double rate,
                                          const PerfProfile& profile,
                                          const std::vector<int>& degrees,
                                          int total_gpus, std::uint64_t seed);

// Exact optimum of the assignment problem: minimize Z subject to
// Z >= tau_pre(n) wherever x(n) >= 1, Z >= tau_dec(n) wherever y(n) >= 1,
// sum(x*n) + sum(y*n) <= total_gpus, and at least one replica per phase.
// Ties on Z break by: more replicas, then more GPUs used, then the
// lexicographically smallest (x, y) count vectors over ascending degrees.
// Returns feasible=false when no assignment fits.
DeploymentPlan solve(const LatencyCoefficients& coeffs, int total_gpus,
                     const std::vector<int>& degrees);

// The k best distinct plans in the solve ordering; rank 1 equals solve's
// output. Exhaustive, so only viable at small GPU budgets; throws ConfigError
// past an internal enumeration cap.
std::vector<DeploymentPlan> top_k(const LatencyCoefficients& coeffs,
                                  int total_gpus,
                                  const std::vector<int>& degrees, int k);

// "P:<TP=4, DP=2>, D:<TP=8, DP=1>" (groups joined with " + " when a phase
// mixes degrees).
std::string format_plan(const DeploymentPlan& plan);

// plan_v1 JSON. Canonical: to_json(from_json(to_json(p))) is byte-identical
// to to_json(p).
std::string plan_to_json(const DeploymentPlan& plan);
DeploymentPlan plan_from_json(const std::string& text);  // throws ParseError

std::string coefficients_to_json(const LatencyCoefficients& coeffs);

}  // namespace pdsim

#endif  // PDSIM_PLANNER_HPP_
