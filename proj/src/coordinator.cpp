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

#include "pdsim/coordinator.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <numeric>

#include "pdsim/errors.hpp"

namespace pdsim {

void WindowedStat::add(double completion_time, double latency) {
  assert(samples_.empty() || completion_time >= samples_.back().completion_time);
  samples_.push_back({completion_time, latency});
}

double WindowedStat::query(double now) const {
  // Mean over samples with completion_time in (now - window, now].
  const double cutoff = now - window_;
  auto lo = std::lower_bound(
      samples_.begin(), samples_.end(), cutoff,
      [](const Sample& s, double t) { return s.completion_time <= t; });
  auto hi = std::upper_bound(
      lo, samples_.end(), now,
      [](double t, const Sample& s) { return t < s.completion_time; });
  if (lo == hi) {
    return 0.0;  // empty window: an idle worker always has slack
  }
  double sum = 0.0;
  for (auto it = lo; it != hi; ++it) sum += it->latency;
  return sum / static_cast<double>(hi - lo);
}

const char* to_string(RouteRationale rationale) {
  switch (rationale) {
    case RouteRationale::kSlackRemote: return "slack_remote";
    case RouteRationale::kSlackLocal: return "slack_local";
    case RouteRationale::kArgmin: return "argmin";
    case RouteRationale::kForcedRemote: return "forced_remote";
    case RouteRationale::kForcedLocal: return "forced_local";
  }
  return "unknown";
}

int bind_session(const std::vector<WorkerState>& decode_workers) {
  if (decode_workers.empty()) {
    throw ConfigError("bind_session: no decode workers available");
  }
  int best = 0;
  for (int i = 1; i < static_cast<int>(decode_workers.size()); ++i) {
    if (decode_workers[static_cast<std::size_t>(i)].kv_bytes_used <
        decode_workers[static_cast<std::size_t>(best)].kv_bytes_used) {
      best = i;
    }
  }
  return best;
}

double estimate_local(const PrefillTask& task, const WorkerState& decode_worker,
                      const PerfProfile& profile) {
  double cost =
      t_prefill(profile, task.l_hist, task.l_incr, decode_worker.theta);
  for (const PrefillTask& queued : decode_worker.prefill_queue) {
    cost += t_prefill(profile, queued.l_hist, queued.l_incr,
                      decode_worker.theta);
  }
  return cost;
}

double estimate_remote(const PrefillTask& task,
                       const WorkerState& prefill_worker,
                       const WorkerState& decode_worker,
                       const PerfProfile& profile) {
  const double t_pre =
      t_prefill(profile, task.l_hist, task.l_incr, prefill_worker.theta);
  const double t_kv_legs =
      t_kv(profile, task.l_hist, decode_worker.theta, prefill_worker.theta) +
      t_kv(profile, task.l_incr, prefill_worker.theta, decode_worker.theta);
  double t_queue = 0.0;
  for (const PrefillTask& queued : prefill_worker.prefill_queue) {
    t_queue += t_prefill(profile, queued.l_hist, queued.l_incr,
                         prefill_worker.theta);
  }
  return t_pre + t_kv_legs + t_queue;
}

Coordinator::Coordinator(RoutingParams params, std::uint64_t seed)
    : params_(params), rng_(seed) {
  if (!(params_.alpha > 0.0 && params_.alpha <= 1.0)) {
    throw ConfigError("routing: alpha must be in (0, 1]");
  }
  if (!(params_.beta > 0.0 && params_.beta <= 1.0)) {
    throw ConfigError("routing: beta must be in (0, 1]");
  }
  if (!(params_.ttft_thres > 0.0) || !(params_.itl_thres > 0.0)) {
    throw ConfigError("routing: SLO thresholds must be > 0");
  }
}

RoutingDecision Coordinator::route(
    const PrefillTask& task, const WorkerState& bound_decode_worker,
    const std::vector<WorkerState>& prefill_workers, const PerfProfile& profile,
    double now) {
  const int n = static_cast<int>(prefill_workers.size());

  // Lines 1-3: any prefill worker with windowed-TTFT slack takes the task,
  // visiting workers in a random order.
  if (n > 0) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng_() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }
    for (int idx : order) {
      const WorkerState& w = prefill_workers[static_cast<std::size_t>(idx)];
      if (w.ttft_stat.query(now) <= params_.alpha * params_.ttft_thres) {
        RoutingDecision d;
        d.local = false;
        d.prefill_worker = idx;
        d.rationale = RouteRationale::kSlackRemote;
        return d;
      }
    }
  }

  // Lines 4-5: the bound decode worker absorbs the task while its windowed
  // ITL has slack.
  if (bound_decode_worker.itl_stat.query(now) <=
      params_.beta * params_.itl_thres) {
    RoutingDecision d;
    d.local = true;
    d.rationale = RouteRationale::kSlackLocal;
    return d;
  }

  // Lines 6-9: cost comparison. Ties prefer local (no KV transfer at equal
  // cost), then the lowest prefill-worker index.
  RoutingDecision d;
  d.local = true;
  d.rationale = RouteRationale::kArgmin;
  double best = estimate_local(task, bound_decode_worker, profile);
  for (int i = 0; i < n; ++i) {
    const double cost = estimate_remote(
        task, prefill_workers[static_cast<std::size_t>(i)],
        bound_decode_worker, profile);
    if (cost < best) {
      best = cost;
      d.local = false;
      d.prefill_worker = i;
    }
  }
  d.estimated_cost = best;
  return d;
}

}  // namespace pdsim
