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
#include <deque>
#include <vector>

#include "pdsim/perf_model.hpp"

namespace pdsim {

enum class TaskKind { kInitial, kIncremental };
enum class WorkerPhase { kPrefill, kDecode };

// One routable unit of prefill work.
struct PrefillTask {
  std::int64_t session_id = 0;
  int round = 0;  // 1-based round number within the session
  TaskKind kind = TaskKind::kInitial;
  TokenCount l_hist = 0;  // kind == kInitial iff l_hist == 0
  TokenCount l_incr = 0;
  // Task creation: session arrival for initial tasks, interaction completion
  // for incremental ones. Measured TTFT counts from here.
  double created_time = 0.0;
  // Set when the task is enqueued at its designated worker; the reordering
  // policy's TTFT clock counts from here.
  double enqueue_time = 0.0;
  int postpone_count = 0;  // bounded by the postponement capacity w
};

// Trailing-window mean of a latency statistic. Samples must be added in
// non-decreasing completion-time order; query(now) averages samples with
// completion_time in (now - window, now] and returns 0 for an empty window
// (an idle worker always has slack).
class WindowedStat {
 public:
  explicit WindowedStat(double window_seconds = 10.0)
      : window_(window_seconds) {}

  void add(double completion_time, double latency);
  double query(double now) const;
  double window_seconds() const { return window_; }
  std::size_t sample_count() const { return samples_.size(); }

 private:
  struct Sample {
    double completion_time;
    double latency;
  };
  std::vector<Sample> samples_;
  double window_;
};

struct WorkerState {
  int id = 0;  // cluster-wide id: prefill replicas first, then decode
  WorkerPhase phase = WorkerPhase::kDecode;
  ParallelismStrategy theta;
  std::deque<PrefillTask> prefill_queue;
  std::vector<std::int64_t> decode_batch;  // active session ids, sorted
  std::int64_t kv_bytes_used = 0;
  std::int64_t kv_capacity_bytes = 0;  // theta.degree * gpu_memory_capacity
  WindowedStat ttft_stat;
  WindowedStat itl_stat;
  double busy_until = 0.0;
};

}  // namespace pdsim
