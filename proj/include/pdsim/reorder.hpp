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

// Deadline-aware reordering of the head of a prefill queue. Before a worker
// picks its next task, the first `window` queued tasks are permuted to
// maximize how many of them can still meet the TTFT threshold, with a
// per-task postponement cap so nothing starves.

#ifndef PDSIM_REORDER_HPP_
#define PDSIM_REORDER_HPP_

#include <deque>
#include <vector>

#include "pdsim/perf_model.hpp"
#include "pdsim/worker_state.hpp"

namespace pdsim {

struct ReorderParams {
  int window = 3;           // head-of-queue tasks considered per decision
  double ttft_thres = 5.0;  // seconds
};

struct ReorderOutcome {
  // chosen_order[k] is the original window position of the task served k-th.
  // Identity when no permutation improved the predicted count.
  std::vector<int> chosen_order;
  int predicted_satisfied = 0;
  PrefillTask task;  // the dequeued head after reordering
};

// Completion offsets, relative to now, when the listed tasks run back to back
// in the given visit order. order[k] indexes into tasks; result[k] is the
// completion offset of the task served k-th.
std::vector<double> predict_completions(const std::vector<PrefillTask>& tasks,
                                        const std::vector<int>& order,
                                        const PerfProfile& profile,
                                        const ParallelismStrategy& theta);

// Number of tasks whose wait so far plus predicted completion offset stays
// within ttft_thres under the given visit order.
int count_satisfied(const std::vector<PrefillTask>& tasks,
                    const std::vector<int>& order, double now,
                    double ttft_thres, const PerfProfile& profile,
                    const ParallelismStrategy& theta);

// Permutes the first min(window, queue size) tasks of the queue to the best
// order found, bumps postpone counts for tasks pushed later than they stood,
// then dequeues and returns the new head. Permutations that would postpone a
// task whose postpone_count already reached `window` are rejected; ties keep
// the earlier (more FIFO-like) order. Throws DomainError on an empty queue.
ReorderOutcome reorder_and_dequeue(std::deque<PrefillTask>& queue, double now,
                                   const ReorderParams& params,
                                   const PerfProfile& profile,
                                   const ParallelismStrategy& theta);

}  // namespace pdsim

#endif  // PDSIM_REORDER_HPP_
