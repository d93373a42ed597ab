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

#include "pdsim/reorder.hpp"

#include <algorithm>
#include <numeric>

#include "pdsim/errors.hpp"

namespace pdsim {

namespace {

void check_order(const std::vector<PrefillTask>& tasks,
                 const std::vector<int>& order) {
  if (order.size() != tasks.size()) {
    throw DomainError("reorder: order and task list sizes differ");
  }
  std::vector<char> seen(tasks.size(), 0);
  for (int idx : order) {
    if (idx < 0 || idx >= static_cast<int>(tasks.size()) ||
        seen[static_cast<std::size_t>(idx)]) {
      throw DomainError("reorder: order is not a permutation");
    }
    seen[static_cast<std::size_t>(idx)] = 1;
  }
}

}  // namespace

std::vector<double> predict_completions(const std::vector<PrefillTask>& tasks,
                                        const std::vector<int>& order,
                                        const PerfProfile& profile,
                                        const ParallelismStrategy& theta) {
  check_order(tasks, order);
  std::vector<double> completions(order.size());
  double elapsed = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const PrefillTask& t = tasks[static_cast<std::size_t>(order[k])];
    elapsed += t_prefill(profile, t.l_hist, t.l_incr, theta);
    completions[k] = elapsed;
  }
  return completions;
}

int count_satisfied(const std::vector<PrefillTask>& tasks,
                    const std::vector<int>& order, double now,
                    double ttft_thres, const PerfProfile& profile,
                    const ParallelismStrategy& theta) {
  const std::vector<double> completions =
      predict_completions(tasks, order, profile, theta);
  int satisfied = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const PrefillTask& t = tasks[static_cast<std::size_t>(order[k])];
    const double waited = now - t.enqueue_time;
    if (waited + completions[k] <= ttft_thres) {
      ++satisfied;
    }
  }
  return satisfied;
}

ReorderOutcome reorder_and_dequeue(std::deque<PrefillTask>& queue, double now,
                                   const ReorderParams& params,
                                   const PerfProfile& profile,
                                   const ParallelismStrategy& theta) {
  if (queue.empty()) {
    throw DomainError("reorder: queue is empty");
  }
  if (params.window < 1) {
    throw ConfigError("reorder: window must be >= 1");
  }
  if (params.window > 8) {
    // window! orders are enumerated per decision; past 8 that stops being a
    // per-event cost the simulator can absorb.
    throw ConfigError("reorder: window must be <= 8");
  }
  if (!(params.ttft_thres > 0.0)) {
    throw ConfigError("reorder: ttft_thres must be > 0");
  }

  const int m = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(params.window),
                            queue.size()));
  std::vector<PrefillTask> head(queue.begin(), queue.begin() + m);

  std::vector<int> best(static_cast<std::size_t>(m));
  std::iota(best.begin(), best.end(), 0);
  int best_satisfied =
      count_satisfied(head, best, now, params.ttft_thres, profile, theta);

  std::vector<int> perm = best;
  while (std::next_permutation(perm.begin(), perm.end())) {
    bool allowed = true;
    for (int k = 0; k < m; ++k) {
      const int p = perm[static_cast<std::size_t>(k)];
      if (k > p &&
          head[static_cast<std::size_t>(p)].postpone_count >= params.window) {
        allowed = false;
        break;
      }
    }
    if (!allowed) {
      continue;
    }
    const int satisfied =
        count_satisfied(head, perm, now, params.ttft_thres, profile, theta);
    // Strict improvement only: next_permutation walks lexicographically from
    // the identity, so ties settle on the least-shuffled order.
    if (satisfied > best_satisfied) {
      best_satisfied = satisfied;
      best = perm;
    }
  }

  for (int k = 0; k < m; ++k) {
    const int p = best[static_cast<std::size_t>(k)];
    if (k > p) {
      ++head[static_cast<std::size_t>(p)].postpone_count;
    }
  }
  for (int k = 0; k < m; ++k) {
    queue[static_cast<std::size_t>(k)] =
        head[static_cast<std::size_t>(best[static_cast<std::size_t>(k)])];
  }

  ReorderOutcome out;
  out.chosen_order = std::move(best);
  out.predicted_satisfied = best_satisfied;
  out.task = queue.front();
  queue.pop_front();
  return out;
}

}  // namespace pdsim
