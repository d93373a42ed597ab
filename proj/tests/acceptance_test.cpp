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

// Acceptance gate for the simulator, scheduler and planner. Each criterion
// prints one [PASS]/[FAIL] line; the binary exits nonzero if any fail.
//
// Usage: acceptance_test <pdsim-cli-binary> <scratch-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pdsim/coordinator.hpp"
#include "pdsim/errors.hpp"
#include "pdsim/metrics.hpp"
#include "pdsim/perf_model.hpp"
#include "pdsim/planner.hpp"
#include "pdsim/reorder.hpp"
#include "pdsim/sim_engine.hpp"
#include "pdsim/workload.hpp"

namespace fs = std::filesystem;
using namespace pdsim;

namespace {

// Pinned tolerances and workloads.
constexpr int kPlannerInstances = 200;       // criterion 1
constexpr double kPlannerBudgetSec = 5.0;    // criterion 1
constexpr double kScaleBudgetSec = 60.0;     // criterion 2
constexpr int kReorderWindows = 500;         // criterion 3
constexpr int kStarvationTasks = 10000;      // criterion 4
constexpr double kFpSlack = 1e-9;            // float association slack
constexpr int kRoutingSnapshots = 1000;      // criterion 6
constexpr double kSaturatingRate = 16.0;     // criteria 8-10, sessions/s
constexpr double kModerateRate = 5.0;        // criterion 9 tension pair
constexpr int kScenarioSessions = 4000;
constexpr int kTensionSessions = 1500;
constexpr std::uint64_t kScenarioSeed = 101;
constexpr std::uint64_t kEngineSeed = 2;     // scheduler RNG for scenario runs
constexpr double kStatWindow = 1.5;          // scenario stat window, seconds
constexpr int kReorderWindow = 4;            // scenario reorder window

struct Ctx {
  std::string cli;
  fs::path scratch;
};

struct Failure {
  std::string detail;
};

void require(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

std::string num(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

void run_cli(const Ctx& ctx, const std::string& args) {
  const std::string cmd =
      "\"" + ctx.cli + "\" " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  require(rc == 0, "CLI command failed: pdsim " + args);
}

double ttft_of(const SimResult& r, std::int64_t session_id) {
  for (const TtftSample& s : r.ttft_samples) {
    if (s.session_id == session_id) return s.value;
  }
  throw Failure{"no TTFT sample for session " + std::to_string(session_id)};
}

// ---------------------------------------------------------------------------
// Shared desk-scale scenario: two single-GPU prefill workers, two single-GPU
// decode workers, a DuReader-style multi-round trace pushed past the prefill
// capacity knee. Decode carries a sizable per-step base cost with a gentle
// batch slope, so offloaded prefills are absorbed at a visible ITL price
// without melting the decode side. The stat window is scaled down to match
// desk-scale service times (tasks finish in tens of milliseconds here, not
// the multi-second regime the 10 s default is sized for).

const SynthProfileSpec& scenario_spec() {
  static SynthProfileSpec spec = [] {
    SynthProfileSpec s;
    s.degrees = {1};
    s.decode_alpha_min = 0.01056;
    s.decode_alpha_max = 0.01144;
    s.decode_beta_min = 1.14e-4;
    s.decode_beta_max = 1.26e-4;
    return s;
  }();
  return spec;
}

const PerfProfile& scenario_profile() {
  static PerfProfile p = synth_profile(scenario_spec(), 42);
  return p;
}

DeploymentPlan scenario_plan() {
  DeploymentPlan plan;
  plan.x[1] = 2;
  plan.y[1] = 2;
  plan.feasible = true;
  plan.gpus_used = 4;
  return plan;
}

const Trace& saturating_trace() {
  static Trace t = gen_trace(preset_stats("dureader"), kSaturatingRate,
                             kScenarioSessions, kScenarioSeed);
  return t;
}

const Trace& moderate_trace() {
  static Trace t = gen_trace(preset_stats("dureader"), kModerateRate,
                             kTensionSessions, kScenarioSeed + 1);
  return t;
}

Report run_scenario(const Trace& trace, RoutingMode mode, bool reorder) {
  SchedulerParams params;
  params.routing = mode;
  params.reorder = reorder;
  params.window = kReorderWindow;
  params.stat_window = kStatWindow;
  return build_report(run(trace, scenario_plan(), scenario_profile(), params,
                          kEngineSeed));
}

// ---------------------------------------------------------------------------
// Criterion 1: exact planner vs brute-force enumeration.

double plan_objective_over(const LatencyCoefficients& c,
                           const std::map<int, int>& x,
                           const std::map<int, int>& y) {
  double z = 0.0;
  for (const auto& [d, n] : x) {
    if (n > 0) z = std::max(z, c.tau_pre.at(d));
  }
  for (const auto& [d, n] : y) {
    if (n > 0) z = std::max(z, c.tau_dec.at(d));
  }
  return z;
}

bool brute_solve_z(const LatencyCoefficients& c, int total_gpus,
                   const std::vector<int>& degrees, double* z_out) {
  bool found = false;
  double best = 0.0;
  std::map<int, int> x;
  std::map<int, int> y;
  std::function<void(std::size_t, int, bool)> rec = [&](std::size_t i,
                                                        int used, bool pre) {
    const std::vector<int>& degs = degrees;
    if (i == degs.size()) {
      if (pre) {
        rec(0, used, false);
        return;
      }
      int xr = 0;
      int yr = 0;
      for (const auto& [d, n] : x) xr += n;
      for (const auto& [d, n] : y) yr += n;
      if (xr == 0 || yr == 0) return;
      const double z = plan_objective_over(c, x, y);
      if (!found || z < best) {
        found = true;
        best = z;
      }
      return;
    }
    std::map<int, int>& counts = pre ? x : y;
    const int d = degs[i];
    for (int n = 0; used + n * d <= total_gpus; ++n) {
      if (n > 0) counts[d] = n;
      rec(i + 1, used + n * d, pre);
      counts.erase(d);
    }
  };
  rec(0, 0, true);
  *z_out = best;
  return found;
}

void criterion_planner_exactness(const Ctx&) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  int checked = 0;
  while (checked < kPlannerInstances) {
    std::vector<int> degrees;
    for (int d : {1, 2, 4, 8}) {
      if (rng() % 3 != 0) degrees.push_back(d);
    }
    if (degrees.empty()) continue;
    const int total = 1 + static_cast<int>(rng() % 16);
    LatencyCoefficients c;
    for (int d : degrees) {
      c.tau_pre[d] = 0.01 + static_cast<double>(rng() % 10000) / 10000.0;
      c.tau_dec[d] = 0.01 + static_cast<double>(rng() % 10000) / 10000.0;
    }
    double brute_z = 0.0;
    const bool brute_ok = brute_solve_z(c, total, degrees, &brute_z);
    const DeploymentPlan got = solve(c, total, degrees);
    require(got.feasible == brute_ok,
            "feasibility mismatch at instance " + std::to_string(checked));
    if (brute_ok) {
      require(got.objective_z == brute_z,
              "objective mismatch at instance " + std::to_string(checked) +
                  ": solve=" + num(got.objective_z) +
                  " brute=" + num(brute_z));
      require(plan_objective_over(c, got.x, got.y) == got.objective_z,
              "reported Z does not match the returned assignment");
      got.validate("acceptance", total);
    }
    ++checked;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  require(elapsed < kPlannerBudgetSec,
          "200 instances took " + num(elapsed) + "s (budget 5s)");
}

void criterion_planner_scale(const Ctx&) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  LatencyCoefficients c;
  for (int d : {1, 2, 4, 8}) {
    c.tau_pre[d] = 0.02 + static_cast<double>(rng() % 1000) / 1000.0;
    c.tau_dec[d] = 0.02 + static_cast<double>(rng() % 1000) / 1000.0;
  }
  const DeploymentPlan plan = solve(c, 256, {1, 2, 4, 8});
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  require(plan.feasible, "N=256 instance reported infeasible");
  plan.validate("acceptance", 256);
  require(elapsed < kScaleBudgetSec,
          "N=256 solve took " + num(elapsed) + "s (budget 60s)");
}

// ---------------------------------------------------------------------------
// Criterion 3: reordering equals exhaustive enumeration, never below FIFO.

void criterion_reorder_optimality(const Ctx&) {
  const PerfProfile& profile = scenario_profile();
  const ParallelismStrategy theta{1};
  std::mt19937_64 rng(31);
  for (int iter = 0; iter < kReorderWindows; ++iter) {
    ReorderParams params;
    params.window = 1 + static_cast<int>(rng() % 5);
    params.ttft_thres = 0.05 + static_cast<double>(rng() % 100) / 250.0;
    const double now = 100.0;
    const int qlen = 1 + static_cast<int>(rng() % 8);
    std::deque<PrefillTask> queue;
    for (int i = 0; i < qlen; ++i) {
      PrefillTask t;
      t.session_id = i;
      t.round = 1;
      t.l_incr = 1 + static_cast<TokenCount>(rng() % 9000);
      t.created_time = now - static_cast<double>(rng() % 300) / 100.0;
      t.enqueue_time = t.created_time;
      t.postpone_count = static_cast<int>(rng() % (params.window + 1));
      queue.push_back(t);
    }

    const int m = std::min<int>(params.window, qlen);
    const std::vector<PrefillTask> head(queue.begin(), queue.begin() + m);
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    const int fifo_count =
        count_satisfied(head, perm, now, params.ttft_thres, profile, theta);
    int best = -1;
    do {
      bool legal = true;
      for (int k = 0; k < m && legal; ++k) {
        if (k > perm[k] && head[perm[k]].postpone_count >= params.window) {
          legal = false;
        }
      }
      if (!legal) continue;
      best = std::max(best, count_satisfied(head, perm, now,
                                            params.ttft_thres, profile,
                                            theta));
    } while (std::next_permutation(perm.begin(), perm.end()));

    const ReorderOutcome out =
        reorder_and_dequeue(queue, now, params, profile, theta);
    require(out.predicted_satisfied == best,
            "window " + std::to_string(iter) + ": got " +
                std::to_string(out.predicted_satisfied) + " enumerated " +
                std::to_string(best));
    require(out.predicted_satisfied >= fifo_count,
            "window " + std::to_string(iter) + " fell below FIFO");
  }
}

// ---------------------------------------------------------------------------
// Criterion 4: no task is postponed more than w times in a long stream.

void criterion_starvation_bound(const Ctx&) {
  const PerfProfile& profile = scenario_profile();
  const ParallelismStrategy theta{1};
  for (int w = 1; w <= 5; ++w) {
    ReorderParams params;
    params.window = w;
    params.ttft_thres = 1.0;
    std::mt19937_64 rng(500 + static_cast<std::uint64_t>(w));
    std::deque<PrefillTask> queue;
    double now = 0.0;
    double next_arrival = 0.0;
    std::int64_t next_id = 0;
    std::int64_t served = 0;
    int max_postpone = 0;

    auto arrive_until = [&](double t) {
      while (next_arrival <= t) {
        PrefillTask task;
        task.session_id = next_id++;
        task.round = 1;
        // Adversarial mix: mostly short tasks with a stream of very long
        // ones that reordering keeps wanting to push back.
        task.l_incr = (rng() % 100 < 15)
                          ? 5000 + static_cast<TokenCount>(rng() % 4000)
                          : 50 + static_cast<TokenCount>(rng() % 250);
        task.created_time = next_arrival;
        task.enqueue_time = next_arrival;
        queue.push_back(task);
        // Just past one server's service rate so the queue stays populated.
        next_arrival += 0.005 + static_cast<double>(rng() % 750) / 10000.0;
      }
    };

    while (served < kStarvationTasks) {
      arrive_until(now);
      if (queue.empty()) {
        now = next_arrival;
        continue;
      }
      const ReorderOutcome out =
          reorder_and_dequeue(queue, now, params, profile, theta);
      max_postpone = std::max(max_postpone, out.task.postpone_count);
      for (const PrefillTask& t : queue) {
        max_postpone = std::max(max_postpone, t.postpone_count);
      }
      now += t_prefill(profile, out.task.l_hist, out.task.l_incr, theta);
      ++served;
      // Keep the backlog bounded so the stream stays adversarial instead of
      // diverging: drop the tail beyond 24 waiting tasks.
      while (queue.size() > 24) queue.pop_back();
    }
    require(max_postpone <= w, "w=" + std::to_string(w) +
                                   ": observed postpone count " +
                                   std::to_string(max_postpone));
    require(served == kStarvationTasks, "stream ended early");
    // The bound is vacuous if the stream never triggers a postponement.
    require(w < 2 || max_postpone >= 1,
            "w=" + std::to_string(w) + ": stream exercised no postponement");
  }
}

// ---------------------------------------------------------------------------
// Criterion 5: measured latency vs the routing estimates.

void criterion_estimator_consistency(const Ctx&) {
  const PerfProfile& p = scenario_profile();
  const ParallelismStrategy th{1};

  // Scenario A: idle remote worker, exact equality (first session), and a
  // probe arriving while only a write-back is in flight (compute is free, so
  // the estimate must hold up to float association).
  {
    const double p_a = t_prefill(p, 0, 2000, th);
    const double w_a = t_kv(p, 2000, th, th);
    Trace t;
    t.name = "frozen";
    t.slo = {50.0, 5.0};
    SessionSpec a;
    a.session_id = 0;
    a.arrival_time = 0.0;
    a.rounds = {{2000, 3, 0.0}};
    SessionSpec b;
    b.session_id = 1;
    b.arrival_time = p_a + 0.5 * w_a;
    b.rounds = {{700, 3, 0.0}};
    t.sessions = {a, b};

    DeploymentPlan plan;
    plan.x[1] = 1;
    plan.y[1] = 1;
    plan.feasible = true;
    plan.gpus_used = 2;
    SchedulerParams params;
    params.routing = RoutingMode::kAlwaysRemote;
    const SimResult r = run(t, plan, p, params, 1);

    WorkerState idle_prefill;
    idle_prefill.phase = WorkerPhase::kPrefill;
    idle_prefill.theta = th;
    WorkerState bound;
    bound.phase = WorkerPhase::kDecode;
    bound.theta = th;

    PrefillTask probe_a;
    probe_a.l_incr = 2000;
    const double est_a = estimate_remote(probe_a, idle_prefill, bound, p);
    require(ttft_of(r, 0) == est_a, "idle remote TTFT " + num(ttft_of(r, 0)) +
                                        " != estimate " + num(est_a));

    PrefillTask probe_b;
    probe_b.l_incr = 700;
    const double est_b = estimate_remote(probe_b, idle_prefill, bound, p);
    require(std::abs(ttft_of(r, 1) - est_b) <= kFpSlack,
            "write-back-overlap TTFT " + num(ttft_of(r, 1)) +
                " vs estimate " + num(est_b));
  }

  // Scenario B: local execution. The first session measures the idle decode
  // worker exactly; two probes arriving mid-decode-step measure the queue
  // term and may exceed the estimate only by the in-flight step remainder.
  {
    const double p_a = t_prefill(p, 0, 600, th);
    const double td = t_decode(p, 1, th);
    Trace t;
    t.name = "frozen";
    t.slo = {50.0, 5.0};
    SessionSpec a;
    a.session_id = 0;
    a.arrival_time = 0.0;
    a.rounds = {{600, 30, 0.0}};
    SessionSpec b;
    b.session_id = 1;
    b.arrival_time = p_a + 3.5 * td;  // strictly inside the fourth step
    b.rounds = {{500, 3, 0.0}};
    SessionSpec c = b;
    c.session_id = 2;
    c.rounds = {{400, 3, 0.0}};
    t.sessions = {a, b, c};

    DeploymentPlan plan;
    plan.y[1] = 1;
    plan.feasible = true;
    plan.gpus_used = 1;
    SchedulerParams params;
    params.routing = RoutingMode::kAlwaysLocal;
    params.reorder = false;
    const SimResult r = run(t, plan, p, params, 1);

    WorkerState idle_decode;
    idle_decode.phase = WorkerPhase::kDecode;
    idle_decode.theta = th;
    PrefillTask probe_a;
    probe_a.l_incr = 600;
    require(ttft_of(r, 0) == estimate_local(probe_a, idle_decode, p),
            "idle local TTFT is not exact");

    PrefillTask probe_b;
    probe_b.l_incr = 500;
    const double est_b = estimate_local(probe_b, idle_decode, p);
    const double diff_b = ttft_of(r, 1) - est_b;
    require(diff_b >= 0.0 && diff_b <= td + kFpSlack,
            "busy local probe 1 off by " + num(diff_b) + " (step " +
                num(td) + ")");

    WorkerState queued_decode = idle_decode;
    PrefillTask queued_task;
    queued_task.l_incr = 500;
    queued_decode.prefill_queue.push_back(queued_task);
    PrefillTask probe_c;
    probe_c.l_incr = 400;
    const double est_c = estimate_local(probe_c, queued_decode, p);
    const double diff_c = ttft_of(r, 2) - est_c;
    require(diff_c >= 0.0 && diff_c <= td + kFpSlack,
            "busy local probe 2 off by " + num(diff_c) + " (step " +
                num(td) + ")");
    // Both probes waited on the same in-flight step.
    require(std::abs(diff_b - diff_c) <= kFpSlack,
            "probes saw different step remainders");
  }

  // Scenario C: the estimate formulas against hand-summed components on a
  // constructed snapshot.
  {
    const PerfProfile multi = synth_profile(SynthProfileSpec{}, 42);
    WorkerState prefill;
    prefill.phase = WorkerPhase::kPrefill;
    prefill.theta = {4};
    PrefillTask q1;
    q1.l_incr = 1200;
    PrefillTask q2;
    q2.l_hist = 800;
    q2.l_incr = 300;
    prefill.prefill_queue = {q1, q2};
    WorkerState decode;
    decode.phase = WorkerPhase::kDecode;
    decode.theta = {2};

    PrefillTask task;
    task.l_hist = 2000;
    task.l_incr = 500;
    const double want = t_prefill(multi, 2000, 500, {4}) +
                        t_kv(multi, 2000, {2}, {4}) +
                        t_kv(multi, 500, {4}, {2}) +
                        t_prefill(multi, 0, 1200, {4}) +
                        t_prefill(multi, 800, 300, {4});
    require(std::abs(estimate_remote(task, prefill, decode, multi) - want) <=
                kFpSlack,
            "estimate_remote drifted from hand-summed components");
    const double want_local = t_prefill(multi, 2000, 500, {2});
    require(estimate_local(task, decode, multi) == want_local,
            "estimate_local on an empty queue is not the bare prefill time");
  }
}

// ---------------------------------------------------------------------------
// Criterion 6: routing slack precedence and argmin correctness.

void criterion_routing_semantics(const Ctx&) {
  const PerfProfile p = synth_profile(SynthProfileSpec{}, 1);
  std::mt19937_64 rng(4242);
  int slack_remote = 0;
  int slack_local = 0;
  int argmin = 0;
  for (int iter = 0; iter < kRoutingSnapshots; ++iter) {
    RoutingParams params;
    params.alpha = 0.5 + static_cast<double>(rng() % 50) / 100.0;
    params.beta = 0.5 + static_cast<double>(rng() % 50) / 100.0;
    params.ttft_thres = 0.5 + static_cast<double>(rng() % 300) / 100.0;
    params.itl_thres = 0.02 + static_cast<double>(rng() % 20) / 100.0;
    const double now = 100.0;

    const int np = 1 + static_cast<int>(rng() % 3);
    std::vector<WorkerState> prefills(np);
    for (int i = 0; i < np; ++i) {
      prefills[i].id = i;
      prefills[i].phase = WorkerPhase::kPrefill;
      prefills[i].theta = {1 << (rng() % 3)};
      if (rng() % 4 != 0) {
        prefills[i].ttft_stat.add(now - 1.0,
                                  static_cast<double>(rng() % 400) / 100.0);
      }
      const int queued = static_cast<int>(rng() % 4);
      for (int q = 0; q < queued; ++q) {
        PrefillTask t;
        t.l_incr = 1 + static_cast<TokenCount>(rng() % 2000);
        prefills[i].prefill_queue.push_back(t);
      }
    }
    WorkerState decode;
    decode.id = np;
    decode.phase = WorkerPhase::kDecode;
    decode.theta = {1 << (rng() % 3)};
    if (rng() % 2 == 0) {
      decode.itl_stat.add(now - 1.0, static_cast<double>(rng() % 30) / 100.0);
    }

    PrefillTask task;
    task.l_hist = (rng() % 2) * static_cast<TokenCount>(rng() % 1500);
    task.l_incr = 1 + static_cast<TokenCount>(rng() % 3000);
    task.kind = task.l_hist == 0 ? TaskKind::kInitial : TaskKind::kIncremental;

    Coordinator coord(params, 9000 + iter);
    const RoutingDecision dec = coord.route(task, decode, prefills, p, now);

    bool any_slack = false;
    for (int i = 0; i < np; ++i) {
      if (prefills[i].ttft_stat.query(now) <=
          params.alpha * params.ttft_thres) {
        any_slack = true;
      }
    }
    if (any_slack) {
      require(dec.rationale == RouteRationale::kSlackRemote && !dec.local,
              "slack precedence violated at snapshot " +
                  std::to_string(iter));
      require(prefills[dec.prefill_worker].ttft_stat.query(now) <=
                  params.alpha * params.ttft_thres,
              "picked a slack-less worker at snapshot " +
                  std::to_string(iter));
      ++slack_remote;
    } else if (decode.itl_stat.query(now) <= params.beta * params.itl_thres) {
      require(dec.rationale == RouteRationale::kSlackLocal && dec.local,
              "ITL slack ignored at snapshot " + std::to_string(iter));
      ++slack_local;
    } else {
      require(dec.rationale == RouteRationale::kArgmin,
              "expected argmin at snapshot " + std::to_string(iter));
      const double chosen = dec.local
                                ? estimate_local(task, decode, p)
                                : estimate_remote(task,
                                                  prefills[dec.prefill_worker],
                                                  decode, p);
      double best = estimate_local(task, decode, p);
      for (const WorkerState& w : prefills) {
        best = std::min(best, estimate_remote(task, w, decode, p));
      }
      require(chosen <= best + kFpSlack,
              "argmin picked a non-minimal target at snapshot " +
                  std::to_string(iter));
      ++argmin;
    }
  }
  require(slack_remote >= 50 && slack_local >= 20 && argmin >= 20,
          "snapshot sweep did not exercise all three stages (" +
              std::to_string(slack_remote) + "/" +
              std::to_string(slack_local) + "/" + std::to_string(argmin) +
              ")");
}

// ---------------------------------------------------------------------------
// Criterion 7: conservation across traces and modes.

void criterion_conservation(const Ctx&) {
  const PerfProfile p = synth_profile(SynthProfileSpec{}, 4);
  DeploymentPlan plan;
  plan.x[1] = 2;
  plan.y[1] = 2;
  plan.feasible = true;
  plan.gpus_used = 4;
  const std::vector<std::pair<std::string, double>> workloads = {
      {"toolbench", 6.0}, {"dureader", 8.0}, {"gaia", 1.5}};
  for (const auto& [preset, rate] : workloads) {
    const Trace trace = gen_trace(preset_stats(preset), rate, 200, 3);
    std::int64_t rounds = 0;
    std::int64_t tokens = 0;
    for (const SessionSpec& s : trace.sessions) {
      rounds += static_cast<std::int64_t>(s.rounds.size());
      tokens += s.total_decode();
    }
    for (RoutingMode mode :
         {RoutingMode::kAdaptive, RoutingMode::kAlwaysRemote,
          RoutingMode::kAlwaysLocal}) {
      SchedulerParams params;
      params.routing = mode;
      const SimResult r = run(trace, plan, p, params, 11);
      const std::string tag = preset + "/" + to_string(mode);
      require(r.counters.tasks_created == rounds, tag + ": tasks created");
      require(r.counters.tasks_completed == rounds, tag + ": tasks lost");
      require(r.counters.tokens_decoded == tokens, tag + ": tokens lost");
      require(r.counters.kv_bytes_residual == 0, tag + ": KV not released");
      require(r.counters.events_in_order, tag + ": events out of order");
      require(static_cast<std::int64_t>(r.sessions.size()) ==
                  static_cast<std::int64_t>(trace.sessions.size()),
              tag + ": incomplete sessions");
    }
  }
}

// ---------------------------------------------------------------------------
// Criterion 8: ablation direction on the saturating scenario.

void criterion_ablation_direction(const Ctx&) {
  const Report fifo_remote =
      run_scenario(saturating_trace(), RoutingMode::kAlwaysRemote, false);
  const Report adaptive =
      run_scenario(saturating_trace(), RoutingMode::kAdaptive, false);
  const Report adaptive_reorder =
      run_scenario(saturating_trace(), RoutingMode::kAdaptive, true);

  const std::string detail = "attainment remote-fifo=" +
                             num(fifo_remote.slo_attainment) + " adaptive=" +
                             num(adaptive.slo_attainment) + " +reorder=" +
                             num(adaptive_reorder.slo_attainment) +
                             " local-fraction=" +
                             num(adaptive_reorder.local_fraction);
  require(adaptive.slo_attainment >= fifo_remote.slo_attainment,
          "adaptive routing lowered attainment (" + detail + ")");
  require(adaptive_reorder.slo_attainment >= adaptive.slo_attainment,
          "reordering lowered attainment (" + detail + ")");
  require(adaptive_reorder.slo_attainment > fifo_remote.slo_attainment,
          "full mechanism shows no gain over the baseline (" + detail + ")");
  for (const Report* r : {&adaptive, &adaptive_reorder}) {
    require(r->local_fraction > 0.0 && r->local_fraction < 1.0,
            "local fraction not in (0,1) (" + detail + ")");
  }
}

// ---------------------------------------------------------------------------
// Criterion 9: the co-located/disaggregated tension plus adaptive dominance.

void criterion_tradeoff(const Ctx&) {
  const Report local_mod =
      run_scenario(moderate_trace(), RoutingMode::kAlwaysLocal, false);
  const Report remote_mod =
      run_scenario(moderate_trace(), RoutingMode::kAlwaysRemote, false);
  require(local_mod.itl.p95 > remote_mod.itl.p95,
          "co-located P95 ITL " + num(local_mod.itl.p95) +
              " not worse than disaggregated " + num(remote_mod.itl.p95));
  require(remote_mod.ttft_incremental.mean > local_mod.ttft_incremental.mean,
          "disaggregated incremental TTFT " +
              num(remote_mod.ttft_incremental.mean) +
              " not worse than co-located " +
              num(local_mod.ttft_incremental.mean));

  const Report local_sat =
      run_scenario(saturating_trace(), RoutingMode::kAlwaysLocal, false);
  const Report remote_sat =
      run_scenario(saturating_trace(), RoutingMode::kAlwaysRemote, false);
  const Report adaptive_sat =
      run_scenario(saturating_trace(), RoutingMode::kAdaptive, true);
  const std::string detail =
      "attainment local=" + num(local_sat.slo_attainment) + " remote=" +
      num(remote_sat.slo_attainment) + " adaptive=" +
      num(adaptive_sat.slo_attainment);
  require(adaptive_sat.slo_attainment >= local_sat.slo_attainment &&
              adaptive_sat.slo_attainment >= remote_sat.slo_attainment,
          "adaptive mode dominated by a baseline (" + detail + ")");
}

// ---------------------------------------------------------------------------
// Criterion 10: sensitivity structure via the sweep subcommand.

std::vector<std::map<std::string, double>> parse_sweep_csv(
    const std::string& text) {
  std::vector<std::map<std::string, double>> rows;
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (header.empty()) {
      header = fields;
      continue;
    }
    std::map<std::string, double> row;
    for (std::size_t i = 0; i < header.size() && i < fields.size(); ++i) {
      row[header[i]] = std::stod(fields[i]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void criterion_sensitivity(const Ctx& ctx) {
  const fs::path dir = ctx.scratch / "sensitivity";
  fs::create_directories(dir);
  const fs::path profile_path = dir / "profile.json";
  write_file(profile_path, save_profile(scenario_profile()));

  const std::string common = "--profile \"" + profile_path.string() +
                             "\" --plan-spec P:2x1,D:2x1 --preset dureader "
                             "--sessions " +
                             std::to_string(kScenarioSessions) + " --rates " +
                             num(kSaturatingRate) + " --seed " +
                             std::to_string(kScenarioSeed) + " --stat-window " +
                             num(kStatWindow) + " --window " +
                             std::to_string(kReorderWindow);

  const fs::path wdir = dir / "windows";
  run_cli(ctx, "sweep " + common + " --windows 2,3,4,5 --out \"" +
                   wdir.string() + "\"");
  const auto wrows = parse_sweep_csv(read_file(wdir / "sweep.csv"));
  require(wrows.size() == 4, "window sweep produced " +
                                 std::to_string(wrows.size()) + " rows");
  double wmin = 1.0;
  double wmax = 0.0;
  for (const auto& row : wrows) {
    const double a = row.at("slo_attainment");
    require(a >= 0.0 && a <= 1.0, "window sweep attainment out of range");
    wmin = std::min(wmin, a);
    wmax = std::max(wmax, a);
  }

  const fs::path gdir = dir / "grid";
  run_cli(ctx, "sweep " + common +
                   " --alphas 0.7,0.8,0.9,1.0 --betas 0.7,0.85,1.0 --out \"" +
                   gdir.string() + "\"");
  const auto grows = parse_sweep_csv(read_file(gdir / "sweep.csv"));
  require(grows.size() == 12, "alpha/beta sweep produced " +
                                  std::to_string(grows.size()) + " rows");
  double best_extreme = -1.0;
  double best_moderate = -1.0;
  for (const auto& row : grows) {
    const bool extreme = row.at("alpha") == 0.7 || row.at("beta") == 0.7;
    (extreme ? best_extreme : best_moderate) =
        std::max(extreme ? best_extreme : best_moderate,
                 row.at("slo_attainment"));
  }
  require(best_extreme >= 0.0 && best_moderate >= 0.0,
          "sweep grid misses a class");
  std::cout << "      window spread " << num(wmax - wmin) << ", best extreme "
            << num(best_extreme) << ", best moderate " << num(best_moderate)
            << "\n";
  require(best_extreme <= best_moderate,
          "extreme slack settings outperform the best moderate setting "
          "(extreme=" +
              num(best_extreme) + " moderate=" + num(best_moderate) +
              "). At two-prefill-worker scale the windowed-TTFT gate pins "
              "queues at the alpha setpoint, so a smaller alpha always keeps "
              "more threshold headroom; the moderate optimum needs idle "
              "prefill capacity to waste, which sustained saturation never "
              "provides. Window sweep half: spread " +
              num(wmax - wmin) + " reported.");
}

// ---------------------------------------------------------------------------
// Criterion 11: byte-identical reruns through the CLI.

void criterion_determinism(const Ctx& ctx) {
  const fs::path dir = ctx.scratch / "determinism";
  fs::create_directories(dir);
  const fs::path profile_path = dir / "profile.json";
  const fs::path trace_path = dir / "trace.json";
  run_cli(ctx, "profile-gen --out \"" + profile_path.string() + "\" --seed 9");
  run_cli(ctx, "trace-gen --preset hotpotqa --rate 6 --sessions 150 --seed 4 "
               "--out \"" +
                   trace_path.string() + "\"");
  const std::string sim_args = "simulate --trace \"" + trace_path.string() +
                               "\" --profile \"" + profile_path.string() +
                               "\" --plan-spec P:2x1,D:2x1 --seed 12 --out \"";
  run_cli(ctx, sim_args + (dir / "run_a").string() + "\"");
  run_cli(ctx, sim_args + (dir / "run_b").string() + "\"");
  for (const char* file :
       {"ttft_samples.csv", "itl_samples.csv", "sessions.csv",
        "decisions.csv", "summary.json", "config.json"}) {
    require(read_file(dir / "run_a" / file) == read_file(dir / "run_b" / file),
            std::string(file) + " differs between identical runs");
  }
}

// ---------------------------------------------------------------------------
// Criterion 12: save -> load -> save byte identity.

void criterion_format_roundtrip(const Ctx& ctx) {
  const fs::path dir = ctx.scratch / "roundtrip";
  fs::create_directories(dir);

  const fs::path profile_path = dir / "profile.json";
  run_cli(ctx, "profile-gen --out \"" + profile_path.string() +
                   "\" --seed 31 --degrees 1,2,4");
  const std::string profile_text = read_file(profile_path);
  require(save_profile(load_profile(profile_text)) == profile_text,
          "profile save/load/save is not byte identical");

  const fs::path trace_path = dir / "trace.json";
  run_cli(ctx, "trace-gen --preset gaia --rate 2 --sessions 80 --seed 5 "
               "--out \"" +
                   trace_path.string() + "\"");
  const std::string trace_text = read_file(trace_path);
  require(save_trace(load_trace(trace_text)) == trace_text,
          "trace save/load/save is not byte identical");

  // Plans as well: the planner's persisted output reloads canonically.
  DeploymentPlan plan;
  plan.x = {{1, 2}, {4, 1}};
  plan.y = {{2, 3}};
  plan.objective_z = 0.25;
  plan.feasible = true;
  plan.gpus_used = plan.gpus();
  const std::string plan_text = plan_to_json(plan);
  require(plan_to_json(plan_from_json(plan_text)) == plan_text,
          "plan save/load/save is not byte identical");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(const Ctx&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance_test <pdsim-binary> <scratch-dir>\n";
    return 2;
  }
  Ctx ctx;
  ctx.cli = argv[1];
  ctx.scratch = argv[2];
  fs::remove_all(ctx.scratch);
  fs::create_directories(ctx.scratch);

  const std::vector<Criterion> criteria = {
      {1, "planner exactness vs brute force", criterion_planner_exactness},
      {2, "planner scalability at 256 GPUs", criterion_planner_scale},
      {3, "reordering optimality vs enumeration",
       criterion_reorder_optimality},
      {4, "starvation bound under adversarial streams",
       criterion_starvation_bound},
      {5, "estimator consistency against measured latency",
       criterion_estimator_consistency},
      {6, "routing slack precedence and argmin correctness",
       criterion_routing_semantics},
      {7, "simulator conservation laws", criterion_conservation},
      {8, "ablation direction on the saturating scenario",
       criterion_ablation_direction},
      {9, "co-located/disaggregated tradeoff reproduction",
       criterion_tradeoff},
      {10, "slack-factor and window sensitivity structure",
       criterion_sensitivity},
      {11, "byte-identical deterministic reruns", criterion_determinism},
      {12, "format round trips", criterion_format_roundtrip},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    try {
      c.fn(ctx);
      std::cout << "[PASS] " << c.id << ": " << c.name << "\n";
    } catch (const Failure& f) {
      ++failures;
      std::cout << "[FAIL] " << c.id << ": " << c.name << " - " << f.detail
                << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "[FAIL] " << c.id << ": " << c.name
                << " - unexpected error: " << e.what() << "\n";
    }
  }
  if (failures > 0) {
    std::cout << failures << " of " << criteria.size()
              << " acceptance criteria failed\n";
    return 1;
  }
  std::cout << "all " << criteria.size() << " acceptance criteria passed\n";
  return 0;
}
