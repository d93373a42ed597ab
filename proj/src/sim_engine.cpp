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

#include "pdsim/sim_engine.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <unordered_map>

#include "pdsim/errors.hpp"
#include "pdsim/reorder.hpp"

namespace pdsim {

namespace {

double mean_of(const std::vector<double>& values) {
  if (values.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

bool all_within(const std::vector<double>& values, double limit) {
  for (double v : values) {
    if (v > limit) return false;
  }
  return true;
}

// Tie order at equal timestamps: admissions are observed before completions,
// transfers before the compute they unblock.
enum EventKind : int {
  kArrival = 0,
  kInteractionDone = 1,
  kKvTransferDone = 2,
  kPrefillDone = 3,
  kDecodeStep = 4,
};

enum TransferKind : int { kHistoryRead = 0, kWriteback = 1 };

struct Event {
  double time = 0.0;
  int kind = 0;
  std::uint64_t seq = 0;
  std::int64_t session = -1;  // session index (arrival, interaction_done)
  int worker = -1;            // global worker id
  int transfer = kHistoryRead;
  PrefillTask task;  // writeback payload
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.seq > b.seq;
  }
};

struct SessionRt {
  const SessionSpec* spec = nullptr;
  int bound = -1;  // decode worker index (0-based within the decode pool)
  int current_round = 0;
  TokenCount context_len = 0;
  TokenCount decoded_in_round = 0;
  double last_token_time = 0.0;
  double bind_time = 0.0;
  std::vector<double> ttft_values;
  std::vector<double> itl_values;
};

// One-at-a-time compute with a single staged slot: the staged task's history
// read runs while the current task computes.
struct PrefillExec {
  bool computing = false;
  PrefillTask current{};
  double current_done = 0.0;
  bool staged = false;
  PrefillTask staged_task{};
  double staged_ready = 0.0;
  bool transfer_pending = false;
};

struct DecodeExec {
  bool stepping = false;
  bool prefilling = false;
  PrefillTask current{};
  std::vector<std::int64_t> cohort;  // session indexes in the running step
};

class Engine {
 public:
  Engine(const Trace& trace, const DeploymentPlan& plan,
         const PerfProfile& profile, const SchedulerParams& params,
         std::uint64_t seed)
      : trace_(trace),
        profile_(profile),
        params_(params),
        coordinator_(RoutingParams{params.alpha, params.beta,
                                   trace.slo.ttft_thres, trace.slo.itl_thres},
                     seed) {
    params_.validate();
    trace_.validate();
    profile_.validate();
    build_workers(plan);
    precheck_sessions();

    sessions_.resize(trace_.sessions.size());
    for (std::size_t i = 0; i < trace_.sessions.size(); ++i) {
      sessions_[i].spec = &trace_.sessions[i];
      id_to_index_[trace_.sessions[i].session_id] =
          static_cast<std::int64_t>(i);
    }

    result_.trace_name = trace_.name;
    result_.slo = trace_.slo;
    result_.total_sessions = static_cast<std::int64_t>(trace_.sessions.size());
  }

  SimResult run() {
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
      Event ev;
      ev.time = sessions_[i].spec->arrival_time;
      ev.kind = kArrival;
      ev.session = static_cast<std::int64_t>(i);
      schedule(ev);
    }

    while (!events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      if (ev.time < now_) {
        result_.counters.events_in_order = false;
      }
      now_ = ev.time;
      switch (ev.kind) {
        case kArrival: on_arrival(ev.session); break;
        case kInteractionDone: on_interaction_done(ev.session); break;
        case kKvTransferDone: on_kv_transfer_done(ev); break;
        case kPrefillDone: on_prefill_done(ev.worker); break;
        case kDecodeStep: on_decode_step(ev.worker - prefill_count()); break;
        default: break;
      }
    }

    for (const WorkerState& w : decode_states_) {
      result_.counters.kv_bytes_residual += w.kv_bytes_used;
    }
    std::sort(result_.sessions.begin(), result_.sessions.end(),
              [](const SessionOutcome& a, const SessionOutcome& b) {
                return a.session_id < b.session_id;
              });
    return std::move(result_);
  }

 private:
  int prefill_count() const { return static_cast<int>(prefill_states_.size()); }

  void build_workers(const DeploymentPlan& plan) {
    plan.validate("plan");
    int next_id = 0;
    for (const auto& [degree, count] : plan.x) {
      if (!profile_.has_degree(degree)) {
        throw ConfigError("plan: prefill degree " + std::to_string(degree) +
                          " not covered by profile");
      }
      for (int i = 0; i < count; ++i) {
        prefill_states_.push_back(make_worker(next_id++, WorkerPhase::kPrefill,
                                              degree));
      }
    }
    for (const auto& [degree, count] : plan.y) {
      if (!profile_.has_degree(degree)) {
        throw ConfigError("plan: decode degree " + std::to_string(degree) +
                          " not covered by profile");
      }
      for (int i = 0; i < count; ++i) {
        decode_states_.push_back(make_worker(next_id++, WorkerPhase::kDecode,
                                             degree));
      }
    }
    if (decode_states_.empty()) {
      throw ConfigError("plan: at least one decode replica is required");
    }
    prefill_exec_.resize(prefill_states_.size());
    decode_exec_.resize(decode_states_.size());
  }

  WorkerState make_worker(int id, WorkerPhase phase, int degree) const {
    WorkerState w;
    w.id = id;
    w.phase = phase;
    w.theta = ParallelismStrategy{degree};
    w.kv_capacity_bytes =
        static_cast<std::int64_t>(degree) * profile_.gpu_memory_capacity;
    w.ttft_stat = WindowedStat(params_.stat_window);
    w.itl_stat = WindowedStat(params_.stat_window);
    return w;
  }

  void precheck_sessions() const {
    std::int64_t max_capacity = 0;
    for (const WorkerState& w : decode_states_) {
      max_capacity = std::max(max_capacity, w.kv_capacity_bytes);
    }
    for (const SessionSpec& s : trace_.sessions) {
      const std::int64_t first_round_bytes =
          s.rounds.front().incr_input_len * profile_.kv_bytes_per_token;
      if (first_round_bytes > max_capacity) {
        throw ConfigError("trace: session " + std::to_string(s.session_id) +
                          " first-round KV exceeds every decode worker's "
                          "capacity");
      }
    }
  }

  void schedule(Event ev) {
    ev.seq = next_seq_++;
    events_.push(ev);
  }

  // ---- admission ----

  void on_arrival(std::int64_t sidx) {
    if (!admission_queue_.empty() || !try_admit(sidx)) {
      admission_queue_.push_back(sidx);
    }
  }

  bool try_admit(std::int64_t sidx) {
    SessionRt& s = sessions_[static_cast<std::size_t>(sidx)];
    const int candidate = bind_session(decode_states_);
    const WorkerState& w = decode_states_[static_cast<std::size_t>(candidate)];
    const std::int64_t first_round_bytes =
        s.spec->rounds.front().incr_input_len * profile_.kv_bytes_per_token;
    if (w.kv_bytes_used + first_round_bytes > w.kv_capacity_bytes) {
      return false;
    }
    s.bound = candidate;
    s.bind_time = now_;
    s.current_round = 1;
    start_round(sidx, s.spec->arrival_time);
    return true;
  }

  void admit_waiting() {
    // Head-of-line order: later arrivals stay parked until the head fits.
    while (!admission_queue_.empty() && try_admit(admission_queue_.front())) {
      admission_queue_.pop_front();
    }
  }

  // ---- task creation and routing ----

  void start_round(std::int64_t sidx, double created_time) {
    SessionRt& s = sessions_[static_cast<std::size_t>(sidx)];
    const Round& round =
        s.spec->rounds[static_cast<std::size_t>(s.current_round - 1)];

    PrefillTask task;
    task.session_id = s.spec->session_id;
    task.round = s.current_round;
    task.kind = s.current_round == 1 ? TaskKind::kInitial
                                     : TaskKind::kIncremental;
    task.l_hist = s.context_len;
    task.l_incr = round.incr_input_len;
    task.created_time = created_time;
    task.enqueue_time = now_;
    ++result_.counters.tasks_created;

    const RoutingDecision decision = decide(task, s);

    DecisionRecord record;
    record.time = now_;
    record.session_id = task.session_id;
    record.round = task.round;
    record.local = decision.local;
    record.worker = decision.local ? prefill_count() + s.bound
                                   : decision.prefill_worker;
    record.rationale = decision.rationale;
    record.estimated_cost = decision.estimated_cost;
    result_.decisions.push_back(record);

    if (decision.local) {
      enqueue_local(s.bound, task);
    } else {
      enqueue_remote(decision.prefill_worker, task);
    }
  }

  RoutingDecision decide(const PrefillTask& task, const SessionRt& s) {
    RoutingDecision d;
    switch (params_.routing) {
      case RoutingMode::kAlwaysLocal:
        d.local = true;
        d.rationale = RouteRationale::kForcedLocal;
        return d;
      case RoutingMode::kAlwaysRemote: {
        if (prefill_states_.empty()) {
          d.local = true;
          d.rationale = RouteRationale::kForcedLocal;
          return d;
        }
        d.local = false;
        d.prefill_worker = round_robin_next_;
        round_robin_next_ = (round_robin_next_ + 1) % prefill_count();
        d.rationale = RouteRationale::kForcedRemote;
        return d;
      }
      case RoutingMode::kAdaptive:
        return coordinator_.route(task,
                                  decode_states_[static_cast<std::size_t>(
                                      s.bound)],
                                  prefill_states_, profile_, now_);
    }
    return d;
  }

  PrefillTask select_next(std::deque<PrefillTask>& queue,
                          const ParallelismStrategy& theta) {
    PrefillTask task;
    if (params_.reorder) {
      ReorderParams rp;
      rp.window = params_.window;
      rp.ttft_thres = trace_.slo.ttft_thres;
      task = reorder_and_dequeue(queue, now_, rp, profile_, theta).task;
    } else {
      task = queue.front();
      queue.pop_front();
    }
    result_.counters.max_postpone_observed = std::max(
        result_.counters.max_postpone_observed, task.postpone_count);
    return task;
  }

  // ---- prefill workers ----

  void enqueue_remote(int p, const PrefillTask& task) {
    prefill_states_[static_cast<std::size_t>(p)].prefill_queue.push_back(task);
    try_stage(p);
    try_start_compute(p);
  }

  void try_stage(int p) {
    WorkerState& w = prefill_states_[static_cast<std::size_t>(p)];
    PrefillExec& e = prefill_exec_[static_cast<std::size_t>(p)];
    if (e.staged || w.prefill_queue.empty()) {
      return;
    }
    e.staged_task = select_next(w.prefill_queue, w.theta);
    e.staged = true;
    if (e.staged_task.l_hist > 0) {
      // Lazy history read from the bound decode worker, overlapping whatever
      // this worker is currently computing.
      const SessionRt& s = session_of(e.staged_task.session_id);
      const WorkerState& d =
          decode_states_[static_cast<std::size_t>(s.bound)];
      const double duration =
          t_kv(profile_, e.staged_task.l_hist, d.theta, w.theta);
      e.staged_ready = now_ + duration;
      e.transfer_pending = true;
      Event ev;
      ev.time = e.staged_ready;
      ev.kind = kKvTransferDone;
      ev.worker = w.id;
      ev.transfer = kHistoryRead;
      schedule(ev);
    } else {
      e.staged_ready = now_;
      e.transfer_pending = false;
    }
  }

  void try_start_compute(int p) {
    WorkerState& w = prefill_states_[static_cast<std::size_t>(p)];
    PrefillExec& e = prefill_exec_[static_cast<std::size_t>(p)];
    if (e.computing || !e.staged || e.transfer_pending ||
        e.staged_ready > now_) {
      return;
    }
    e.current = e.staged_task;
    e.staged = false;
    e.computing = true;
    const double duration =
        t_prefill(profile_, e.current.l_hist, e.current.l_incr, w.theta);
    e.current_done = now_ + duration;
    w.busy_until = e.current_done;
    Event ev;
    ev.time = e.current_done;
    ev.kind = kPrefillDone;
    ev.worker = w.id;
    schedule(ev);
    try_stage(p);  // next task's history read overlaps this compute
  }

  void on_prefill_done(int worker_id) {
    if (worker_id < prefill_count()) {
      const int p = worker_id;
      PrefillExec& e = prefill_exec_[static_cast<std::size_t>(p)];
      e.computing = false;
      const PrefillTask task = e.current;
      const SessionRt& s = session_of(task.session_id);
      const WorkerState& d = decode_states_[static_cast<std::size_t>(s.bound)];
      const WorkerState& w = prefill_states_[static_cast<std::size_t>(p)];
      Event ev;
      ev.time = now_ + t_kv(profile_, task.l_incr, w.theta, d.theta);
      ev.kind = kKvTransferDone;
      ev.worker = w.id;
      ev.transfer = kWriteback;
      ev.task = task;
      schedule(ev);
      try_stage(p);
      try_start_compute(p);
    } else {
      const int d = worker_id - prefill_count();
      DecodeExec& e = decode_exec_[static_cast<std::size_t>(d)];
      e.prefilling = false;
      complete_task(e.current, /*local=*/true, d,
                    decode_states_[static_cast<std::size_t>(d)].ttft_stat);
      advance_decode(d);
    }
  }

  void on_kv_transfer_done(const Event& ev) {
    const int p = ev.worker;
    if (ev.transfer == kHistoryRead) {
      PrefillExec& e = prefill_exec_[static_cast<std::size_t>(p)];
      e.transfer_pending = false;
      try_start_compute(p);
      return;
    }
    // Write-back landed: the task is complete and decode may resume.
    const SessionRt& s = session_of(ev.task.session_id);
    complete_task(ev.task, /*local=*/false, s.bound,
                  prefill_states_[static_cast<std::size_t>(p)].ttft_stat);
    advance_decode(s.bound);
  }

  // Records the TTFT sample on the serving worker's stat, lands the
  // incremental KV on the bound decode worker, and moves the session into
  // the decode batch.
  void complete_task(const PrefillTask& task, bool local, int decode_idx,
                     WindowedStat& serving_stat) {
    const double value = now_ - task.created_time;
    serving_stat.add(now_, value);

    TtftSample sample;
    sample.session_id = task.session_id;
    sample.round = task.round;
    sample.kind = task.kind;
    sample.local = local;
    sample.created_time = task.created_time;
    sample.completion_time = now_;
    sample.value = value;
    result_.ttft_samples.push_back(sample);

    SessionRt& s = session_of(task.session_id);
    s.ttft_values.push_back(value);
    s.context_len += task.l_incr;
    s.decoded_in_round = 0;
    WorkerState& d = decode_states_[static_cast<std::size_t>(decode_idx)];
    d.kv_bytes_used += task.l_incr * profile_.kv_bytes_per_token;

    const std::int64_t sid = task.session_id;
    auto& batch = d.decode_batch;
    batch.insert(std::lower_bound(batch.begin(), batch.end(), sid), sid);
    ++result_.counters.tasks_completed;
  }

  // ---- decode workers ----

  void enqueue_local(int d, const PrefillTask& task) {
    decode_states_[static_cast<std::size_t>(d)].prefill_queue.push_back(task);
    advance_decode(d);
  }

  void advance_decode(int d) {
    WorkerState& w = decode_states_[static_cast<std::size_t>(d)];
    DecodeExec& e = decode_exec_[static_cast<std::size_t>(d)];
    if (e.stepping || e.prefilling) {
      return;  // boundary reached when the in-flight event fires
    }
    if (!w.prefill_queue.empty()) {
      // Prefill preempts decoding until the queue drains.
      e.current = select_next(w.prefill_queue, w.theta);
      e.prefilling = true;
      const double duration =
          t_prefill(profile_, e.current.l_hist, e.current.l_incr, w.theta);
      w.busy_until = now_ + duration;
      Event ev;
      ev.time = w.busy_until;
      ev.kind = kPrefillDone;
      ev.worker = w.id;
      schedule(ev);
      return;
    }
    if (!w.decode_batch.empty()) {
      e.cohort.clear();
      for (std::int64_t sid : w.decode_batch) {
        e.cohort.push_back(id_to_index_.at(sid));
      }
      e.stepping = true;
      const double duration = t_decode(
          profile_, static_cast<TokenCount>(e.cohort.size()), w.theta);
      w.busy_until = now_ + duration;
      Event ev;
      ev.time = w.busy_until;
      ev.kind = kDecodeStep;
      ev.worker = w.id;
      schedule(ev);
    }
  }

  void on_decode_step(int d) {
    WorkerState& w = decode_states_[static_cast<std::size_t>(d)];
    DecodeExec& e = decode_exec_[static_cast<std::size_t>(d)];
    e.stepping = false;
    bool any_terminated = false;

    for (std::int64_t sidx : e.cohort) {
      SessionRt& s = sessions_[static_cast<std::size_t>(sidx)];
      const Round& round =
          s.spec->rounds[static_cast<std::size_t>(s.current_round - 1)];
      ++s.decoded_in_round;
      ++result_.counters.tokens_decoded;

      const int token_index = static_cast<int>(s.decoded_in_round);
      if (token_index >= 2) {
        const double gap = now_ - s.last_token_time;
        ItlSample sample;
        sample.session_id = s.spec->session_id;
        sample.round = s.current_round;
        sample.token_index = token_index;
        sample.completion_time = now_;
        sample.value = gap;
        result_.itl_samples.push_back(sample);
        w.itl_stat.add(now_, gap);
        s.itl_values.push_back(gap);
      }
      s.last_token_time = now_;
      s.context_len += 1;
      w.kv_bytes_used += profile_.kv_bytes_per_token;

      if (s.decoded_in_round == round.decode_len) {
        auto it = std::lower_bound(w.decode_batch.begin(),
                                   w.decode_batch.end(),
                                   s.spec->session_id);
        w.decode_batch.erase(it);
        if (s.current_round ==
            static_cast<int>(s.spec->rounds.size())) {
          terminate_session(sidx, d);
          any_terminated = true;
        } else {
          Event ev;
          ev.time = now_ + round.interaction_delay;
          ev.kind = kInteractionDone;
          ev.session = sidx;
          schedule(ev);
        }
      }
    }
    e.cohort.clear();
    if (any_terminated) {
      admit_waiting();
    }
    advance_decode(d);
  }

  void on_interaction_done(std::int64_t sidx) {
    SessionRt& s = sessions_[static_cast<std::size_t>(sidx)];
    ++s.current_round;
    start_round(sidx, now_);
  }

  void terminate_session(std::int64_t sidx, int d) {
    SessionRt& s = sessions_[static_cast<std::size_t>(sidx)];
    WorkerState& w = decode_states_[static_cast<std::size_t>(d)];
    w.kv_bytes_used -= s.context_len * profile_.kv_bytes_per_token;

    SessionOutcome out;
    out.session_id = s.spec->session_id;
    out.arrival_time = s.spec->arrival_time;
    out.completion_time = now_;
    out.rounds = static_cast<int>(s.spec->rounds.size());
    out.admission_wait = s.bind_time - s.spec->arrival_time;
    out.mean_itl = mean_of(s.itl_values);
    out.ttft_ok = all_within(s.ttft_values, trace_.slo.ttft_thres);
    out.itl_ok = s.itl_values.empty() || out.mean_itl <= trace_.slo.itl_thres;
    out.slo_ok = slo_verdict(s.ttft_values, s.itl_values, trace_.slo);
    result_.sessions.push_back(out);
  }

  SessionRt& session_of(std::int64_t session_id) {
    return sessions_[static_cast<std::size_t>(id_to_index_.at(session_id))];
  }

  Trace trace_;
  PerfProfile profile_;
  SchedulerParams params_;
  Coordinator coordinator_;

  std::vector<WorkerState> prefill_states_;
  std::vector<WorkerState> decode_states_;
  std::vector<PrefillExec> prefill_exec_;
  std::vector<DecodeExec> decode_exec_;
  std::vector<SessionRt> sessions_;
  std::unordered_map<std::int64_t, std::int64_t> id_to_index_;
  std::deque<std::int64_t> admission_queue_;

  std::priority_queue<Event, std::vector<Event>, EventAfter> events_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
  int round_robin_next_ = 0;

  SimResult result_;
};

}  // namespace

const char* to_string(RoutingMode mode) {
  switch (mode) {
    case RoutingMode::kAdaptive: return "adaptive";
    case RoutingMode::kAlwaysRemote: return "always-remote";
    case RoutingMode::kAlwaysLocal: return "always-local";
  }
  return "unknown";
}

RoutingMode routing_mode_from_string(const std::string& text) {
  if (text == "adaptive") return RoutingMode::kAdaptive;
  if (text == "always-remote") return RoutingMode::kAlwaysRemote;
  if (text == "always-local") return RoutingMode::kAlwaysLocal;
  throw ConfigError("routing: unknown mode '" + text +
                    "' (expected adaptive, always-remote, or always-local)");
}

void SchedulerParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("scheduler: alpha must be in (0, 1]");
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ConfigError("scheduler: beta must be in (0, 1]");
  }
  if (window < 1) {
    throw ConfigError("scheduler: window must be >= 1");
  }
  if (!(stat_window > 0.0)) {
    throw ConfigError("scheduler: stat_window must be > 0");
  }
}

bool slo_verdict(const std::vector<double>& ttft_values,
                 const std::vector<double>& itl_values, const SloSpec& slo) {
  const bool ttft_ok = all_within(ttft_values, slo.ttft_thres);
  const bool itl_ok =
      itl_values.empty() || mean_of(itl_values) <= slo.itl_thres;
  return ttft_ok && itl_ok;
}

SimResult run(const Trace& trace, const DeploymentPlan& plan,
              const PerfProfile& profile, const SchedulerParams& params,
              std::uint64_t seed) {
  Engine engine(trace, plan, profile, params, seed);
  return engine.run();
}

}  // namespace pdsim
