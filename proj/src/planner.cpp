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

#include "pdsim/planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "pdsim/errors.hpp"

namespace pdsim {

namespace {

constexpr const char* kPlanVersion = "plan_v1";
constexpr int kCoefficientSessions = 256;
constexpr std::int64_t kTopKEnumerationCap = 2000000;

double nearest_rank_p95(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  return values[rank - 1];
}

struct FlatTask {
  double arrival;
  TokenCount l_hist;
  TokenCount l_incr;
};

// Trace flattening for the single-replica phase sims: round r of a session
// becomes runnable after the preceding rounds' interaction delays. Service
// time spent in earlier rounds is not added to the offset, which biases the
// replica toward seeing slightly tighter arrivals than the full simulator
// would deliver.
std::vector<FlatTask> flatten_prefill_tasks(const Trace& trace) {
  std::vector<FlatTask> tasks;
  for (const SessionSpec& s : trace.sessions) {
    double offset = s.arrival_time;
    TokenCount hist = 0;
    for (const Round& r : s.rounds) {
      tasks.push_back({offset, hist, r.incr_input_len});
      hist += r.incr_input_len + r.decode_len;
      offset += r.interaction_delay;
    }
  }
  std::stable_sort(tasks.begin(), tasks.end(),
                   [](const FlatTask& a, const FlatTask& b) {
                     return a.arrival < b.arrival;
                   });
  return tasks;
}

}  // namespace

PhaseSimResult simulate_prefill_replica(const Trace& trace,
                                        const PerfProfile& profile,
                                        int degree) {
  const ParallelismStrategy theta{degree};
  const std::vector<FlatTask> tasks = flatten_prefill_tasks(trace);
  if (tasks.empty()) {
    throw ConfigError("planner: reference trace has no prefill tasks");
  }

  PhaseSimResult result;
  double total_service = 0.0;
  std::vector<double> latencies;
  latencies.reserve(tasks.size());
  double free_at = 0.0;
  for (const FlatTask& t : tasks) {
    const double service = t_prefill(profile, t.l_hist, t.l_incr, theta);
    total_service += service;
    const double start = std::max(t.arrival, free_at);
    free_at = start + service;
    latencies.push_back(free_at - t.arrival);
  }

  const double span = tasks.back().arrival - tasks.front().arrival;
  if (tasks.size() >= 2 && (span <= 0.0 || total_service / span >= 1.0)) {
    result.infeasible = true;
  }
  result.p95 = nearest_rank_p95(latencies);
  result.sample_count = static_cast<std::int64_t>(latencies.size());
  return result;
}

PhaseSimResult simulate_decode_replica(const Trace& trace,
                                       const PerfProfile& profile,
                                       int degree) {
  const ParallelismStrategy theta{degree};

  struct DecodeSession {
    const SessionSpec* spec;
    std::size_t round = 0;
    TokenCount remaining = 0;
    TokenCount emitted_in_round = 0;
    double last_token = 0.0;
  };

  std::vector<DecodeSession> all;
  TokenCount total_tokens = 0;
  for (const SessionSpec& s : trace.sessions) {
    DecodeSession d;
    d.spec = &s;
    d.remaining = s.rounds.front().decode_len;
    all.push_back(d);
    total_tokens += s.total_decode();
  }
  if (all.empty()) {
    throw ConfigError("planner: reference trace has no sessions");
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const DecodeSession& a, const DecodeSession& b) {
                     return a.spec->arrival_time < b.spec->arrival_time;
                   });

  PhaseSimResult result;
  const double span =
      all.back().spec->arrival_time - all.front().spec->arrival_time;
  const std::vector<AlphaBetaSegment>& segs =
      profile.decode_cost.at(degree).segments();
  const double beta_last = segs.back().beta;
  if (all.size() >= 2) {
    if (span <= 0.0) {
      result.infeasible = true;
    } else if (beta_last > 0.0 &&
               static_cast<double>(total_tokens) / span >=
                   0.98 / beta_last) {
      // Demand at or past the replica's asymptotic token throughput.
      result.infeasible = true;
    }
  }

  std::vector<double> itl;
  std::size_t next_arrival = 0;
  // (unblock_time, index into all); sorted ascending, consumed from front.
  std::vector<std::pair<double, std::size_t>> blocked;
  std::vector<std::size_t> active;
  double now = 0.0;

  auto admit_ready = [&](double t) {
    while (next_arrival < all.size() &&
           all[next_arrival].spec->arrival_time <= t) {
      active.push_back(next_arrival);
      ++next_arrival;
    }
    while (!blocked.empty() && blocked.front().first <= t) {
      active.push_back(blocked.front().second);
      blocked.erase(blocked.begin());
    }
  };

  while (next_arrival < all.size() || !blocked.empty() || !active.empty()) {
    if (active.empty()) {
      double wake = std::numeric_limits<double>::infinity();
      if (next_arrival < all.size()) {
        wake = all[next_arrival].spec->arrival_time;
      }
      if (!blocked.empty()) {
        wake = std::min(wake, blocked.front().first);
      }
      now = std::max(now, wake);
    }
    admit_ready(now);
    if (active.empty()) {
      continue;
    }

    const double step =
        t_decode(profile, static_cast<TokenCount>(active.size()), theta);
    now += step;
    std::vector<std::size_t> still_active;
    for (std::size_t idx : active) {
      DecodeSession& d = all[idx];
      --d.remaining;
      ++d.emitted_in_round;
      if (d.emitted_in_round >= 2) {
        itl.push_back(now - d.last_token);
      }
      d.last_token = now;
      if (d.remaining > 0) {
        still_active.push_back(idx);
        continue;
      }
      const Round& r = d.spec->rounds[d.round];
      if (d.round + 1 < d.spec->rounds.size()) {
        ++d.round;
        d.remaining = d.spec->rounds[d.round].decode_len;
        d.emitted_in_round = 0;
        auto pos = std::upper_bound(
            blocked.begin(), blocked.end(),
            std::make_pair(now + r.interaction_delay, idx));
        blocked.insert(pos, {now + r.interaction_delay, idx});
      }
    }
    active = std::move(still_active);
  }

  if (itl.empty()) {
    // Every round decodes a single token; the replica never observes a gap.
    throw ConfigError(
        "planner: reference trace produced no inter-token samples");
  }
  result.p95 = nearest_rank_p95(itl);
  result.sample_count = static_cast<std::int64_t>(itl.size());
  return result;
}

LatencyCoefficients estimate_coefficients(const TraceStats& stats, double rate,
                                          const PerfProfile& profile,
                                          const std::vector<int>& degrees,
                                          int total_gpus, std::uint64_t seed) {
  if (!(rate > 0.0)) {
    throw ConfigError("planner: arrival rate must be > 0");
  }
  if (total_gpus < 1) {
    throw ConfigError("planner: total_gpus must be >= 1");
  }
  if (degrees.empty()) {
    throw ConfigError("planner: degree set is empty");
  }
  std::vector<int> ts = degrees;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  for (int n : ts) {
    if (!profile.has_degree(n)) {
      throw ConfigError("planner: degree " + std::to_string(n) +
                        " not covered by profile");
    }
  }

  LatencyCoefficients coeffs;
  for (int n : ts) {
    const double share =
        rate * static_cast<double>(n) / static_cast<double>(total_gpus);
    const std::uint64_t degree_seed =
        seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(n);
    const Trace ref = gen_trace(stats, share, kCoefficientSessions,
                                degree_seed);

    const PhaseSimResult pre = simulate_prefill_replica(ref, profile, n);
    if (pre.infeasible) {
      coeffs.infeasible_pre.insert(n);
    } else {
      coeffs.tau_pre[n] = pre.p95;
    }
    const PhaseSimResult dec = simulate_decode_replica(ref, profile, n);
    if (dec.infeasible) {
      coeffs.infeasible_dec.insert(n);
    } else {
      coeffs.tau_dec[n] = dec.p95;
    }
  }

  std::ostringstream prov;
  prov << "rate=" << rate << " sessions=" << kCoefficientSessions
       << " gpus=" << total_gpus << " seed=" << seed << " degrees=[";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    prov << (i ? "," : "") << ts[i];
  }
  prov << "]";
  coeffs.provenance = prov.str();
  return coeffs;
}

int DeploymentPlan::prefill_replicas() const {
  int total = 0;
  for (const auto& [degree, count] : x) total += count;
  return total;
}

int DeploymentPlan::decode_replicas() const {
  int total = 0;
  for (const auto& [degree, count] : y) total += count;
  return total;
}

int DeploymentPlan::gpus() const {
  int total = 0;
  for (const auto& [degree, count] : x) total += degree * count;
  for (const auto& [degree, count] : y) total += degree * count;
  return total;
}

void DeploymentPlan::validate(const std::string& where, int total_gpus) const {
  for (const auto& [degree, count] : x) {
    if (degree < 1 || count < 1) {
      throw ConfigError(where + ": x entries need degree >= 1 and count >= 1");
    }
  }
  for (const auto& [degree, count] : y) {
    if (degree < 1 || count < 1) {
      throw ConfigError(where + ": y entries need degree >= 1 and count >= 1");
    }
  }
  if (gpus_used != gpus()) {
    throw ConfigError(where + ": gpus_used does not match replica totals");
  }
  if (total_gpus >= 0 && gpus() > total_gpus) {
    throw ConfigError(where + ": plan exceeds the GPU budget");
  }
}

bool operator==(const DeploymentPlan& a, const DeploymentPlan& b) {
  return a.x == b.x && a.y == b.y && a.objective_z == b.objective_z &&
         a.gpus_used == b.gpus_used && a.feasible == b.feasible;
}

namespace {

// Lexicographic comparison of count vectors over the ascending full degree
// list; absent degrees count as zero.
int compare_counts(const std::map<int, int>& a, const std::map<int, int>& b,
                   const std::vector<int>& degrees) {
  for (int n : degrees) {
    const auto ia = a.find(n);
    const auto ib = b.find(n);
    const int ca = ia == a.end() ? 0 : ia->second;
    const int cb = ib == b.end() ? 0 : ib->second;
    if (ca != cb) return ca < cb ? -1 : 1;
  }
  return 0;
}

// Full tie-break chain: smaller objective, then more replicas, then more
// GPUs used, then lexicographically smallest (x, y).
bool plan_ranks_before(const DeploymentPlan& a, const DeploymentPlan& b,
                       const std::vector<int>& degrees) {
  if (a.objective_z != b.objective_z) return a.objective_z < b.objective_z;
  const int ra = a.prefill_replicas() + a.decode_replicas();
  const int rb = b.prefill_replicas() + b.decode_replicas();
  if (ra != rb) return ra > rb;
  if (a.gpus_used != b.gpus_used) return a.gpus_used > b.gpus_used;
  const int cx = compare_counts(a.x, b.x, degrees);
  if (cx != 0) return cx < 0;
  return compare_counts(a.y, b.y, degrees) < 0;
}

// Unbounded-knapsack table: best[b] = максимум replica count using exactly
// b GPUs with the given degrees, -1 when b is not representable.
std::vector<int> replica_table(const std::vector<int>& degrees, int budget) {
  std::vector<int> best(static_cast<std::size_t>(budget) + 1, -1);
  best[0] = 0;
  for (int b = 1; b <= budget; ++b) {
    for (int n : degrees) {
      if (n <= b && best[static_cast<std::size_t>(b - n)] >= 0) {
        best[static_cast<std::size_t>(b)] =
            std::max(best[static_cast<std::size_t>(b)],
                     best[static_cast<std::size_t>(b - n)] + 1);
      }
    }
  }
  return best;
}

// exact[j][b][c]: degrees[j..] can spend exactly b GPUs on exactly c
// replicas. Recurrence: skip degree j, or take one more of it.
std::vector<std::vector<std::vector<char>>> exact_table(
    const std::vector<int>& degrees, int budget, int max_count) {
  const std::size_t nd = degrees.size();
  std::vector<std::vector<std::vector<char>>> exact(
      nd + 1, std::vector<std::vector<char>>(
                  static_cast<std::size_t>(budget) + 1,
                  std::vector<char>(static_cast<std::size_t>(max_count) + 1,
                                    0)));
  exact[nd][0][0] = 1;
  for (std::size_t j = nd; j-- > 0;) {
    for (int b = 0; b <= budget; ++b) {
      for (int c = 0; c <= max_count; ++c) {
        if (exact[j + 1][static_cast<std::size_t>(b)]
                 [static_cast<std::size_t>(c)]) {
          exact[j][static_cast<std::size_t>(b)][static_cast<std::size_t>(c)] =
              1;
        } else if (b >= degrees[j] && c >= 1 &&
                   exact[j][static_cast<std::size_t>(b - degrees[j])]
                        [static_cast<std::size_t>(c - 1)]) {
          exact[j][static_cast<std::size_t>(b)][static_cast<std::size_t>(c)] =
              1;
        }
      }
    }
  }
  return exact;
}

// Lexicographically smallest count vector hitting exactly (budget, count):
// greedily keeps each smaller degree's count as low as possible.
std::map<int, int> lex_min_counts(const std::vector<int>& degrees, int budget,
                                  int count) {
  const auto exact = exact_table(degrees, budget, count);
  std::map<int, int> result;
  std::size_t j = 0;
  int b = budget;
  int c = count;
  while (j < degrees.size()) {
    if (exact[j + 1][static_cast<std::size_t>(b)]
             [static_cast<std::size_t>(c)]) {
      ++j;
      continue;
    }
    ++result[degrees[j]];
    b -= degrees[j];
    c -= 1;
  }
  return result;
}

double plan_objective(const std::map<int, int>& x, const std::map<int, int>& y,
                      const LatencyCoefficients& coeffs) {
  double z = 0.0;
  for (const auto& [degree, count] : x) {
    z = std::max(z, coeffs.tau_pre.at(degree));
  }
  for (const auto& [degree, count] : y) {
    z = std::max(z, coeffs.tau_dec.at(degree));
  }
  return z;
}

std::vector<int> usable_degrees(const std::map<int, double>& tau,
                                const std::vector<int>& degrees) {
  std::vector<int> out;
  for (int n : degrees) {
    if (tau.count(n)) out.push_back(n);
  }
  return out;
}

void check_coefficients(const LatencyCoefficients& coeffs,
                        const std::vector<int>& degrees) {
  for (int n : degrees) {
    const bool pre_known =
        coeffs.tau_pre.count(n) || coeffs.infeasible_pre.count(n);
    const bool dec_known =
        coeffs.tau_dec.count(n) || coeffs.infeasible_dec.count(n);
    if (!pre_known || !dec_known) {
      throw ConfigError("planner: no coefficient for degree " +
                        std::to_string(n));
    }
    if (coeffs.tau_pre.count(n) && !(coeffs.tau_pre.at(n) > 0.0)) {
      throw ConfigError("planner: tau_pre must be > 0 for degree " +
                        std::to_string(n));
    }
    if (coeffs.tau_dec.count(n) && !(coeffs.tau_dec.at(n) > 0.0)) {
      throw ConfigError("planner: tau_dec must be > 0 for degree " +
                        std::to_string(n));
    }
  }
}

std::vector<int> sorted_unique(const std::vector<int>& degrees) {
  std::vector<int> ts = degrees;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  if (ts.empty() || ts.front() < 1) {
    throw ConfigError("planner: degrees must be >= 1");
  }
  return ts;
}

}  // namespace

DeploymentPlan solve(const LatencyCoefficients& coeffs, int total_gpus,
                     const std::vector<int>& degrees) {
  const std::vector<int> ts = sorted_unique(degrees);
  check_coefficients(coeffs, ts);
  if (total_gpus < 1) {
    throw ConfigError("planner: total_gpus must be >= 1");
  }

  DeploymentPlan infeasible;
  infeasible.feasible = false;

  const std::vector<int> pre_all = usable_degrees(coeffs.tau_pre, ts);
  const std::vector<int> dec_all = usable_degrees(coeffs.tau_dec, ts);
  if (pre_all.empty() || dec_all.empty()) {
    return infeasible;
  }

  // Candidate objectives are the coefficient values themselves: the optimum
  // equals the smallest tau admitting one replica of each phase within N.
  std::vector<double> candidates;
  for (int n : pre_all) candidates.push_back(coeffs.tau_pre.at(n));
  for (int n : dec_all) candidates.push_back(coeffs.tau_dec.at(n));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  std::vector<int> pre_admissible;
  std::vector<int> dec_admissible;
  double z_star = 0.0;
  bool found = false;
  for (double z : candidates) {
    pre_admissible.clear();
    dec_admissible.clear();
    for (int n : pre_all) {
      if (coeffs.tau_pre.at(n) <= z) pre_admissible.push_back(n);
    }
    for (int n : dec_all) {
      if (coeffs.tau_dec.at(n) <= z) dec_admissible.push_back(n);
    }
    if (!pre_admissible.empty() && !dec_admissible.empty() &&
        pre_admissible.front() + dec_admissible.front() <= total_gpus) {
      z_star = z;
      found = true;
      break;
    }
  }
  if (!found) {
    return infeasible;
  }

  const std::vector<int> fp = replica_table(pre_admissible, total_gpus);
  const std::vector<int> fd = replica_table(dec_admissible, total_gpus);

  int best_count = -1;
  int best_gpus = -1;
  for (int bp = 0; bp <= total_gpus; ++bp) {
    if (fp[static_cast<std::size_t>(bp)] < 1) continue;
    for (int bd = 0; bd + bp <= total_gpus; ++bd) {
      if (fd[static_cast<std::size_t>(bd)] < 1) continue;
      const int count = fp[static_cast<std::size_t>(bp)] +
                        fd[static_cast<std::size_t>(bd)];
      const int used = bp + bd;
      if (count > best_count ||
          (count == best_count && used > best_gpus)) {
        best_count = count;
        best_gpus = used;
      }
    }
  }

  DeploymentPlan best_plan;
  bool have_plan = false;
  for (int bp = 0; bp <= total_gpus; ++bp) {
    if (fp[static_cast<std::size_t>(bp)] < 1) continue;
    const int bd = best_gpus - bp;
    if (bd < 0 || bd > total_gpus || fd[static_cast<std::size_t>(bd)] < 1) {
      continue;
    }
    if (fp[static_cast<std::size_t>(bp)] + fd[static_cast<std::size_t>(bd)] !=
        best_count) {
      continue;
    }
    DeploymentPlan plan;
    plan.x = lex_min_counts(pre_admissible, bp,
                            fp[static_cast<std::size_t>(bp)]);
    plan.y = lex_min_counts(dec_admissible, bd,
                            fd[static_cast<std::size_t>(bd)]);
    plan.objective_z = z_star;
    plan.gpus_used = best_gpus;
    plan.feasible = true;
    if (!have_plan || plan_ranks_before(plan, best_plan, ts)) {
      best_plan = std::move(plan);
      have_plan = true;
    }
  }
  return best_plan;
}

namespace {

void enumerate_counts(const std::vector<int>& degrees, std::size_t j,
                      int budget, std::map<int, int>& current,
                      std::int64_t& visited,
                      const std::function<void(const std::map<int, int>&)>&
                          emit) {
  if (j == degrees.size()) {
    ++visited;
    if (visited > kTopKEnumerationCap) {
      throw ConfigError("top_k: instance too large for exhaustive ranking");
    }
    emit(current);
    return;
  }
  const int n = degrees[j];
  for (int c = 0; c * n <= budget; ++c) {
    if (c > 0) current[n] = c;
    enumerate_counts(degrees, j + 1, budget - c * n, current, visited, emit);
  }
  current.erase(n);
}

}  // namespace

std::vector<DeploymentPlan> top_k(const LatencyCoefficients& coeffs,
                                  int total_gpus,
                                  const std::vector<int>& degrees, int k) {
  if (k < 1) {
    throw ConfigError("top_k: k must be >= 1");
  }
  const std::vector<int> ts = sorted_unique(degrees);
  check_coefficients(coeffs, ts);
  if (total_gpus < 1) {
    throw ConfigError("planner: total_gpus must be >= 1");
  }
  const std::vector<int> pre = usable_degrees(coeffs.tau_pre, ts);
  const std::vector<int> dec = usable_degrees(coeffs.tau_dec, ts);
  if (pre.empty() || dec.empty()) {
    return {};
  }

  std::vector<DeploymentPlan> best;
  std::int64_t visited = 0;
  std::map<int, int> x;
  enumerate_counts(
      pre, 0, total_gpus, x, visited,
      [&](const std::map<int, int>& xs) {
        if (xs.empty()) return;
        int x_gpus = 0;
        for (const auto& [degree, count] : xs) x_gpus += degree * count;
        std::map<int, int> y;
        enumerate_counts(
            dec, 0, total_gpus - x_gpus, y, visited,
            [&](const std::map<int, int>& ys) {
              if (ys.empty()) return;
              DeploymentPlan plan;
              plan.x = xs;
              plan.y = ys;
              plan.objective_z = plan_objective(xs, ys, coeffs);
              plan.gpus_used = plan.gpus();
              plan.feasible = true;
              auto pos = std::lower_bound(
                  best.begin(), best.end(), plan,
                  [&](const DeploymentPlan& a, const DeploymentPlan& b) {
                    return plan_ranks_before(a, b, ts);
                  });
              if (pos - best.begin() <
                  static_cast<std::ptrdiff_t>(k)) {
                best.insert(pos, plan);
                if (best.size() > static_cast<std::size_t>(k)) {
                  best.pop_back();
                }
              }
            });
      });
  return best;
}

std::string format_plan(const DeploymentPlan& plan) {
  if (!plan.feasible) {
    return "infeasible";
  }
  auto phase = [](const std::map<int, int>& counts) {
    if (counts.empty()) {
      return std::string("<none>");
    }
    std::string out;
    bool first = true;
    for (const auto& [degree, count] : counts) {
      if (!first) out += " + ";
      out += "<TP=" + std::to_string(degree) +
             ", DP=" + std::to_string(count) + ">";
      first = false;
    }
    return out;
  };
  return "P:" + phase(plan.x) + ", D:" + phase(plan.y);
}

namespace {

using nlohmann::json;

json counts_to_json(const std::map<int, int>& counts) {
  json arr = json::array();
  for (const auto& [degree, count] : counts) {
    arr.push_back({{"degree", degree}, {"replicas", count}});
  }
  return arr;
}

std::map<int, int> counts_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) {
    throw ParseError(where, "expected an array");
  }
  std::map<int, int> counts;
  std::size_t idx = 0;
  for (const auto& entry : j) {
    const std::string anchor = where + "[" + std::to_string(idx) + "]";
    if (!entry.is_object() || !entry.contains("degree") ||
        !entry.contains("replicas")) {
      throw ParseError(anchor, "expected object with degree and replicas");
    }
    const int degree = entry.at("degree").get<int>();
    const int count = entry.at("replicas").get<int>();
    if (degree < 1) throw ParseError(anchor + ".degree", "must be >= 1");
    if (count < 1) throw ParseError(anchor + ".replicas", "must be >= 1");
    if (counts.count(degree)) {
      throw ParseError(anchor + ".degree", "duplicate degree");
    }
    counts[degree] = count;
    ++idx;
  }
  return counts;
}

}  // namespace

std::string plan_to_json(const DeploymentPlan& plan) {
  json j;
  j["version"] = kPlanVersion;
  j["feasible"] = plan.feasible;
  j["objective_z"] = plan.objective_z;
  j["gpus_used"] = plan.gpus_used;
  j["x"] = counts_to_json(plan.x);
  j["y"] = counts_to_json(plan.y);
  return j.dump(2) + "\n";
}

DeploymentPlan plan_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("plan", e.what());
  }
  if (!j.is_object()) {
    throw ParseError("plan", "expected a JSON object");
  }
  if (!j.contains("version") || j.at("version") != kPlanVersion) {
    throw ParseError("plan.version",
                     std::string("expected \"") + kPlanVersion + "\"");
  }
  for (const char* key : {"feasible", "objective_z", "gpus_used", "x", "y"}) {
    if (!j.contains(key)) {
      throw ParseError(std::string("plan.") + key, "missing field");
    }
  }
  DeploymentPlan plan;
  plan.feasible = j.at("feasible").get<bool>();
  plan.objective_z = j.at("objective_z").get<double>();
  plan.gpus_used = j.at("gpus_used").get<int>();
  plan.x = counts_from_json(j.at("x"), "plan.x");
  plan.y = counts_from_json(j.at("y"), "plan.y");
  try {
    plan.validate("plan");
  } catch (const ConfigError& e) {
    throw ParseError("plan", e.what());
  }
  return plan;
}

std::string coefficients_to_json(const LatencyCoefficients& coeffs) {
  json j;
  j["version"] = "coefficients_v1";
  j["provenance"] = coeffs.provenance;
  auto taus = [](const std::map<int, double>& tau) {
    json arr = json::array();
    for (const auto& [degree, seconds] : tau) {
      arr.push_back({{"degree", degree}, {"seconds", seconds}});
    }
    return arr;
  };
  j["tau_pre"] = taus(coeffs.tau_pre);
  j["tau_dec"] = taus(coeffs.tau_dec);
  j["infeasible_pre"] = coeffs.infeasible_pre;
  j["infeasible_dec"] = coeffs.infeasible_dec;
  return j.dump(2) + "\n";
}

}  // namespace pdsim
