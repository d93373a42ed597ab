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

#include "pdsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "json.hpp"
#include "pdsim/errors.hpp"

namespace pdsim {

namespace {

constexpr const char* kTraceVersion = "trace_v1";

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF exponential with the given rate.
double exponential(std::mt19937_64& rng, double rate) {
  const double u = uniform01(rng);  // in [0, 1)
  return -std::log1p(-u) / rate;
}

// Box-Muller standard normal; consumes two uniforms.
double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // in (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Log-normal with the given mean and coefficient of variation. cv = 0
// degenerates to the constant mean.
double lognormal_mean_cv(std::mt19937_64& rng, double mean, double cv) {
  if (cv <= 0.0) {
    return mean;
  }
  const double sigma2 = std::log1p(cv * cv);
  const double mu = std::log(mean) - 0.5 * sigma2;
  return std::exp(mu + std::sqrt(sigma2) * standard_normal(rng));
}

// Shifted geometric round count (min 1) with the given mean.
std::int64_t draw_round_count(std::mt19937_64& rng, double mean_rounds,
                              bool fixed) {
  if (fixed || mean_rounds <= 1.0) {
    return std::max<std::int64_t>(1, std::llround(mean_rounds));
  }
  const double p = 1.0 / mean_rounds;
  const double u = uniform01(rng);
  const double failures = std::floor(std::log1p(-u) / std::log1p(-p));
  return 1 + static_cast<std::int64_t>(failures);
}

TokenCount positive_tokens(double x) {
  return std::max<TokenCount>(1, std::llround(x));
}

}  // namespace

TokenCount SessionSpec::total_prefill() const {
  TokenCount total = 0;
  for (const Round& r : rounds) total += r.incr_input_len;
  return total;
}

TokenCount SessionSpec::total_decode() const {
  TokenCount total = 0;
  for (const Round& r : rounds) total += r.decode_len;
  return total;
}

void Trace::validate() const {
  if (!(slo.ttft_thres > 0.0) || !(slo.itl_thres > 0.0)) {
    throw ConfigError("trace: slo thresholds must be > 0");
  }
  std::set<std::int64_t> seen_ids;
  double prev_arrival = 0.0;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const SessionSpec& s = sessions[i];
    const std::string where =
        "session[" + std::to_string(i) + "] (id " +
        std::to_string(s.session_id) + ")";
    if (!seen_ids.insert(s.session_id).second) {
      throw ConfigError("trace: " + where + ": duplicate session_id");
    }
    if (s.arrival_time < 0.0) {
      throw ConfigError("trace: " + where + ": arrival_time must be >= 0");
    }
    if (i > 0 && s.arrival_time < prev_arrival) {
      throw ConfigError("trace: " + where +
                        ": sessions must be sorted by arrival_time");
    }
    prev_arrival = s.arrival_time;
    if (s.rounds.empty()) {
      throw ConfigError("trace: " + where + ": rounds must be non-empty");
    }
    for (std::size_t r = 0; r < s.rounds.size(); ++r) {
      const Round& round = s.rounds[r];
      const std::string ranchor = where + ".rounds[" + std::to_string(r) + "]";
      if (round.incr_input_len < 1) {
        throw ConfigError("trace: " + ranchor + ": incr_input_len must be >= 1");
      }
      if (round.decode_len < 1) {
        throw ConfigError("trace: " + ranchor + ": decode_len must be >= 1");
      }
      if (round.interaction_delay < 0.0) {
        throw ConfigError("trace: " + ranchor +
                          ": interaction_delay must be >= 0");
      }
      if (r + 1 == s.rounds.size() && round.interaction_delay != 0.0) {
        throw ConfigError("trace: " + ranchor +
                          ": final round must have interaction_delay 0");
      }
    }
  }
}

TraceStats preset_stats(const std::string& name) {
  TraceStats stats;
  stats.name = name;
  if (name == "toolbench") {
    stats.mean_rounds = 3.96;
    stats.fixed_rounds = false;
    stats.mean_prefill_len = 703.79;
    stats.mean_decode_len = 50.39;
    stats.slo = {1.0, 0.05};
  } else if (name == "gaia") {
    stats.mean_rounds = 11.32;
    stats.fixed_rounds = false;
    stats.mean_prefill_len = 6161.02;
    stats.mean_decode_len = 528.76;
    stats.slo = {2.5, 0.06};
  } else if (name == "hotpotqa") {
    stats.mean_rounds = 3.0;
    stats.fixed_rounds = true;
    stats.mean_prefill_len = 1569.8;
    stats.mean_decode_len = 80.03;
    stats.slo = {1.0, 0.05};
  } else if (name == "dureader") {
    stats.mean_rounds = 3.0;
    stats.fixed_rounds = true;
    stats.mean_prefill_len = 3081.23;
    stats.mean_decode_len = 150.10;
    stats.slo = {1.5, 0.05};
  } else {
    throw ConfigError("unknown trace preset '" + name +
                      "' (expected toolbench|gaia|hotpotqa|dureader)");
  }
  return stats;
}

Trace gen_trace(const TraceStats& stats, double arrival_rate, int num_sessions,
                std::uint64_t seed) {
  if (!(arrival_rate > 0.0)) {
    throw DomainError("gen_trace: arrival_rate must be > 0");
  }
  if (num_sessions < 1) {
    throw DomainError("gen_trace: num_sessions must be >= 1");
  }
  if (!(stats.mean_rounds >= 1.0) || !(stats.mean_prefill_len >= 1.0) ||
      !(stats.mean_decode_len >= 1.0)) {
    throw DomainError("gen_trace: stats means must be >= 1");
  }

  std::mt19937_64 rng(seed);
  Trace trace;
  trace.name = stats.name;
  trace.slo = stats.slo;
  trace.sessions.reserve(static_cast<std::size_t>(num_sessions));

  double clock = 0.0;
  for (int i = 0; i < num_sessions; ++i) {
    clock += exponential(rng, arrival_rate);
    SessionSpec session;
    session.session_id = i;
    session.arrival_time = clock;

    const std::int64_t n_rounds =
        draw_round_count(rng, stats.mean_rounds, stats.fixed_rounds);
    const double total_prefill =
        lognormal_mean_cv(rng, stats.mean_prefill_len, stats.length_cv);

    session.rounds.resize(static_cast<std::size_t>(n_rounds));
    if (n_rounds == 1) {
      session.rounds[0].incr_input_len = positive_tokens(total_prefill);
    } else {
      const double first = stats.first_round_fraction * total_prefill;
      const double rest =
          (total_prefill - first) / static_cast<double>(n_rounds - 1);
      session.rounds[0].incr_input_len = positive_tokens(first);
      for (std::int64_t r = 1; r < n_rounds; ++r) {
        session.rounds[static_cast<std::size_t>(r)].incr_input_len =
            positive_tokens(rest);
      }
    }
    for (std::int64_t r = 0; r < n_rounds; ++r) {
      session.rounds[static_cast<std::size_t>(r)].decode_len = positive_tokens(
          lognormal_mean_cv(rng, stats.mean_decode_len, stats.length_cv));
    }
    for (std::int64_t r = 0; r + 1 < n_rounds; ++r) {
      session.rounds[static_cast<std::size_t>(r)].interaction_delay =
          stats.mean_interaction_delay > 0.0
              ? exponential(rng, 1.0 / stats.mean_interaction_delay)
              : 0.0;
    }
    trace.sessions.push_back(std::move(session));
  }

  trace.validate();
  return trace;
}

namespace {

using nlohmann::json;

}  // namespace

std::string save_trace(const Trace& trace) {
  json j;
  j["version"] = kTraceVersion;
  j["name"] = trace.name;
  j["slo"] = {{"ttft_thres", trace.slo.ttft_thres},
              {"itl_thres", trace.slo.itl_thres}};
  json sessions = json::array();
  for (const SessionSpec& s : trace.sessions) {
    json rounds = json::array();
    for (const Round& r : s.rounds) {
      rounds.push_back({{"incr_input_len", r.incr_input_len},
                        {"decode_len", r.decode_len},
                        {"interaction_delay", r.interaction_delay}});
    }
    sessions.push_back({{"session_id", s.session_id},
                        {"arrival_time", s.arrival_time},
                        {"rounds", rounds}});
  }
  j["sessions"] = sessions;
  return j.dump(2) + "\n";
}

Trace load_trace(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("document", e.what());
  }
  if (!j.is_object() || !j.contains("version") ||
      !j.at("version").is_string()) {
    throw ParseError("version", "missing version tag");
  }
  const std::string version = j.at("version").get<std::string>();
  if (version != kTraceVersion) {
    throw ParseError("version", "unknown version '" + version + "' (expected " +
                                    std::string(kTraceVersion) + ")");
  }

  Trace trace;
  try {
    trace.name = j.at("name").get<std::string>();
    trace.slo.ttft_thres = j.at("slo").at("ttft_thres").get<double>();
    trace.slo.itl_thres = j.at("slo").at("itl_thres").get<double>();
    std::size_t i = 0;
    for (const auto& js : j.at("sessions")) {
      SessionSpec s;
      s.session_id = js.at("session_id").get<std::int64_t>();
      s.arrival_time = js.at("arrival_time").get<double>();
      for (const auto& jr : js.at("rounds")) {
        Round r;
        r.incr_input_len = jr.at("incr_input_len").get<TokenCount>();
        r.decode_len = jr.at("decode_len").get<TokenCount>();
        r.interaction_delay = jr.at("interaction_delay").get<double>();
        s.rounds.push_back(r);
      }
      trace.sessions.push_back(std::move(s));
      ++i;
    }
  } catch (const json::exception& e) {
    throw ParseError("document", e.what());
  }

  try {
    trace.validate();
  } catch (const ConfigError& e) {
    throw ParseError("validate", e.what());
  }
  return trace;
}

}  // namespace pdsim
