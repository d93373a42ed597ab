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

#include "pdsim/perf_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pdsim/errors.hpp"

namespace pdsim {

namespace {

constexpr const char* kProfileVersion = "perf_profile_v1";

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

// Uniform in [lo, hi) from the top 53 bits of the generator; avoids
// implementation-defined std::uniform_real_distribution sequences.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace

double PiecewiseAlphaBeta::eval(double load) const {
  // A load exactly at a breakpoint belongs to the right segment, so the
  // segment index is the number of breakpoints <= load.
  const auto it =
      std::upper_bound(breakpoints_.begin(), breakpoints_.end(), load,
                       [](double x, double bp) { return x < bp; });
  const auto idx = static_cast<std::size_t>(it - breakpoints_.begin());
  const AlphaBetaSegment& s = segments_[idx];
  return s.alpha + s.beta * load;
}

void PiecewiseAlphaBeta::validate(const std::string& where) const {
  if (segments_.empty()) {
    throw ConfigError(where + ": at least one segment required");
  }
  if (segments_.size() != breakpoints_.size() + 1) {
    throw ConfigError(where + ": expected " +
                      std::to_string(breakpoints_.size() + 1) +
                      " segments for " + std::to_string(breakpoints_.size()) +
                      " breakpoints, got " + std::to_string(segments_.size()));
  }
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] < breakpoints_[i + 1])) {
      throw ConfigError(where + ".breakpoints[" + std::to_string(i + 1) +
                        "]: breakpoints must be strictly ascending");
    }
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const AlphaBetaSegment& s = segments_[i];
    const std::string anchor = where + ".segments[" + std::to_string(i) + "]";
    if (!(s.alpha >= 0.0) || !std::isfinite(s.alpha)) {
      throw ConfigError(anchor + ".alpha: must be finite and >= 0");
    }
    if (!(s.beta >= 0.0) || !std::isfinite(s.beta)) {
      throw ConfigError(anchor + ".beta: must be finite and >= 0");
    }
    if (s.alpha == 0.0 && s.beta == 0.0) {
      throw ConfigError(anchor + ": degenerate segment (alpha and beta both 0)");
    }
  }
  // Segments may jump at breakpoints but never downward: the right segment's
  // value at the breakpoint must be >= the left segment's limit there.
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    const double bp = breakpoints_[i];
    const double left = segments_[i].alpha + segments_[i].beta * bp;
    const double right = segments_[i + 1].alpha + segments_[i + 1].beta * bp;
    const double slack = 1e-9 * std::max(1.0, std::abs(left));
    if (right + slack < left) {
      throw ConfigError(where + ".breakpoints[" + std::to_string(i) +
                        "]: non-monotone transition (left " +
                        std::to_string(left) + " > right " +
                        std::to_string(right) + ")");
    }
  }
}

bool PerfProfile::has_degree(int degree) const {
  return std::find(degrees.begin(), degrees.end(), degree) != degrees.end();
}

void PerfProfile::validate() const {
  if (degrees.empty()) {
    throw ConfigError("degrees: the supported degree set is empty");
  }
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    if (!is_power_of_two(degrees[i])) {
      throw ConfigError("degrees[" + std::to_string(i) + "]: " +
                        std::to_string(degrees[i]) + " is not a power of 2");
    }
    if (i > 0 && degrees[i] <= degrees[i - 1]) {
      throw ConfigError("degrees: must be strictly ascending");
    }
  }
  if (kv_bytes_per_token <= 0) {
    throw ConfigError("kv_bytes_per_token: must be > 0");
  }
  if (gpu_memory_capacity <= 0) {
    throw ConfigError("gpu_memory_capacity: must be > 0");
  }
  if (!(history_weight >= 0.0) || !std::isfinite(history_weight)) {
    throw ConfigError("history_weight: must be finite and >= 0");
  }
  for (int d : degrees) {
    auto pit = prefill_cost.find(d);
    if (pit == prefill_cost.end()) {
      throw ConfigError("prefill_cost: missing entry for degree " +
                        std::to_string(d));
    }
    pit->second.validate("prefill_cost[degree=" + std::to_string(d) + "]");
    auto dit = decode_cost.find(d);
    if (dit == decode_cost.end()) {
      throw ConfigError("decode_cost: missing entry for degree " +
                        std::to_string(d));
    }
    dit->second.validate("decode_cost[degree=" + std::to_string(d) + "]");
  }
  for (int src : degrees) {
    for (int dst : degrees) {
      auto it = kv_cost.find({src, dst});
      if (it == kv_cost.end()) {
        throw ConfigError("kv_cost: missing entry for pair (" +
                          std::to_string(src) + ", " + std::to_string(dst) +
                          ")");
      }
      it->second.validate("kv_cost[src=" + std::to_string(src) +
                          ", dst=" + std::to_string(dst) + "]");
    }
  }
  if (prefill_cost.size() != degrees.size() ||
      decode_cost.size() != degrees.size() ||
      kv_cost.size() != degrees.size() * degrees.size()) {
    throw ConfigError("cost tables contain entries for unknown degrees");
  }
}

double t_prefill(const PerfProfile& profile, TokenCount l_hist,
                 TokenCount l_incr, ParallelismStrategy theta) {
  if (l_incr < 1) {
    throw DomainError("t_prefill: l_incr must be >= 1 (a prefill task has "
                      "non-empty input)");
  }
  if (l_hist < 0) {
    throw DomainError("t_prefill: l_hist must be >= 0");
  }
  auto it = profile.prefill_cost.find(theta.degree);
  if (it == profile.prefill_cost.end()) {
    throw DomainError("t_prefill: unknown degree " +
                      std::to_string(theta.degree));
  }
  const double load = static_cast<double>(l_incr) +
                      profile.history_weight * static_cast<double>(l_hist);
  return it->second.eval(load);
}

double t_decode(const PerfProfile& profile, int batch_size,
                ParallelismStrategy theta) {
  if (batch_size < 1) {
    throw DomainError("t_decode: batch_size must be >= 1");
  }
  auto it = profile.decode_cost.find(theta.degree);
  if (it == profile.decode_cost.end()) {
    throw DomainError("t_decode: unknown degree " +
                      std::to_string(theta.degree));
  }
  return it->second.eval(static_cast<double>(batch_size));
}

double t_kv(const PerfProfile& profile, TokenCount l_ctx,
            ParallelismStrategy src, ParallelismStrategy dst) {
  if (l_ctx < 0) {
    throw DomainError("t_kv: l_ctx must be >= 0");
  }
  auto it = profile.kv_cost.find({src.degree, dst.degree});
  if (it == profile.kv_cost.end()) {
    throw DomainError("t_kv: unknown degree pair (" +
                      std::to_string(src.degree) + ", " +
                      std::to_string(dst.degree) + ")");
  }
  if (l_ctx == 0) {
    return 0.0;  // nothing to transmit
  }
  return it->second.eval(static_cast<double>(l_ctx));
}

PerfProfile synth_profile(const SynthProfileSpec& spec, std::uint64_t seed) {
  if (spec.degrees.empty()) {
    throw ConfigError("synth_profile: degree set is empty");
  }
  std::mt19937_64 rng(seed);
  PerfProfile profile;
  profile.degrees = spec.degrees;
  std::sort(profile.degrees.begin(), profile.degrees.end());
  profile.kv_bytes_per_token = spec.kv_bytes_per_token;
  profile.gpu_memory_capacity = spec.gpu_memory_capacity;
  profile.history_weight = spec.history_weight;

  // One base curve per cost type; per-degree scaling by degree^-gamma keeps
  // higher degrees dominated (never more expensive at equal load).
  auto draw_curve = [&](double alpha_min, double alpha_max, double beta_min,
                        double beta_max, const std::vector<double>& bps) {
    const double alpha = uniform(rng, alpha_min, alpha_max);
    const double beta = uniform(rng, beta_min, beta_max);
    std::vector<AlphaBetaSegment> segs;
    double b = beta;
    segs.push_back({alpha, b});
    for (std::size_t i = 0; i < bps.size(); ++i) {
      b *= uniform(rng, spec.segment_growth_min, spec.segment_growth_max);
      segs.push_back({alpha, b});
    }
    return PiecewiseAlphaBeta(bps, segs);
  };
  auto scale_curve = [](const PiecewiseAlphaBeta& base, double factor) {
    std::vector<AlphaBetaSegment> segs;
    segs.reserve(base.segments().size());
    for (const AlphaBetaSegment& s : base.segments()) {
      segs.push_back({s.alpha * factor, s.beta * factor});
    }
    return PiecewiseAlphaBeta(base.breakpoints(), segs);
  };

  const PiecewiseAlphaBeta prefill_base =
      draw_curve(spec.prefill_alpha_min, spec.prefill_alpha_max,
                 spec.prefill_beta_min, spec.prefill_beta_max,
                 spec.prefill_breakpoints);
  const PiecewiseAlphaBeta decode_base =
      draw_curve(spec.decode_alpha_min, spec.decode_alpha_max,
                 spec.decode_beta_min, spec.decode_beta_max,
                 spec.decode_breakpoints);

  for (int d : profile.degrees) {
    const double factor =
        std::pow(static_cast<double>(d), -spec.scaling_exponent);
    profile.prefill_cost.emplace(d, scale_curve(prefill_base, factor));
    profile.decode_cost.emplace(d, scale_curve(decode_base, factor));
  }

  const double kv_beta = static_cast<double>(spec.kv_bytes_per_token) /
                         spec.kv_bandwidth_bytes_per_sec;
  for (int src : profile.degrees) {
    for (int dst : profile.degrees) {
      const double penalty = (src == dst) ? 1.0 : spec.kv_reshard_penalty;
      const double jitter = uniform(rng, 0.95, 1.05);
      PiecewiseAlphaBeta curve({}, {{spec.kv_latency_seconds * penalty,
                                     kv_beta * penalty * jitter}});
      profile.kv_cost.emplace(std::make_pair(src, dst), std::move(curve));
    }
  }

  profile.validate();
  return profile;
}

namespace {

using nlohmann::json;

json curve_to_json(const PiecewiseAlphaBeta& curve) {
  json j;
  j["breakpoints"] = curve.breakpoints();
  json segs = json::array();
  for (const AlphaBetaSegment& s : curve.segments()) {
    segs.push_back({{"alpha", s.alpha}, {"beta", s.beta}});
  }
  j["segments"] = segs;
  return j;
}

PiecewiseAlphaBeta curve_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("breakpoints") || !j.contains("segments")) {
    throw ParseError(where, "expected object with breakpoints and segments");
  }
  std::vector<double> bps;
  for (const auto& v : j.at("breakpoints")) {
    if (!v.is_number()) {
      throw ParseError(where + ".breakpoints", "expected numbers");
    }
    bps.push_back(v.get<double>());
  }
  std::vector<AlphaBetaSegment> segs;
  std::size_t idx = 0;
  for (const auto& v : j.at("segments")) {
    const std::string anchor = where + ".segments[" + std::to_string(idx) + "]";
    if (!v.is_object() || !v.contains("alpha") || !v.contains("beta")) {
      throw ParseError(anchor, "expected object with alpha and beta");
    }
    segs.push_back({v.at("alpha").get<double>(), v.at("beta").get<double>()});
    ++idx;
  }
  return PiecewiseAlphaBeta(std::move(bps), std::move(segs));
}

}  // namespace

std::string save_profile(const PerfProfile& profile) {
  json j;
  j["version"] = kProfileVersion;
  j["degrees"] = profile.degrees;
  j["kv_bytes_per_token"] = profile.kv_bytes_per_token;
  j["gpu_memory_capacity"] = profile.gpu_memory_capacity;
  j["history_weight"] = profile.history_weight;

  json prefill = json::array();
  for (int d : profile.degrees) {
    json entry = curve_to_json(profile.prefill_cost.at(d));
    entry["degree"] = d;
    prefill.push_back(entry);
  }
  j["prefill_cost"] = prefill;

  json decode = json::array();
  for (int d : profile.degrees) {
    json entry = curve_to_json(profile.decode_cost.at(d));
    entry["degree"] = d;
    decode.push_back(entry);
  }
  j["decode_cost"] = decode;

  json kv = json::array();
  for (int src : profile.degrees) {
    for (int dst : profile.degrees) {
      json entry = curve_to_json(profile.kv_cost.at({src, dst}));
      entry["src"] = src;
      entry["dst"] = dst;
      kv.push_back(entry);
    }
  }
  j["kv_cost"] = kv;

  return j.dump(2) + "\n";
}

PerfProfile load_profile(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("document", e.what());
  }
  if (!j.is_object()) {
    throw ParseError("document", "expected a JSON object");
  }
  if (!j.contains("version") || !j.at("version").is_string()) {
    throw ParseError("version", "missing version tag");
  }
  const std::string version = j.at("version").get<std::string>();
  if (version != kProfileVersion) {
    throw ParseError("version", "unknown version '" + version + "' (expected " +
                                    std::string(kProfileVersion) + ")");
  }

  PerfProfile profile;
  try {
    profile.degrees = j.at("degrees").get<std::vector<int>>();
    profile.kv_bytes_per_token = j.at("kv_bytes_per_token").get<std::int64_t>();
    profile.gpu_memory_capacity =
        j.at("gpu_memory_capacity").get<std::int64_t>();
    profile.history_weight = j.at("history_weight").get<double>();
  } catch (const json::exception& e) {
    throw ParseError("document", e.what());
  }

  auto load_table = [&](const char* key, std::map<int, PiecewiseAlphaBeta>* out) {
    if (!j.contains(key) || !j.at(key).is_array()) {
      throw ParseError(key, "expected an array of per-degree curves");
    }
    std::size_t idx = 0;
    for (const auto& entry : j.at(key)) {
      const std::string where =
          std::string(key) + "[" + std::to_string(idx) + "]";
      if (!entry.contains("degree")) {
        throw ParseError(where, "missing degree");
      }
      const int degree = entry.at("degree").get<int>();
      auto [it, inserted] =
          out->emplace(degree, curve_from_json(entry, where));
      if (!inserted) {
        throw ParseError(where,
                         "duplicate degree " + std::to_string(degree));
      }
      ++idx;
    }
  };
  load_table("prefill_cost", &profile.prefill_cost);
  load_table("decode_cost", &profile.decode_cost);

  if (!j.contains("kv_cost") || !j.at("kv_cost").is_array()) {
    throw ParseError("kv_cost", "expected an array of per-pair curves");
  }
  std::size_t idx = 0;
  for (const auto& entry : j.at("kv_cost")) {
    const std::string where = "kv_cost[" + std::to_string(idx) + "]";
    if (!entry.contains("src") || !entry.contains("dst")) {
      throw ParseError(where, "missing src/dst degrees");
    }
    const int src = entry.at("src").get<int>();
    const int dst = entry.at("dst").get<int>();
    auto [it, inserted] = profile.kv_cost.emplace(std::make_pair(src, dst),
                                                  curve_from_json(entry, where));
    if (!inserted) {
      throw ParseError(where, "duplicate pair (" + std::to_string(src) + ", " +
                                  std::to_string(dst) + ")");
    }
    ++idx;
  }

  try {
    profile.validate();
  } catch (const ConfigError& e) {
    throw ParseError("validation", e.what());
  }
  return profile;
}

}  // namespace pdsim
