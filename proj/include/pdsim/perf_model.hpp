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
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace pdsim {

using TokenCount = std::int64_t;

// Number of GPUs one worker replica spans. Members of the configured degree
// set are powers of 2.
struct ParallelismStrategy {
  int degree = 1;

  friend auto operator<=>(const ParallelismStrategy&,
                          const ParallelismStrategy&) = default;
};

struct AlphaBetaSegment {
  double alpha = 0.0;  // seconds
  double beta = 0.0;   // seconds per unit load

  friend bool operator==(const AlphaBetaSegment&,
                         const AlphaBetaSegment&) = default;
};

// Piecewise affine cost curve. Segment i covers loads in [breakpoints[i-1],
// breakpoints[i]); a load exactly at a breakpoint belongs to the right
// (higher) segment. segments.size() == breakpoints.size() + 1.
class PiecewiseAlphaBeta {
 public:
  PiecewiseAlphaBeta() = default;
  PiecewiseAlphaBeta(std::vector<double> breakpoints,
                     std::vector<AlphaBetaSegment> segments)
      : breakpoints_(std::move(breakpoints)), segments_(std::move(segments)) {}

  // alpha_s + beta_s * load for the segment containing `load`.
  double eval(double load) const;

  // Throws ConfigError when structure or monotonicity constraints are
  // violated. `where` anchors the error message.
  void validate(const std::string& where) const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<AlphaBetaSegment>& segments() const { return segments_; }

  friend bool operator==(const PiecewiseAlphaBeta&,
                         const PiecewiseAlphaBeta&) = default;

 private:
  std::vector<double> breakpoints_;
  std::vector<AlphaBetaSegment> segments_;
};

// Profiled cost model for a cluster: prefill, decode and KV-transfer cost
// curves per parallelism degree, plus memory parameters. Immutable after
// construction/loading; safe to share across concurrent readers.
struct PerfProfile {
  std::vector<int> degrees;  // ascending, powers of 2
  std::map<int, PiecewiseAlphaBeta> prefill_cost;  // over effective load
  std::map<int, PiecewiseAlphaBeta> decode_cost;   // over batch size
  std::map<std::pair<int, int>, PiecewiseAlphaBeta> kv_cost;  // over l_ctx
  std::int64_t kv_bytes_per_token = 0;
  std::int64_t gpu_memory_capacity = 0;  // bytes per GPU
  // Weight of history tokens in the effective prefill load:
  //   load = l_incr + history_weight * l_hist.
  double history_weight = 0.1;

  bool has_degree(int degree) const;
  void validate() const;  // throws ConfigError

  friend bool operator==(const PerfProfile&, const PerfProfile&) = default;
};

// Per-step prefill time for (history, incremental) lengths under strategy
// theta. l_incr must be >= 1; a prefill task has non-empty input.
double t_prefill(const PerfProfile& profile, TokenCount l_hist,
                 TokenCount l_incr, ParallelismStrategy theta);

// Per-step decode time for a whole batch of the given size.
double t_decode(const PerfProfile& profile, int batch_size,
                ParallelismStrategy theta);

// KV transfer time for l_ctx tokens from src to dst. Exactly 0 when
// l_ctx == 0.
double t_kv(const PerfProfile& profile, TokenCount l_ctx,
            ParallelismStrategy src, ParallelismStrategy dst);

// Parameters for synthetic profile generation. Base alpha/beta values are
// drawn per curve from the given ranges; per-degree cost scales by
// degree^-scaling_exponent so a higher degree never costs more at equal load.
struct SynthProfileSpec {
  std::vector<int> degrees = {1, 2, 4, 8};

  double prefill_alpha_min = 0.008;
  double prefill_alpha_max = 0.015;
  double prefill_beta_min = 1.5e-5;  // s/token at degree 1
  double prefill_beta_max = 3.0e-5;
  std::vector<double> prefill_breakpoints = {2048.0, 8192.0};

  double decode_alpha_min = 0.004;
  double decode_alpha_max = 0.008;
  double decode_beta_min = 3.0e-4;  // s/sequence at degree 1
  double decode_beta_max = 6.0e-4;
  std::vector<double> decode_breakpoints = {64.0};

  // Per-segment beta multiplier range beyond each breakpoint.
  double segment_growth_min = 1.05;
  double segment_growth_max = 1.30;

  double scaling_exponent = 0.7;  // cost ~ degree^-gamma

  double kv_bandwidth_bytes_per_sec = 2.0e10;
  double kv_latency_seconds = 0.002;  // per-transfer fixed term
  double kv_reshard_penalty = 1.25;   // applied when src degree != dst degree

  std::int64_t kv_bytes_per_token = 163840;
  std::int64_t gpu_memory_capacity = 96LL * 1000 * 1000 * 1000;
  double history_weight = 0.1;
};

// Deterministic per seed. The produced profile passes PerfProfile::validate().
PerfProfile synth_profile(const SynthProfileSpec& spec, std::uint64_t seed);

// perf_profile_v1 document format. save_profile emits a canonical form:
// save(load(save(p))) is byte-identical to save(p).
std::string save_profile(const PerfProfile& profile);
PerfProfile load_profile(const std::string& text);  // throws ParseError

}  // namespace pdsim
