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

// Aggregation of simulation output into reports, plus the raw-sample CSV
// formats. Doubles are written in shortest round-trip form, so a report
// rebuilt from exported CSVs is bit-identical to one built in process.

#ifndef PDSIM_METRICS_HPP_
#define PDSIM_METRICS_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pdsim/sim_engine.hpp"

namespace pdsim {

struct MetricStat {
  double mean = 0.0;
  double p95 = 0.0;
  std::int64_t count = 0;
};

struct Report {
  std::string trace_name;
  bool empty = false;  // no sessions and no samples
  std::int64_t sessions_total = 0;
  std::int64_t sessions_completed = 0;
  double slo_attainment = 0.0;   // both components, completed sessions only
  double ttft_attainment = 0.0;  // component verdicts reported separately
  double itl_attainment = 0.0;
  MetricStat ttft_initial;
  MetricStat ttft_incremental;
  MetricStat itl;
  double e2e_mean = 0.0;
  double local_fraction = 0.0;  // prefill tasks served on the bound worker
};

// Nearest-rank percentile: index ceil(q*n) on the 1-based sorted list.
// Empty input yields 0.
double percentile_nearest_rank(std::vector<double> values, double q);

Report build_report(const SimResult& result);

// Same aggregation from raw sample lists, used by the CSV rebuild path.
Report build_report_from_samples(const std::string& trace_name,
                                 std::int64_t sessions_total,
                                 const std::vector<TtftSample>& ttft,
                                 const std::vector<ItlSample>& itl,
                                 const std::vector<SessionOutcome>& sessions);

std::string format_report(const Report& report);
std::string report_to_json(const Report& report);

// Aligned text table and CSV across named configurations. Mismatched trace
// names are annotated with a warning line rather than rejected.
std::string comparison_table(
    const std::vector<std::pair<std::string, Report>>& reports);
std::string comparison_csv(
    const std::vector<std::pair<std::string, Report>>& reports);

// Raw-sample CSV serialization. Parsers validate the header and every field,
// throwing ParseError anchored to the offending line.
std::string ttft_csv(const std::vector<TtftSample>& samples);
std::vector<TtftSample> parse_ttft_csv(const std::string& text);
std::string itl_csv(const std::vector<ItlSample>& samples);
std::vector<ItlSample> parse_itl_csv(const std::string& text);
std::string sessions_csv(const std::vector<SessionOutcome>& sessions);
std::vector<SessionOutcome> parse_sessions_csv(const std::string& text);
std::string decisions_csv(const std::vector<DecisionRecord>& decisions);

}  // namespace pdsim

#endif  // PDSIM_METRICS_HPP_
