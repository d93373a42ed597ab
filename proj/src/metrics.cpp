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

#include "pdsim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "pdsim/errors.hpp"

namespace pdsim {

namespace {

std::string fmt_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& field, const std::string& where) {
  double value = 0.0;
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError(where, "expected a number, got '" + field + "'");
  }
  return value;
}

std::int64_t parse_int(const std::string& field, const std::string& where) {
  std::int64_t value = 0;
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError(where, "expected an integer, got '" + field + "'");
  }
  return value;
}

bool parse_flag(const std::string& field, const std::string& where) {
  if (field == "0") return false;
  if (field == "1") return true;
  throw ParseError(where, "expected 0 or 1, got '" + field + "'");
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

// Splits into lines, validates the header, and hands each data row to the
// callback as fields.
void parse_csv(const std::string& text, const std::string& name,
               const std::string& header, std::size_t field_count,
               const std::function<void(const std::vector<std::string>&,
                                        const std::string&)>& on_row) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(name, "empty file");
  }
  if (line != header) {
    throw ParseError(name + " line 1", "unexpected header '" + line + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = name + " line " + std::to_string(lineno);
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != field_count) {
      throw ParseError(where, "expected " + std::to_string(field_count) +
                                  " fields, got " +
                                  std::to_string(fields.size()));
    }
    on_row(fields, where);
  }
}

double mean_in_order(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

MetricStat stat_of(const std::vector<double>& values) {
  MetricStat s;
  s.count = static_cast<std::int64_t>(values.size());
  s.mean = mean_in_order(values);
  s.p95 = percentile_nearest_rank(values, 0.95);
  return s;
}

}  // namespace

double percentile_nearest_rank(std::vector<double> values, double q) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw DomainError("percentile: q must be in (0, 1]");
  }
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t rank =
      static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  return values[rank - 1];
}

Report build_report_from_samples(const std::string& trace_name,
                                 std::int64_t sessions_total,
                                 const std::vector<TtftSample>& ttft,
                                 const std::vector<ItlSample>& itl,
                                 const std::vector<SessionOutcome>& sessions) {
  Report r;
  r.trace_name = trace_name;
  r.sessions_total = sessions_total;
  r.sessions_completed = static_cast<std::int64_t>(sessions.size());
  if (sessions.empty() && ttft.empty() && itl.empty()) {
    r.empty = true;
    return r;
  }

  std::vector<double> initial;
  std::vector<double> incremental;
  std::int64_t local = 0;
  for (const TtftSample& s : ttft) {
    (s.kind == TaskKind::kInitial ? initial : incremental).push_back(s.value);
    if (s.local) ++local;
  }
  r.ttft_initial = stat_of(initial);
  r.ttft_incremental = stat_of(incremental);
  if (!ttft.empty()) {
    r.local_fraction =
        static_cast<double>(local) / static_cast<double>(ttft.size());
  }

  std::vector<double> gaps;
  gaps.reserve(itl.size());
  for (const ItlSample& s : itl) gaps.push_back(s.value);
  r.itl = stat_of(gaps);

  if (!sessions.empty()) {
    std::int64_t slo = 0;
    std::int64_t ttft_ok = 0;
    std::int64_t itl_ok = 0;
    std::vector<double> e2e;
    e2e.reserve(sessions.size());
    for (const SessionOutcome& s : sessions) {
      if (s.slo_ok) ++slo;
      if (s.ttft_ok) ++ttft_ok;
      if (s.itl_ok) ++itl_ok;
      e2e.push_back(s.completion_time - s.arrival_time);
    }
    const double denom = static_cast<double>(sessions.size());
    r.slo_attainment = static_cast<double>(slo) / denom;
    r.ttft_attainment = static_cast<double>(ttft_ok) / denom;
    r.itl_attainment = static_cast<double>(itl_ok) / denom;
    r.e2e_mean = mean_in_order(e2e);
  }
  return r;
}

Report build_report(const SimResult& result) {
  return build_report_from_samples(result.trace_name, result.total_sessions,
                                   result.ttft_samples, result.itl_samples,
                                   result.sessions);
}

std::string format_report(const Report& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "trace:             " << r.trace_name << "\n";
  if (r.empty) {
    out << "(empty result)\n";
    return out.str();
  }
  out << "sessions:          " << r.sessions_completed << "/"
      << r.sessions_total << " completed\n";
  out << "slo_attainment:    " << r.slo_attainment << "  (ttft "
      << r.ttft_attainment << ", itl " << r.itl_attainment << ")\n";
  auto stat_line = [&](const char* label, const MetricStat& s) {
    out << label << "mean " << s.mean << "s  p95 " << s.p95 << "s  (n="
        << s.count << ")\n";
  };
  stat_line("ttft_initial:      ", r.ttft_initial);
  stat_line("ttft_incremental:  ", r.ttft_incremental);
  stat_line("itl:               ", r.itl);
  out << "e2e_mean:          " << r.e2e_mean << "s\n";
  out << "local_fraction:    " << r.local_fraction << "\n";
  return out.str();
}

std::string report_to_json(const Report& r) {
  nlohmann::json j;
  j["version"] = "report_v1";
  j["trace_name"] = r.trace_name;
  j["empty"] = r.empty;
  j["sessions_total"] = r.sessions_total;
  j["sessions_completed"] = r.sessions_completed;
  j["slo_attainment"] = r.slo_attainment;
  j["ttft_attainment"] = r.ttft_attainment;
  j["itl_attainment"] = r.itl_attainment;
  auto stat = [](const MetricStat& s) {
    return nlohmann::json{{"mean", s.mean}, {"p95", s.p95},
                          {"count", s.count}};
  };
  j["ttft_initial"] = stat(r.ttft_initial);
  j["ttft_incremental"] = stat(r.ttft_incremental);
  j["itl"] = stat(r.itl);
  j["e2e_mean"] = r.e2e_mean;
  j["local_fraction"] = r.local_fraction;
  return j.dump(2) + "\n";
}

namespace {

struct ComparisonRow {
  const char* label;
  std::function<std::string(const Report&)> cell;
};

std::vector<ComparisonRow> comparison_rows() {
  auto fixed4 = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  return {
      {"trace", [](const Report& r) { return r.trace_name; }},
      {"slo_attainment",
       [fixed4](const Report& r) { return fixed4(r.slo_attainment); }},
      {"ttft_attainment",
       [fixed4](const Report& r) { return fixed4(r.ttft_attainment); }},
      {"itl_attainment",
       [fixed4](const Report& r) { return fixed4(r.itl_attainment); }},
      {"ttft_initial_mean",
       [fixed4](const Report& r) { return fixed4(r.ttft_initial.mean); }},
      {"ttft_initial_p95",
       [fixed4](const Report& r) { return fixed4(r.ttft_initial.p95); }},
      {"ttft_incr_mean",
       [fixed4](const Report& r) { return fixed4(r.ttft_incremental.mean); }},
      {"ttft_incr_p95",
       [fixed4](const Report& r) { return fixed4(r.ttft_incremental.p95); }},
      {"itl_mean", [fixed4](const Report& r) { return fixed4(r.itl.mean); }},
      {"itl_p95", [fixed4](const Report& r) { return fixed4(r.itl.p95); }},
      {"e2e_mean", [fixed4](const Report& r) { return fixed4(r.e2e_mean); }},
      {"local_fraction",
       [fixed4](const Report& r) { return fixed4(r.local_fraction); }},
  };
}

}  // namespace

std::string comparison_table(
    const std::vector<std::pair<std::string, Report>>& reports) {
  std::ostringstream out;
  bool mismatch = false;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].second.trace_name != reports[0].second.trace_name) {
      mismatch = true;
    }
  }
  if (mismatch) {
    out << "warning: reports cover different traces\n";
  }

  const std::vector<ComparisonRow> rows = comparison_rows();
  std::size_t label_width = 0;
  for (const ComparisonRow& row : rows) {
    label_width = std::max(label_width, std::string(row.label).size());
  }
  std::vector<std::size_t> widths;
  for (const auto& [name, report] : reports) {
    std::size_t w = name.size();
    for (const ComparisonRow& row : rows) {
      w = std::max(w, row.cell(report).size());
    }
    widths.push_back(w);
  }

  out << std::left << std::setw(static_cast<int>(label_width) + 2) << "metric";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out << std::setw(static_cast<int>(widths[i]) + 2) << reports[i].first;
  }
  out << "\n";
  for (const ComparisonRow& row : rows) {
    out << std::setw(static_cast<int>(label_width) + 2) << row.label;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      out << std::setw(static_cast<int>(widths[i]) + 2)
          << row.cell(reports[i].second);
    }
    out << "\n";
  }
  return out.str();
}

std::string comparison_csv(
    const std::vector<std::pair<std::string, Report>>& reports) {
  std::string out =
      "name,trace,sessions_completed,sessions_total,slo_attainment,"
      "ttft_attainment,itl_attainment,ttft_initial_mean,ttft_initial_p95,"
      "ttft_incr_mean,ttft_incr_p95,itl_mean,itl_p95,e2e_mean,"
      "local_fraction\n";
  for (const auto& [name, r] : reports) {
    out += name + "," + r.trace_name + "," +
           std::to_string(r.sessions_completed) + "," +
           std::to_string(r.sessions_total) + "," +
           fmt_double(r.slo_attainment) + "," +
           fmt_double(r.ttft_attainment) + "," +
           fmt_double(r.itl_attainment) + "," +
           fmt_double(r.ttft_initial.mean) + "," +
           fmt_double(r.ttft_initial.p95) + "," +
           fmt_double(r.ttft_incremental.mean) + "," +
           fmt_double(r.ttft_incremental.p95) + "," +
           fmt_double(r.itl.mean) + "," + fmt_double(r.itl.p95) + "," +
           fmt_double(r.e2e_mean) + "," + fmt_double(r.local_fraction) + "\n";
  }
  return out;
}

// ---- raw sample CSV ----

namespace {

constexpr const char* kTtftHeader =
    "session_id,round,kind,local,created_time,completion_time,value";
constexpr const char* kItlHeader =
    "session_id,round,token_index,completion_time,value";
constexpr const char* kSessionsHeader =
    "session_id,arrival_time,completion_time,rounds,admission_wait,mean_itl,"
    "ttft_ok,itl_ok,slo_ok";
constexpr const char* kDecisionsHeader =
    "time,session_id,round,local,worker,rationale,estimated_cost";

}  // namespace

std::string ttft_csv(const std::vector<TtftSample>& samples) {
  std::string out = std::string(kTtftHeader) + "\n";
  for (const TtftSample& s : samples) {
    out += std::to_string(s.session_id) + "," + std::to_string(s.round) + "," +
           (s.kind == TaskKind::kInitial ? "initial" : "incremental") + "," +
           (s.local ? "1" : "0") + "," + fmt_double(s.created_time) + "," +
           fmt_double(s.completion_time) + "," + fmt_double(s.value) + "\n";
  }
  return out;
}

std::vector<TtftSample> parse_ttft_csv(const std::string& text) {
  std::vector<TtftSample> samples;
  parse_csv(text, "ttft_samples.csv", kTtftHeader, 7,
            [&](const std::vector<std::string>& f, const std::string& where) {
              TtftSample s;
              s.session_id = parse_int(f[0], where + " session_id");
              s.round = static_cast<int>(parse_int(f[1], where + " round"));
              if (f[2] == "initial") {
                s.kind = TaskKind::kInitial;
              } else if (f[2] == "incremental") {
                s.kind = TaskKind::kIncremental;
              } else {
                throw ParseError(where + " kind", "unknown kind '" + f[2] +
                                                      "'");
              }
              s.local = parse_flag(f[3], where + " local");
              s.created_time = parse_double(f[4], where + " created_time");
              s.completion_time =
                  parse_double(f[5], where + " completion_time");
              s.value = parse_double(f[6], where + " value");
              samples.push_back(s);
            });
  return samples;
}

std::string itl_csv(const std::vector<ItlSample>& samples) {
  std::string out = std::string(kItlHeader) + "\n";
  for (const ItlSample& s : samples) {
    out += std::to_string(s.session_id) + "," + std::to_string(s.round) + "," +
           std::to_string(s.token_index) + "," +
           fmt_double(s.completion_time) + "," + fmt_double(s.value) + "\n";
  }
  return out;
}

std::vector<ItlSample> parse_itl_csv(const std::string& text) {
  std::vector<ItlSample> samples;
  parse_csv(text, "itl_samples.csv", kItlHeader, 5,
            [&](const std::vector<std::string>& f, const std::string& where) {
              ItlSample s;
              s.session_id = parse_int(f[0], where + " session_id");
              s.round = static_cast<int>(parse_int(f[1], where + " round"));
              s.token_index =
                  static_cast<int>(parse_int(f[2], where + " token_index"));
              s.completion_time =
                  parse_double(f[3], where + " completion_time");
              s.value = parse_double(f[4], where + " value");
              samples.push_back(s);
            });
  return samples;
}

std::string sessions_csv(const std::vector<SessionOutcome>& sessions) {
  std::string out = std::string(kSessionsHeader) + "\n";
  for (const SessionOutcome& s : sessions) {
    out += std::to_string(s.session_id) + "," + fmt_double(s.arrival_time) +
           "," + fmt_double(s.completion_time) + "," +
           std::to_string(s.rounds) + "," + fmt_double(s.admission_wait) +
           "," + fmt_double(s.mean_itl) + "," + (s.ttft_ok ? "1" : "0") + "," +
           (s.itl_ok ? "1" : "0") + "," + (s.slo_ok ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<SessionOutcome> parse_sessions_csv(const std::string& text) {
  std::vector<SessionOutcome> sessions;
  parse_csv(text, "sessions.csv", kSessionsHeader, 9,
            [&](const std::vector<std::string>& f, const std::string& where) {
              SessionOutcome s;
              s.session_id = parse_int(f[0], where + " session_id");
              s.arrival_time = parse_double(f[1], where + " arrival_time");
              s.completion_time =
                  parse_double(f[2], where + " completion_time");
              s.rounds = static_cast<int>(parse_int(f[3], where + " rounds"));
              s.admission_wait =
                  parse_double(f[4], where + " admission_wait");
              s.mean_itl = parse_double(f[5], where + " mean_itl");
              s.ttft_ok = parse_flag(f[6], where + " ttft_ok");
              s.itl_ok = parse_flag(f[7], where + " itl_ok");
              s.slo_ok = parse_flag(f[8], where + " slo_ok");
              sessions.push_back(s);
            });
  return sessions;
}

std::string decisions_csv(const std::vector<DecisionRecord>& decisions) {
  std::string out = std::string(kDecisionsHeader) + "\n";
  for (const DecisionRecord& d : decisions) {
    out += fmt_double(d.time) + "," + std::to_string(d.session_id) + "," +
           std::to_string(d.round) + "," + (d.local ? "1" : "0") + "," +
           std::to_string(d.worker) + "," + to_string(d.rationale) + ",";
    if (d.estimated_cost) {
      out += fmt_double(*d.estimated_cost);
    }
    out += "\n";
  }
  return out;
}

}  // namespace pdsim
