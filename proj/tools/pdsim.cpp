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

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdsim/errors.hpp"
#include "pdsim/metrics.hpp"
#include "pdsim/perf_model.hpp"
#include "pdsim/planner.hpp"
#include "pdsim/sim_engine.hpp"
#include "pdsim/workload.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw pdsim::ConfigError("cannot read " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw pdsim::ConfigError("cannot write " + tmp.string());
    }
    out << content;
  }
  fs::rename(tmp, path);
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << "0x" << std::hex << h;
  return out.str();
}

std::string timestamp_utc() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

// "P:<count>x<degree>,D:<count>x<degree>,..." e.g. "P:2x1,D:1x4".
pdsim::DeploymentPlan parse_plan_spec(const std::string& spec) {
  pdsim::DeploymentPlan plan;
  plan.feasible = true;
  std::istringstream in(spec);
  std::string entry;
  bool any = false;
  while (std::getline(in, entry, ',')) {
    if (entry.empty()) continue;
    const bool prefill = entry.rfind("P:", 0) == 0;
    const bool decode = entry.rfind("D:", 0) == 0;
    if (!prefill && !decode) {
      throw pdsim::ConfigError("plan-spec: entry '" + entry +
                               "' must start with P: or D:");
    }
    const std::string body = entry.substr(2);
    const std::size_t x = body.find('x');
    if (x == std::string::npos) {
      throw pdsim::ConfigError("plan-spec: entry '" + entry +
                               "' must look like P:<count>x<degree>");
    }
    int count = 0;
    int degree = 0;
    try {
      count = std::stoi(body.substr(0, x));
      degree = std::stoi(body.substr(x + 1));
    } catch (const std::exception&) {
      throw pdsim::ConfigError("plan-spec: entry '" + entry +
                               "' has a malformed count or degree");
    }
    if (count < 1 || degree < 1) {
      throw pdsim::ConfigError("plan-spec: counts and degrees must be >= 1");
    }
    (prefill ? plan.x : plan.y)[degree] += count;
    any = true;
  }
  if (!any) {
    throw pdsim::ConfigError("plan-spec: no entries");
  }
  plan.gpus_used = plan.gpus();
  return plan;
}

json scheduler_config(const pdsim::SchedulerParams& params,
                      std::uint64_t seed) {
  json j;
  j["routing"] = pdsim::to_string(params.routing);
  j["reorder"] = params.reorder;
  j["alpha"] = params.alpha;
  j["beta"] = params.beta;
  j["window"] = params.window;
  j["stat_window"] = params.stat_window;
  j["seed"] = seed;
  return j;
}

// Runs one simulation and writes the experiment directory layout:
// config.json, summary.{json,txt}, raw sample CSVs, decision log, and a
// run_meta.json holding the only timestamp.
pdsim::Report write_experiment(const fs::path& dir, const pdsim::Trace& trace,
                               const pdsim::DeploymentPlan& plan,
                               const pdsim::PerfProfile& profile,
                               const pdsim::SchedulerParams& params,
                               std::uint64_t seed, json config) {
  const pdsim::SimResult result =
      pdsim::run(trace, plan, profile, params, seed);

  fs::create_directories(dir);
  config["version"] = "config_v1";
  config["scheduler"] = scheduler_config(params, seed);
  config["trace_name"] = trace.name;
  config["total_sessions"] = result.total_sessions;
  config["slo"] = {{"ttft_thres", trace.slo.ttft_thres},
                   {"itl_thres", trace.slo.itl_thres}};
  write_file(dir / "config.json", config.dump(2) + "\n");
  write_file(dir / "ttft_samples.csv", pdsim::ttft_csv(result.ttft_samples));
  write_file(dir / "itl_samples.csv", pdsim::itl_csv(result.itl_samples));
  write_file(dir / "sessions.csv", pdsim::sessions_csv(result.sessions));
  write_file(dir / "decisions.csv", pdsim::decisions_csv(result.decisions));

  const pdsim::Report report = pdsim::build_report(result);
  write_file(dir / "summary.json", pdsim::report_to_json(report));
  write_file(dir / "summary.txt", pdsim::format_report(report));
  write_file(dir / "run_meta.json",
             json{{"completed_at", timestamp_utc()}}.dump(2) + "\n");
  return report;
}

// Rebuilds a report from an experiment directory's raw CSV dumps.
pdsim::Report report_from_dir(const fs::path& dir) {
  const json config = json::parse(read_file((dir / "config.json").string()));
  const auto ttft =
      pdsim::parse_ttft_csv(read_file((dir / "ttft_samples.csv").string()));
  const auto itl =
      pdsim::parse_itl_csv(read_file((dir / "itl_samples.csv").string()));
  const auto sessions =
      pdsim::parse_sessions_csv(read_file((dir / "sessions.csv").string()));
  return pdsim::build_report_from_samples(
      config.at("trace_name").get<std::string>(),
      config.at("total_sessions").get<std::int64_t>(), ttft, itl, sessions);
}

struct SimulateArgs {
  std::string trace_path;
  std::string profile_path;
  std::string plan_path;
  std::string plan_spec;
  std::string routing = "adaptive";
  std::string reorder = "on";
  double alpha = 0.9;
  double beta = 0.85;
  int window = 3;
  double stat_window = 10.0;
  std::uint64_t seed = 1;
  std::string out_dir;
};

pdsim::SchedulerParams scheduler_from_args(const SimulateArgs& args) {
  pdsim::SchedulerParams params;
  params.routing = pdsim::routing_mode_from_string(args.routing);
  params.reorder = args.reorder == "on";
  params.alpha = args.alpha;
  params.beta = args.beta;
  params.window = args.window;
  params.stat_window = args.stat_window;
  params.validate();
  return params;
}

void add_scheduler_flags(CLI::App* cmd, SimulateArgs& args) {
  cmd->add_option("--routing", args.routing, "prefill routing policy")
      ->check(CLI::IsMember({"adaptive", "always-remote", "always-local"}))
      ->capture_default_str();
  cmd->add_option("--reorder", args.reorder, "prefill queue reordering")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cmd->add_option("--alpha", args.alpha, "TTFT slack factor, (0,1]")
      ->capture_default_str();
  cmd->add_option("--beta", args.beta, "ITL slack factor, (0,1]")
      ->capture_default_str();
  cmd->add_option("--window", args.window, "reorder window / postpone cap")
      ->capture_default_str();
  cmd->add_option("--stat-window", args.stat_window,
                  "trailing stat window, seconds")
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "simulation seed")
      ->capture_default_str();
}

struct PlanInput {
  pdsim::DeploymentPlan plan;
  json config;  // provenance entries for config.json
};

PlanInput load_plan_input(const std::string& plan_path,
                          const std::string& plan_spec) {
  PlanInput in;
  if (!plan_path.empty() && !plan_spec.empty()) {
    throw pdsim::ConfigError("--plan and --plan-spec are mutually exclusive");
  }
  if (!plan_path.empty()) {
    const std::string text = read_file(plan_path);
    in.plan = pdsim::plan_from_json(text);
    in.config["plan"] = plan_path;
    in.config["plan_fnv1a"] = fnv1a_hex(text);
  } else if (!plan_spec.empty()) {
    in.plan = parse_plan_spec(plan_spec);
    in.config["plan_spec"] = plan_spec;
  } else {
    throw pdsim::ConfigError("one of --plan or --plan-spec is required");
  }
  return in;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"prefill/decode disaggregation simulator and planner"};
  app.require_subcommand(1);

  // ---- profile-gen ----
  auto* profile_gen =
      app.add_subcommand("profile-gen", "synthesize a performance profile");
  pdsim::SynthProfileSpec synth;
  std::uint64_t profile_seed = 1;
  std::string profile_out;
  profile_gen->add_option("--out", profile_out, "output profile path")
      ->required();
  profile_gen->add_option("--seed", profile_seed, "synthesis seed")
      ->capture_default_str();
  profile_gen
      ->add_option("--degrees", synth.degrees,
                   "parallelism degrees (powers of 2)")
      ->delimiter(',')
      ->capture_default_str();
  profile_gen
      ->add_option("--kv-bytes-per-token", synth.kv_bytes_per_token,
                   "KV bytes per token")
      ->capture_default_str();
  profile_gen
      ->add_option("--gpu-memory", synth.gpu_memory_capacity,
                   "per-GPU memory, bytes")
      ->capture_default_str();
  profile_gen
      ->add_option("--history-weight", synth.history_weight,
                   "history length weight in prefill cost")
      ->capture_default_str();
  profile_gen->callback([&] {
    const pdsim::PerfProfile profile = pdsim::synth_profile(synth,
                                                            profile_seed);
    write_file(profile_out, pdsim::save_profile(profile));
    std::cout << "wrote " << profile_out << "\n";
  });

  // ---- trace-gen ----
  auto* trace_gen =
      app.add_subcommand("trace-gen", "generate a multi-round session trace");
  std::string tg_preset;
  double tg_rate = 0.0;
  int tg_sessions = 0;
  std::uint64_t tg_seed = 1;
  std::string tg_out;
  std::string tg_name;
  double tg_ttft = -1.0;
  double tg_itl = -1.0;
  trace_gen
      ->add_option("--preset", tg_preset,
                   "workload preset: toolbench, gaia, hotpotqa, dureader")
      ->required();
  trace_gen->add_option("--rate", tg_rate, "session arrival rate, 1/s")
      ->required();
  trace_gen->add_option("--sessions", tg_sessions, "number of sessions")
      ->required();
  trace_gen->add_option("--seed", tg_seed, "generation seed")
      ->capture_default_str();
  trace_gen->add_option("--out", tg_out, "output trace path")->required();
  trace_gen->add_option("--name", tg_name, "trace name override");
  trace_gen->add_option("--ttft-slo", tg_ttft, "TTFT threshold override, s");
  trace_gen->add_option("--itl-slo", tg_itl, "ITL threshold override, s");
  trace_gen->callback([&] {
    pdsim::TraceStats stats = pdsim::preset_stats(tg_preset);
    if (!tg_name.empty()) stats.name = tg_name;
    if (tg_ttft > 0.0) stats.slo.ttft_thres = tg_ttft;
    if (tg_itl > 0.0) stats.slo.itl_thres = tg_itl;
    const pdsim::Trace trace =
        pdsim::gen_trace(stats, tg_rate, tg_sessions, tg_seed);
    write_file(tg_out, pdsim::save_trace(trace));
    std::cout << "wrote " << tg_out << " (" << trace.sessions.size()
              << " sessions)\n";
  });

  // ---- plan ----
  auto* plan_cmd =
      app.add_subcommand("plan", "estimate coefficients and solve deployment");
  std::string pl_profile;
  std::string pl_preset;
  double pl_rate = 0.0;
  int pl_gpus = 0;
  std::vector<int> pl_degrees;
  std::uint64_t pl_seed = 1;
  int pl_top_k = 1;
  std::string pl_out;
  std::string pl_coeffs_out;
  bool pl_evaluate = false;
  int pl_eval_sessions = 200;
  plan_cmd->add_option("--profile", pl_profile, "performance profile path")
      ->required()
      ->check(CLI::ExistingFile);
  plan_cmd
      ->add_option("--preset", pl_preset,
                   "workload preset the cluster should serve")
      ->required();
  plan_cmd->add_option("--rate", pl_rate, "aggregate arrival rate, 1/s")
      ->required();
  plan_cmd->add_option("--gpus", pl_gpus, "total GPU budget")->required();
  plan_cmd
      ->add_option("--degrees", pl_degrees,
                   "candidate degrees (default: profile degrees)")
      ->delimiter(',');
  plan_cmd->add_option("--seed", pl_seed, "estimation seed")
      ->capture_default_str();
  plan_cmd->add_option("--top-k", pl_top_k, "also rank the k best plans")
      ->capture_default_str();
  plan_cmd->add_option("--out", pl_out, "write the chosen plan as JSON");
  plan_cmd->add_option("--coefficients", pl_coeffs_out,
                       "dump estimated coefficients as JSON");
  plan_cmd->add_flag("--evaluate", pl_evaluate,
                     "simulate the chosen plan and report SLO attainment");
  plan_cmd
      ->add_option("--evaluate-sessions", pl_eval_sessions,
                   "sessions in the evaluation trace")
      ->capture_default_str();
  plan_cmd->callback([&] {
    const pdsim::PerfProfile profile =
        pdsim::load_profile(read_file(pl_profile));
    const pdsim::TraceStats stats = pdsim::preset_stats(pl_preset);
    const std::vector<int> degrees =
        pl_degrees.empty() ? profile.degrees : pl_degrees;
    const pdsim::LatencyCoefficients coeffs = pdsim::estimate_coefficients(
        stats, pl_rate, profile, degrees, pl_gpus, pl_seed);
    if (!pl_coeffs_out.empty()) {
      write_file(pl_coeffs_out, pdsim::coefficients_to_json(coeffs));
    }

    const pdsim::DeploymentPlan plan =
        pdsim::solve(coeffs, pl_gpus, degrees);
    if (!plan.feasible) {
      std::cout << "infeasible: no assignment fits " << pl_gpus << " GPUs\n";
      if (!pl_out.empty()) {
        write_file(pl_out, pdsim::plan_to_json(plan));
      }
      return;
    }
    std::cout << "plan: " << pdsim::format_plan(plan) << "\n";
    std::cout << "objective_z: " << fmt_double(plan.objective_z)
              << "s  gpus_used: " << plan.gpus_used << "/" << pl_gpus << "\n";
    if (pl_top_k > 1) {
      const auto ranked = pdsim::top_k(coeffs, pl_gpus, degrees, pl_top_k);
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        std::cout << "top-" << (i + 1) << ": " << pdsim::format_plan(ranked[i])
                  << "  (Z=" << fmt_double(ranked[i].objective_z) << "s)\n";
      }
    }
    if (!pl_out.empty()) {
      write_file(pl_out, pdsim::plan_to_json(plan));
    }
    if (pl_evaluate) {
      const pdsim::Trace trace =
          pdsim::gen_trace(stats, pl_rate, pl_eval_sessions, pl_seed);
      pdsim::SchedulerParams params;
      const pdsim::SimResult result =
          pdsim::run(trace, plan, profile, params, pl_seed);
      std::cout << pdsim::format_report(pdsim::build_report(result));
    }
  });

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "run a trace on a cluster");
  SimulateArgs sim;
  sim_cmd->add_option("--trace", sim.trace_path, "trace file")
      ->required()
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--profile", sim.profile_path, "performance profile")
      ->required()
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--plan", sim.plan_path, "deployment plan JSON")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--plan-spec", sim.plan_spec,
                      "inline plan, e.g. P:2x1,D:2x1");
  sim_cmd->add_option("--out", sim.out_dir, "experiment output directory")
      ->required();
  add_scheduler_flags(sim_cmd, sim);
  sim_cmd->callback([&] {
    const std::string trace_text = read_file(sim.trace_path);
    const std::string profile_text = read_file(sim.profile_path);
    const pdsim::Trace trace = pdsim::load_trace(trace_text);
    const pdsim::PerfProfile profile = pdsim::load_profile(profile_text);
    PlanInput plan_in = load_plan_input(sim.plan_path, sim.plan_spec);
    const pdsim::SchedulerParams params = scheduler_from_args(sim);

    json config = plan_in.config;
    config["trace"] = sim.trace_path;
    config["trace_fnv1a"] = fnv1a_hex(trace_text);
    config["profile"] = sim.profile_path;
    config["profile_fnv1a"] = fnv1a_hex(profile_text);

    const pdsim::Report report = write_experiment(
        sim.out_dir, trace, plan_in.plan, profile, params, sim.seed, config);
    std::cout << pdsim::format_report(report);
    std::cout << "wrote " << sim.out_dir << "\n";
  });

  // ---- report ----
  auto* report_cmd =
      app.add_subcommand("report", "rebuild a report from raw CSV dumps");
  std::string rep_dir;
  std::string rep_json_out;
  report_cmd->add_option("--in", rep_dir, "experiment directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  report_cmd->add_option("--json", rep_json_out, "also write report JSON");
  report_cmd->callback([&] {
    const pdsim::Report report = report_from_dir(rep_dir);
    std::cout << pdsim::format_report(report);
    if (!rep_json_out.empty()) {
      write_file(rep_json_out, pdsim::report_to_json(report));
    }
  });

  // ---- compare ----
  auto* compare_cmd =
      app.add_subcommand("compare", "align reports across experiments");
  std::vector<std::string> cmp_dirs;
  std::string cmp_csv_out;
  compare_cmd
      ->add_option("--in", cmp_dirs, "experiment directories (repeatable)")
      ->required()
      ->expected(-1)
      ->check(CLI::ExistingDirectory);
  compare_cmd->add_option("--csv", cmp_csv_out, "also write comparison CSV");
  compare_cmd->callback([&] {
    std::vector<std::pair<std::string, pdsim::Report>> reports;
    for (const std::string& dir : cmp_dirs) {
      reports.emplace_back(fs::path(dir).filename().string(),
                           report_from_dir(dir));
    }
    std::cout << pdsim::comparison_table(reports);
    if (!cmp_csv_out.empty()) {
      write_file(cmp_csv_out, pdsim::comparison_csv(reports));
    }
  });

  // ---- sweep ----
  auto* sweep_cmd =
      app.add_subcommand("sweep", "grid-run simulate over rates and knobs");
  SimulateArgs sw;
  std::string sw_preset;
  int sw_sessions = 0;
  std::vector<double> sw_rates;
  std::vector<double> sw_alphas;
  std::vector<double> sw_betas;
  std::vector<int> sw_windows;
  sweep_cmd->add_option("--profile", sw.profile_path, "performance profile")
      ->required()
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--plan", sw.plan_path, "deployment plan JSON")
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--plan-spec", sw.plan_spec, "inline plan");
  sweep_cmd->add_option("--preset", sw_preset, "workload preset")->required();
  sweep_cmd->add_option("--sessions", sw_sessions, "sessions per run")
      ->required();
  sweep_cmd->add_option("--rates", sw_rates, "arrival rates to sweep")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--alphas", sw_alphas, "alpha values to sweep")
      ->delimiter(',');
  sweep_cmd->add_option("--betas", sw_betas, "beta values to sweep")
      ->delimiter(',');
  sweep_cmd->add_option("--windows", sw_windows, "reorder windows to sweep")
      ->delimiter(',');
  sweep_cmd->add_option("--out", sw.out_dir, "sweep output directory")
      ->required();
  add_scheduler_flags(sweep_cmd, sw);
  sweep_cmd->callback([&] {
    const std::string profile_text = read_file(sw.profile_path);
    const pdsim::PerfProfile profile = pdsim::load_profile(profile_text);
    PlanInput plan_in = load_plan_input(sw.plan_path, sw.plan_spec);
    const pdsim::TraceStats stats = pdsim::preset_stats(sw_preset);

    if (sw_alphas.empty()) sw_alphas = {sw.alpha};
    if (sw_betas.empty()) sw_betas = {sw.beta};
    if (sw_windows.empty()) sw_windows = {sw.window};

    fs::create_directories(sw.out_dir);
    std::string csv =
        "rate,alpha,beta,window,slo_attainment,ttft_attainment,"
        "itl_attainment,ttft_initial_mean,ttft_initial_p95,ttft_incr_mean,"
        "ttft_incr_p95,itl_mean,itl_p95,e2e_mean,local_fraction\n";

    for (double rate : sw_rates) {
      const pdsim::Trace trace =
          pdsim::gen_trace(stats, rate, sw_sessions, sw.seed);
      for (double alpha : sw_alphas) {
        for (double beta : sw_betas) {
          for (int window : sw_windows) {
            SimulateArgs combo = sw;
            combo.alpha = alpha;
            combo.beta = beta;
            combo.window = window;
            const pdsim::SchedulerParams params = scheduler_from_args(combo);
            const std::string name = "r" + fmt_double(rate) + "_a" +
                                     fmt_double(alpha) + "_b" +
                                     fmt_double(beta) + "_w" +
                                     std::to_string(window);
            json config = plan_in.config;
            config["profile"] = sw.profile_path;
            config["profile_fnv1a"] = fnv1a_hex(profile_text);
            config["preset"] = sw_preset;
            config["rate"] = rate;
            const pdsim::Report rep =
                write_experiment(fs::path(sw.out_dir) / name, trace,
                                 plan_in.plan, profile, params, sw.seed,
                                 config);
            csv += fmt_double(rate) + "," + fmt_double(alpha) + "," +
                   fmt_double(beta) + "," + std::to_string(window) + "," +
                   fmt_double(rep.slo_attainment) + "," +
                   fmt_double(rep.ttft_attainment) + "," +
                   fmt_double(rep.itl_attainment) + "," +
                   fmt_double(rep.ttft_initial.mean) + "," +
                   fmt_double(rep.ttft_initial.p95) + "," +
                   fmt_double(rep.ttft_incremental.mean) + "," +
                   fmt_double(rep.ttft_incremental.p95) + "," +
                   fmt_double(rep.itl.mean) + "," + fmt_double(rep.itl.p95) +
                   "," + fmt_double(rep.e2e_mean) + "," +
                   fmt_double(rep.local_fraction) + "\n";
          }
        }
      }
    }
    write_file(fs::path(sw.out_dir) / "sweep.csv", csv);
    std::cout << "wrote " << (fs::path(sw.out_dir) / "sweep.csv").string()
              << "\n";
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const pdsim::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pdsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pdsim::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
