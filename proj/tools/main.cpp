// Copyright 2026 The reachmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reachmpc/config.hpp"
#include "reachmpc/rng.hpp"
#include "reachmpc/trial.hpp"

namespace {

namespace fs = std::filesystem;
using namespace reachmpc;

std::vector<TrialSpec> load_trials(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("trial_", 0) == 0 && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no trial_*.json files in " + dir);
  std::vector<TrialSpec> specs;
  specs.reserve(files.size());
  for (const auto& file : files) {
    std::ifstream in(file);
    std::ostringstream buf;
    buf << in.rdbuf();
    specs.push_back(trial_from_json(buf.str()));
  }
  return specs;
}

void print_report(const std::string& label, const AggregateReport& report) {
  std::printf("%s: trials=%d success_rate=%.3f avg_max_force=%.2fN avg_force=%.2fN "
              "median=%.2fN q1=%.2fN q3=%.2fN samples=%d\n",
              label.c_str(), report.n_trials, report.success_rate, report.avg_max_force,
              report.avg_force, report.median, report.q1, report.q3, report.n_samples);
}

int cmd_gen(const Config& config, std::uint64_t seed, int n_fixed, int n_movable,
            int count, const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t trial_seed = CounterRng::derive(seed, static_cast<std::uint64_t>(i));
    const TrialSpec spec = generate_trial(trial_seed, n_fixed, n_movable, config);
    char name[32];
    std::snprintf(name, sizeof(name), "trial_%04d.json", i);
    std::ofstream out(fs::path(out_dir) / name);
    out << trial_to_json(spec) << '\n';
  }
  std::printf("generated %d trials (%d fixed + %d movable) in %s\n", count, n_fixed,
              n_movable, out_dir.c_str());
  return 0;
}

int cmd_run(const Config& config, const std::string& trials_dir,
            const std::string& controller_id, int reaches, int jobs,
            const std::string& out_dir) {
  const auto specs = load_trials(trials_dir);
  fs::create_directories(out_dir);
  const auto results = run_trials(specs, controller_id, config, reaches, jobs, out_dir);
  const AggregateReport report = aggregate(results);
  write_report_csv((fs::path(out_dir) / ("report_" + controller_id + ".csv")).string(),
                   results, report);
  print_report(controller_id, report);
  for (const TrialResult& trial : results) {
    for (const ReachOutcome& reach : trial.reaches) {
      if (reach.reason == ReachReason::kSimFault) {
        std::fprintf(stderr, "trial %d hit a simulation fault\n", trial.trial_id);
        return 2;
      }
    }
  }
  return 0;
}

int cmd_sweep(const Config& config, const std::string& trials_dir,
              const std::string& thresholds_csv, int reaches, int jobs,
              const std::string& out_dir) {
  std::vector<double> thresholds;
  std::stringstream ss(thresholds_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) thresholds.push_back(std::stod(item));
  }
  const auto specs = load_trials(trials_dir);
  fs::create_directories(out_dir);
  const SweepResult sweep = sweep_thresholds(specs, thresholds, config, reaches, jobs, out_dir);

  std::ofstream out(fs::path(out_dir) / "sweep.csv");
  out << "threshold_N,q1_force_N,median_force_N,q3_force_N,avg_force_N,success_rate,n_samples\n";
  for (const SweepEntry& e : sweep.entries) {
    out << e.threshold << ',' << e.report.q1 << ',' << e.report.median << ','
        << e.report.q3 << ',' << e.report.avg_force << ',' << e.report.success_rate
        << ',' << e.report.n_samples << '\n';
    std::printf("threshold %5.1fN -> median %.2fN (q1 %.2f, q3 %.2f)\n", e.threshold,
                e.report.median, e.report.q1, e.report.q3);
  }
  if (std::isnan(sweep.correlation)) {
    out << "correlation,undefined\n";
    std::printf("threshold/median correlation: undefined (zero variance)\n");
  } else {
    out << "correlation," << sweep.correlation << '\n';
    std::printf("threshold/median correlation: %.4f\n", sweep.correlation);
  }
  return 0;
}

int cmd_report(const std::string& in_dir) {
  // rebuild everything from the raw logs alone
  bool any = false;
  for (const std::string id : {"mpc", "baseline"}) {
    const std::string suffix = "_" + id + ".jsonl";
    bool present = false;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > suffix.size() &&
          name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
        present = true;
        break;
      }
    }
    if (!present) continue;
    any = true;
    print_report(id + " (from logs)", report_from_logs(in_dir, id));
  }
  if (!any) {
    std::fprintf(stderr, "no trial logs found in %s\n", in_dir.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar reach-in-clutter testbed: tactile MPC vs baseline"};
  app.require_subcommand(1);

  std::string config_path;
  int jobs = 1;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--jobs", jobs, "worker threads for trial execution");

  auto* gen = app.add_subcommand("gen", "generate trial specs");
  std::uint64_t seed = 1;
  int n_fixed = 10, n_movable = 10, count = 10;
  std::string gen_out;
  gen->add_option("--seed", seed, "master seed");
  gen->add_option("--fixed", n_fixed, "fixed obstacles per trial");
  gen->add_option("--movable", n_movable, "movable obstacles per trial");
  gen->add_option("--count", count, "number of trials");
  gen->add_option("--out", gen_out, "output directory")->required();

  auto* run = app.add_subcommand("run", "run a controller over a trial set");
  std::string run_trials_dir, controller_id = "mpc", run_out;
  int reaches = 1;
  run->add_option("--trials", run_trials_dir, "directory with trial_*.json")->required();
  run->add_option("--controller", controller_id, "mpc|baseline")
      ->check(CLI::IsMember({"mpc", "baseline"}));
  run->add_option("--reaches", reaches, "max reach attempts per trial");
  run->add_option("--out", run_out, "output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "force-threshold sweep over a trial set");
  std::string sweep_trials_dir, thresholds = "3,5,10,15,25", sweep_out;
  int sweep_reaches = 1;
  sweep->add_option("--trials", sweep_trials_dir, "directory with trial_*.json")->required();
  sweep->add_option("--thresholds", thresholds, "comma-separated thresholds [N]");
  sweep->add_option("--reaches", sweep_reaches, "max reach attempts per trial");
  sweep->add_option("--out", sweep_out, "output directory")->required();

  auto* report = app.add_subcommand("report", "recompute metrics from trial logs");
  std::string report_in;
  report->add_option("--in", report_in, "directory with trial logs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    Config config;
    if (!config_path.empty()) config = load_config(config_path);
    if (gen->parsed()) return cmd_gen(config, seed, n_fixed, n_movable, count, gen_out);
    if (run->parsed()) return cmd_run(config, run_trials_dir, controller_id, reaches, jobs, run_out);
    if (sweep->parsed()) return cmd_sweep(config, sweep_trials_dir, thresholds, sweep_reaches, jobs, sweep_out);
    if (report->parsed()) return cmd_report(report_in);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
