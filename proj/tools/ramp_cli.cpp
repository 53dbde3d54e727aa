// ramp: plan and simulate climbing-robot scenarios.
//
//   ramp run <config> [--out DIR] [--timestep S] [--seed N] [--emit-plan]
//   ramp compare <config> <config>... [--out DIR]
//
// Exit status of `run`: 0 goal_reached, 1 bad config or usage,
// 2 detached_floating, 3 singularity, 4 time_out, 5 numerical_blowup,
// 6 planner infeasible.

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "CLI11.hpp"
#include "ramp/scenario.hpp"

namespace fs = std::filesystem;

namespace {

void apply_overrides(ramp::ScenarioConfig& c, const std::optional<double>& timestep,
                     const std::optional<std::uint64_t>& seed) {
  if (timestep) c.sim.timestep = *timestep;
  if (seed) c.seed = *seed;
  c.validate();
}

int cmd_run(const std::string& path, const std::optional<std::string>& out, const std::optional<double>& timestep,
            const std::optional<std::uint64_t>& seed, bool emit_plan) {
  ramp::ScenarioConfig config = ramp::load_scenario(path);
  apply_overrides(config, timestep, seed);
  const ramp::RunResult r = ramp::run(config, emit_plan);
  const fs::path dir = out ? fs::path(*out) : config.output_path();
  ramp::write_outputs(r, dir);
  const ramp::RunSummary& s = r.summary;
  std::cout << s.mode << " alpha=" << s.alpha << " cause=" << s.cause << " t=" << s.end_time
            << " distance=" << s.distance << " max_force=" << s.max_force << " mean_force=" << s.mean_force
            << "\n";
  if (s.plan_failure) {
    std::cerr << "plan failure (" << s.plan_failure->kind << ") in phase " << s.plan_failure->phase << " at t="
              << s.plan_failure->time << ": " << s.plan_failure->message << "\n";
  }
  std::cout << "outputs in " << dir.string() << "\n";
  return s.exit_code;
}

int cmd_compare(const std::vector<std::string>& paths, const std::optional<std::string>& out) {
  std::vector<ramp::ScenarioConfig> configs;
  for (const std::string& p : paths) configs.push_back(ramp::load_scenario(p));
  ramp::check_comparable(configs);
  std::vector<std::future<ramp::RunResult>> jobs;
  for (const ramp::ScenarioConfig& c : configs) {
    jobs.push_back(std::async(std::launch::async, [c] { return ramp::run(c); }));
  }
  std::vector<ramp::RunSummary> runs;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const ramp::RunResult r = jobs[i].get();
    runs.push_back(r.summary);
    runs.back().name = paths[i];
    if (out) ramp::write_outputs(r, fs::path(*out) / fs::path(paths[i]).stem());
  }
  const ramp::ComparisonSummary summary = ramp::compare(runs);
  const std::string table = ramp::format_table(summary);
  std::cout << table;
  if (out) {
    fs::create_directories(*out);
    std::ofstream(fs::path(*out) / "comparison.json") << ramp::to_json(summary).dump(2) << "\n";
    std::ofstream(fs::path(*out) / "comparison.txt") << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plan and simulate reaction-aware climbing gaits"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Plan and simulate one scenario");
  std::string config;
  std::optional<std::string> run_out;
  std::optional<double> timestep;
  std::optional<std::uint64_t> seed;
  bool emit_plan = false;
  run->add_option("config", config, "Scenario file")->required();
  run->add_option("--out", run_out, "Output directory (overrides output_dir)");
  run->add_option("--timestep", timestep, "Integration timestep in s");
  run->add_option("--seed", seed, "Optimizer seed");
  run->add_flag("--emit-plan", emit_plan, "Write the planned trajectory without simulating");

  auto* cmp = app.add_subcommand("compare", "Run several modes of one scenario and compare them");
  std::vector<std::string> configs;
  std::optional<std::string> cmp_out;
  cmp->add_option("configs", configs, "Scenario files differing only in mode and alpha")->required()->expected(1, -1);
  cmp->add_option("--out", cmp_out, "Directory for per-run outputs and the comparison");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config, run_out, timestep, seed, emit_plan);
    return cmd_compare(configs, cmp_out);
  } catch (const ramp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ramp::ComparisonError& e) {
    std::cerr << "comparison invalid: " << e.what() << "\n";
    return 1;
  } catch (const ramp::PlanError& e) {
    std::cerr << "planner error: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
