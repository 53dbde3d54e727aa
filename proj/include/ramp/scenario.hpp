#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ramp/gait.hpp"
#include "ramp/simdyn.hpp"

namespace ramp {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Robot files (sizes in mm, masses in g, inertias in kg m^2, angles in deg)

RobotModel robot_from_json(const Json& doc);
RobotModel load_robot(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Scenario files (SI units)

struct GaitConfig {
  std::string type = "crawl";            // crawl | single_step
  double stride = 0.08;
  double step_height = 0.04;
  double swing_period = 1.5;
  double base_shift = 0.02;
  double shift_period = 1.5;
  double release_height = 0.01;
  double grasp_height = 0.01;
  double release_fraction = 0.1;
  double grasp_fraction = 0.1;
  int cycles = 5;
  std::vector<std::string> order;        // crawl swing order by limb name
  std::string swing_limb;                // single_step only
  Vec3 direction = Vec3::UnitX();
  Vec3 up = Vec3::UnitZ();
  int samples = 64;                      // plan samples per swing
};

struct StanceConfig {
  std::map<std::string, Vec3> feet;      // neutral grasp points, base frame, m
  std::vector<double> seed;              // IK seed per limb joint, rad, shared by all limbs
  std::map<std::string, std::vector<double>> limb_seeds;   // per-limb override
  Vec3 base_position = Vec3::Zero();
  double base_yaw = 0.0;                 // rad
};

struct SimSettings {
  double gravity = 0.0;                  // m/s^2, acts along -gait.up
  double timestep = 1e-4;
  double duration = 70.0;
  std::vector<double> kp;                // per limb joint, repeated for every limb
  std::vector<double> kd;
  double goal = 0.0;                     // m along gait.direction
  double goal_tolerance = 0.005;
  double float_time = 2.0;
  double log_interval = 1e-3;
};

struct ScenarioConfig {
  int schema_version = 1;
  std::filesystem::path directory;       // directory of the config file
  std::string robot;                     // robot file as written
  PlanMode mode = PlanMode::BL;
  double alpha = 0.0;
  std::uint64_t seed = 7;
  std::string output_dir = "out";
  GaitConfig gait;
  StanceConfig stance;
  LrstWeights lrst;
  int optimizer_starts = 8;
  NelderMeadOptions simplex;
  double singularity_threshold = 1e-4;
  ContactParameters contact;
  SimSettings sim;

  std::filesystem::path robot_path() const;
  std::filesystem::path output_path() const;

  /// Checks every invariant; throws ConfigError naming the field.
  void validate() const;
};

/// Parses a scenario document. Relative paths resolve against `directory`.
ScenarioConfig scenario_from_json(const Json& doc, const std::filesystem::path& directory);

/// Loads a scenario file; syntax errors report line and column.
ScenarioConfig load_scenario(const std::filesystem::path& path);

Json to_json(const ScenarioConfig& config);

// ---------------------------------------------------------------------------
// Pipeline

struct Scenario {
  ScenarioConfig config;
  RobotModel model;
  SystemState initial;
  GaitSchedule schedule;
  PlanOptions plan_options;
  SimConfig sim;
};

/// Loads the robot, solves the initial stance and builds the gait schedule.
Scenario prepare(const ScenarioConfig& config);

struct RunSummary {
  std::string name;
  std::string mode;
  double alpha = 0.0;
  std::string cause;                     // termination cause or planner_infeasible / planned
  int exit_code = 0;
  double end_time = 0.0;
  double distance = 0.0;                 // m along the walking direction
  double max_force = 0.0;                // N, worst attached gripper
  double mean_force = 0.0;
  double max_moment = 0.0;               // N m
  double mean_moment = 0.0;
  double peak_force_rate = 0.0;          // peak |dP/dt| from contact forces, N
  double peak_moment_rate = 0.0;         // peak |dL/dt| about the base, N m
  double attitude_excursion = 0.0;       // deg
  int unplanned_detachments = 0;
  double plan_peak_momentum_rate = 0.0;  // largest swing J1 / k1 in the plan
  std::optional<PlanFailure> plan_failure;
  std::vector<SimEvent> events;
  std::vector<std::array<Vec3, 8>> control_points;
};

struct RunResult {
  Scenario scenario;
  MotionPlan plan;
  std::optional<SimLog> log;
  RunSummary summary;
};

/// Exit status of a run: 0 goal_reached, 2 detached_floating, 3 singularity,
/// 4 time_out, 5 numerical_blowup, 6 planner infeasible.
int exit_code(Termination cause);

/// Plans and (unless plan_only) simulates a scenario.
RunResult run(const ScenarioConfig& config, bool plan_only = false);

RunSummary summarize(const Scenario& scenario, const MotionPlan& plan, const SimLog* log);

Json to_json(const RunSummary& summary);

/// Writes results.csv (unless no log), plan.csv and summary.json. Files are
/// written to a temporary name and renamed into place.
void write_outputs(const RunResult& result, const std::filesystem::path& directory);

struct ComparisonEntry {
  RunSummary summary;
  double max_force_ratio = 1.0;
  double mean_force_ratio = 1.0;
  double max_moment_ratio = 1.0;
  double mean_moment_ratio = 1.0;
};

struct ComparisonSummary {
  int reference = 0;                     // index of the reference run (first BL, else first)
  std::vector<ComparisonEntry> entries;
};

/// Raised when configs differ in more than mode and alpha.
class ComparisonError : public Error {
 public:
  using Error::Error;
};

/// Verifies the configs only differ in mode/alpha/output directory.
void check_comparable(const std::vector<ScenarioConfig>& configs);

ComparisonSummary compare(const std::vector<RunSummary>& runs);
Json to_json(const ComparisonSummary& summary);
std::string format_table(const ComparisonSummary& summary);

}  // namespace ramp
