#include "ramp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ramp {

namespace fs = std::filesystem;

namespace {

const Json& member(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + key, "missing field");
  return j.at(key);
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

double number(const Json& j, const std::string& key, const std::string& path) {
  return number(member(j, key, path), path + key);
}

double number_or(const Json& j, const std::string& key, double fallback, const std::string& path) {
  return j.contains(key) ? number(j.at(key), path + key) : fallback;
}

int integer_or(const Json& j, const std::string& key, int fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(path + key, "expected an integer");
  return j.at(key).get<int>();
}

std::string text(const Json& j, const std::string& key, const std::string& path) {
  const Json& v = member(j, key, path);
  if (!v.is_string()) throw ConfigError(path + key, "expected a string");
  return v.get<std::string>();
}

std::string text_or(const Json& j, const std::string& key, const std::string& fallback,
                    const std::string& path) {
  return j.contains(key) ? text(j, key, path) : fallback;
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Vec3 vec3(const Json& j, const std::string& path) {
  const std::vector<double> v = numbers(j, path);
  if (v.size() != 3) throw ConfigError(path, "expected 3 numbers");
  return {v[0], v[1], v[2]};
}

Vec3 vec3_or(const Json& j, const std::string& key, const Vec3& fallback, const std::string& path) {
  return j.contains(key) ? vec3(j.at(key), path + key) : fallback;
}

Json to_array(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Mat3 inertia_tensor(const Json& j, const std::string& path) {
  if (j.is_number()) return Vec3::Constant(j.get<double>()).asDiagonal();
  const std::vector<double> v = numbers(j, path);
  if (v.size() == 1) return Vec3::Constant(v[0]).asDiagonal();
  if (v.size() == 3) return Vec3(v[0], v[1], v[2]).asDiagonal();
  throw ConfigError(path, "expected Izz or [Ixx, Iyy, Izz]");
}

}  // namespace

RobotModel robot_from_json(const Json& doc) {
  RobotModel m;
  m.name = text_or(doc, "name", "robot", "");
  const std::string mode = text_or(doc, "base_mode", "spatial", "");
  if (mode == "spatial") m.base_mode = BaseMode::Spatial;
  else if (mode == "planar") m.base_mode = BaseMode::Planar;
  else if (mode == "fixed") m.base_mode = BaseMode::Fixed;
  else throw ConfigError("base_mode", "expected spatial, planar or fixed");
  const std::string contact = text_or(doc, "contact", "point", "");
  if (contact == "point") m.contact_kind = ContactKind::Point;
  else if (contact == "clamp") m.contact_kind = ContactKind::Clamp;
  else throw ConfigError("contact", "expected point or clamp");

  const Json& base = member(doc, "base", "");
  m.base.name = "base";
  m.base.mass = number(base, "mass_g", "base.") * 1e-3;
  m.base.inertia = inertia_tensor(member(base, "inertia_kgm2", "base."), "base.inertia_kgm2");
  m.base.com = vec3_or(base, "com_mm", Vec3::Zero(), "base.") * 1e-3;
  if (base.contains("size_mm")) m.base.length = numbers(base.at("size_mm"), "base.size_mm").at(0) * 1e-3;

  const Json& segments = member(doc, "segments", "");
  const Json& limbs = member(doc, "limbs", "");
  if (!limbs.is_array() || limbs.empty()) throw ConfigError("limbs", "expected a non-empty array");
  for (std::size_t li = 0; li < limbs.size(); ++li) {
    const std::string lp = "limbs[" + std::to_string(li) + "].";
    const Json& lj = limbs[li];
    LimbSpec limb;
    limb.name = text(lj, "name", lp);
    const Vec3 mount = vec3(member(lj, "mount_mm", lp), lp + "mount_mm") * 1e-3;
    const double yaw = deg2rad(number_or(lj, "yaw_deg", 0.0, lp));
    const Json& names = member(lj, "segments", lp);
    if (!names.is_array() || names.empty()) throw ConfigError(lp + "segments", "expected a non-empty array");
    double prev_length = 0.0;
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (!names[k].is_string()) throw ConfigError(lp + "segments", "expected segment names");
      const std::string sname = names[k].get<std::string>();
      const std::string sp = "segments." + sname + ".";
      if (!segments.contains(sname)) throw ConfigError("segments." + sname, "unknown segment");
      const Json& sj = segments.at(sname);
      LinkSpec l;
      const double length = number(sj, "length_mm", sp) * 1e-3;
      l.body.name = limb.name + "." + sname;
      l.body.mass = number(sj, "mass_g", sp) * 1e-3;
      l.body.inertia = inertia_tensor(member(sj, "inertia_kgm2", sp), sp + "inertia_kgm2");
      l.body.com = vec3_or(sj, "com_mm", Vec3(0.5 * length * 1e3, 0.0, 0.0), sp) * 1e-3;
      l.body.length = length;
      l.axis = vec3(member(sj, "axis", sp), sp + "axis");
      const std::vector<double> lim = numbers(member(sj, "limits_deg", sp), sp + "limits_deg");
      if (lim.size() != 2) throw ConfigError(sp + "limits_deg", "expected [lower, upper]");
      l.lower = deg2rad(lim[0]);
      l.upper = deg2rad(lim[1]);
      if (k == 0) {
        l.parent = -1;
        l.offset = mount;
        l.mount = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
      } else {
        l.parent = static_cast<int>(m.links.size()) - 1;
        l.offset = Vec3(prev_length, 0.0, 0.0);
      }
      prev_length = length;
      limb.joints.push_back(static_cast<int>(m.links.size()));
      m.links.push_back(l);
    }
    limb.tip = Vec3(prev_length, 0.0, 0.0);
    m.limbs.push_back(limb);
  }
  try {
    m.finalize();
  } catch (const ModelError& e) {
    throw ConfigError("robot", e.what());
  }
  return m;
}

namespace {

Json parse_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string body = ss.str();
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, body.size());
    const auto line = 1 + std::count(body.begin(), body.begin() + static_cast<long>(pos), '\n');
    const auto nl = body.rfind('\n', pos == 0 ? 0 : pos - 1);
    const std::size_t column = nl == std::string::npos ? pos + 1 : pos - nl;
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(column),
                      "syntax error");
  }
}

}  // namespace

RobotModel load_robot(const fs::path& path) {
  try {
    return robot_from_json(parse_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.field(), e.message());
  }
}

fs::path ScenarioConfig::robot_path() const {
  const fs::path p(robot);
  return p.is_absolute() ? p : directory / p;
}

fs::path ScenarioConfig::output_path() const {
  const fs::path p(output_dir);
  return p.is_absolute() ? p : directory / p;
}

void ScenarioConfig::validate() const {
  if (schema_version != 1) throw ConfigError("schema_version", "unsupported version");
  if (!fs::exists(robot_path())) throw ConfigError("robot", "file not found: " + robot_path().string());
  switch (mode) {
    case PlanMode::PMD:
      if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha", "PMD needs 0 < alpha < 1");
      break;
    case PlanMode::FMD:
      if (alpha != 1.0) throw ConfigError("alpha", "FMD runs with alpha = 1");
      break;
    default:
      if (alpha != 0.0) throw ConfigError("alpha", to_string(mode) + " runs with alpha = 0");
  }
  if (gait.type != "crawl" && gait.type != "single_step") {
    throw ConfigError("gait.type", "expected crawl or single_step");
  }
  if (!(gait.stride > 0.0)) throw ConfigError("gait.stride", "must be positive");
  if (!(gait.step_height > 0.0)) throw ConfigError("gait.step_height", "must be positive");
  if (!(gait.swing_period > 0.0)) throw ConfigError("gait.swing_period", "must be positive");
  if (gait.type == "crawl") {
    if (gait.base_shift < 0.0) throw ConfigError("gait.base_shift", "must be non-negative");
    if (gait.shift_period < 0.0) throw ConfigError("gait.shift_period", "must be non-negative");
    if (gait.cycles < 1) throw ConfigError("gait.cycles", "must be at least 1");
    if (gait.release_fraction < 0.0 || gait.grasp_fraction < 0.0 ||
        gait.release_fraction + gait.grasp_fraction >= 1.0) {
      throw ConfigError("gait.release_fraction", "release and grasp must leave time for the swing");
    }
  } else if (gait.swing_limb.empty()) {
    throw ConfigError("gait.swing_limb", "single_step needs the swing limb");
  }
  if (gait.samples < 16) throw ConfigError("gait.samples", "need at least 16 samples per swing");
  if (gait.direction.norm() == 0.0) throw ConfigError("gait.direction", "must be non-zero");
  if (gait.up.norm() == 0.0) throw ConfigError("gait.up", "must be non-zero");
  try {
    lrst.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("lrst", e.what());
  }
  if (optimizer_starts < 1) throw ConfigError("optimizer.starts", "must be at least 1");
  if (simplex.max_iterations < 1) throw ConfigError("optimizer.max_iterations", "must be at least 1");
  if (!(simplex.diameter_tolerance > 0.0)) throw ConfigError("optimizer.tolerance", "must be positive");
  if (!(simplex.initial_step > 0.0)) throw ConfigError("optimizer.initial_step", "must be positive");
  if (!(singularity_threshold > 0.0)) throw ConfigError("distribution.singularity_threshold", "must be positive");
  contact.validate();
  if (sim.kp.empty() || sim.kp.size() != sim.kd.size()) {
    throw ConfigError("sim.kp", "kp and kd need one entry per limb joint");
  }
  for (std::size_t i = 0; i < sim.kp.size(); ++i) {
    if (sim.kp[i] < 0.0 || sim.kd[i] < 0.0) throw ConfigError("sim.kp", "gains must be non-negative");
  }
  if (!(sim.timestep > 0.0)) throw ConfigError("sim.timestep", "must be positive");
  if (!(sim.duration > 0.0)) throw ConfigError("sim.duration", "must be positive");
  if (sim.gravity < 0.0) throw ConfigError("sim.gravity", "must be non-negative");
}

ScenarioConfig scenario_from_json(const Json& doc, const fs::path& directory) {
  if (!doc.is_object()) throw ConfigError("", "scenario must be a JSON object");
  ScenarioConfig c;
  c.directory = directory;
  c.schema_version = integer_or(doc, "schema_version", 1, "");
  c.robot = text(doc, "robot", "");
  c.mode = parse_mode(text(doc, "mode", ""));
  c.alpha = number_or(doc, "alpha", c.mode == PlanMode::FMD ? 1.0 : 0.0, "");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }
  c.output_dir = text_or(doc, "output_dir", c.output_dir, "");

  const Json& g = member(doc, "gait", "");
  c.gait.type = text_or(g, "type", c.gait.type, "gait.");
  c.gait.stride = number_or(g, "stride", c.gait.stride, "gait.");
  c.gait.step_height = number_or(g, "step_height", c.gait.step_height, "gait.");
  c.gait.swing_period = number_or(g, "swing_period", c.gait.swing_period, "gait.");
  c.gait.base_shift = number_or(g, "base_shift", c.gait.base_shift, "gait.");
  c.gait.shift_period = number_or(g, "shift_period", c.gait.shift_period, "gait.");
  c.gait.release_height = number_or(g, "release_height", c.gait.release_height, "gait.");
  c.gait.grasp_height = number_or(g, "grasp_height", c.gait.grasp_height, "gait.");
  c.gait.release_fraction = number_or(g, "release_fraction", c.gait.release_fraction, "gait.");
  c.gait.grasp_fraction = number_or(g, "grasp_fraction", c.gait.grasp_fraction, "gait.");
  c.gait.cycles = integer_or(g, "cycles", c.gait.cycles, "gait.");
  if (g.contains("order")) {
    for (const Json& n : g.at("order")) {
      if (!n.is_string()) throw ConfigError("gait.order", "expected limb names");
      c.gait.order.push_back(n.get<std::string>());
    }
  }
  c.gait.swing_limb = text_or(g, "swing_limb", "", "gait.");
  c.gait.direction = vec3_or(g, "direction", c.gait.direction, "gait.");
  c.gait.up = vec3_or(g, "up", c.gait.up, "gait.");
  c.gait.samples = integer_or(g, "samples", c.gait.samples, "gait.");

  const Json& st = member(doc, "stance", "");
  const Json& feet = member(st, "feet", "stance.");
  if (!feet.is_object()) throw ConfigError("stance.feet", "expected an object keyed by limb name");
  for (auto it = feet.begin(); it != feet.end(); ++it) {
    c.stance.feet[it.key()] = vec3(it.value(), "stance.feet." + it.key());
  }
  if (st.contains("seed_deg")) {
    const Json& sd = st.at("seed_deg");
    if (sd.is_object()) {
      for (auto it = sd.begin(); it != sd.end(); ++it) {
        for (double d : numbers(it.value(), "stance.seed_deg." + it.key())) {
          c.stance.limb_seeds[it.key()].push_back(deg2rad(d));
        }
      }
    } else {
      for (double d : numbers(sd, "stance.seed_deg")) c.stance.seed.push_back(deg2rad(d));
    }
  }
  c.stance.base_position = vec3_or(st, "base_position", Vec3::Zero(), "stance.");
  c.stance.base_yaw = deg2rad(number_or(st, "base_yaw_deg", 0.0, "stance."));

  if (doc.contains("lrst")) {
    const Json& l = doc.at("lrst");
    c.lrst.k1 = number_or(l, "k1", c.lrst.k1, "lrst.");
    c.lrst.k2 = number_or(l, "k2", c.lrst.k2, "lrst.");
    c.lrst.k3 = number_or(l, "k3", c.lrst.k3, "lrst.");
    c.lrst.sample_count = integer_or(l, "samples", c.lrst.sample_count, "lrst.");
  }
  c.lrst.height = c.gait.step_height;
  if (doc.contains("optimizer")) {
    const Json& o = doc.at("optimizer");
    c.optimizer_starts = integer_or(o, "starts", c.optimizer_starts, "optimizer.");
    c.simplex.max_iterations = integer_or(o, "max_iterations", c.simplex.max_iterations, "optimizer.");
    c.simplex.diameter_tolerance = number_or(o, "tolerance", c.simplex.diameter_tolerance, "optimizer.");
    c.simplex.initial_step = number_or(o, "initial_step", c.simplex.initial_step, "optimizer.");
  }
  if (doc.contains("distribution")) {
    c.singularity_threshold =
        number_or(doc.at("distribution"), "singularity_threshold", c.singularity_threshold, "distribution.");
  }
  if (doc.contains("contact")) {
    const Json& k = doc.at("contact");
    c.contact.stiffness = number_or(k, "stiffness", c.contact.stiffness, "contact.");
    c.contact.damping = number_or(k, "damping", c.contact.damping, "contact.");
    c.contact.holding_force = number_or(k, "holding_force", c.contact.holding_force, "contact.");
    c.contact.rot_stiffness = number_or(k, "rot_stiffness", c.contact.rot_stiffness, "contact.");
    c.contact.rot_damping = number_or(k, "rot_damping", c.contact.rot_damping, "contact.");
  }
  c.contact.normal = c.gait.up.normalized();

  const Json& s = member(doc, "sim", "");
  c.sim.gravity = number_or(s, "gravity", c.sim.gravity, "sim.");
  c.sim.timestep = number_or(s, "timestep", c.sim.timestep, "sim.");
  c.sim.duration = number_or(s, "duration", c.sim.duration, "sim.");
  c.sim.kp = numbers(member(s, "kp", "sim."), "sim.kp");
  c.sim.kd = numbers(member(s, "kd", "sim."), "sim.kd");
  c.sim.goal = number_or(s, "goal", c.sim.goal, "sim.");
  c.sim.goal_tolerance = number_or(s, "goal_tolerance", c.sim.goal_tolerance, "sim.");
  c.sim.float_time = number_or(s, "float_time", c.sim.float_time, "sim.");
  c.sim.log_interval = number_or(s, "log_interval", c.sim.log_interval, "sim.");
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const fs::path& path) {
  const Json doc = parse_file(path);
  return scenario_from_json(doc, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

Json to_json(const ScenarioConfig& c) {
  Json j;
  j["schema_version"] = c.schema_version;
  j["robot"] = c.robot;
  j["mode"] = to_string(c.mode);
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  Json g;
  g["type"] = c.gait.type;
  g["stride"] = c.gait.stride;
  g["step_height"] = c.gait.step_height;
  g["swing_period"] = c.gait.swing_period;
  g["base_shift"] = c.gait.base_shift;
  g["shift_period"] = c.gait.shift_period;
  g["release_height"] = c.gait.release_height;
  g["grasp_height"] = c.gait.grasp_height;
  g["release_fraction"] = c.gait.release_fraction;
  g["grasp_fraction"] = c.gait.grasp_fraction;
  g["cycles"] = c.gait.cycles;
  g["order"] = c.gait.order;
  g["swing_limb"] = c.gait.swing_limb;
  g["direction"] = to_array(c.gait.direction);
  g["up"] = to_array(c.gait.up);
  g["samples"] = c.gait.samples;
  j["gait"] = g;
  Json feet = Json::object();
  for (const auto& [name, p] : c.stance.feet) feet[name] = to_array(p);
  auto degrees = [](const std::vector<double>& v) {
    Json a = Json::array();
    for (double r : v) a.push_back(rad2deg(r));
    return a;
  };
  Json seed = degrees(c.stance.seed);
  if (!c.stance.limb_seeds.empty()) {
    seed = Json::object();
    for (const auto& [name, v] : c.stance.limb_seeds) seed[name] = degrees(v);
  }
  j["stance"] = {{"feet", feet},
                 {"seed_deg", seed},
                 {"base_position", to_array(c.stance.base_position)},
                 {"base_yaw_deg", rad2deg(c.stance.base_yaw)}};
  j["lrst"] = {{"k1", c.lrst.k1}, {"k2", c.lrst.k2}, {"k3", c.lrst.k3}, {"samples", c.lrst.sample_count}};
  j["optimizer"] = {{"starts", c.optimizer_starts},
                    {"max_iterations", c.simplex.max_iterations},
                    {"tolerance", c.simplex.diameter_tolerance},
                    {"initial_step", c.simplex.initial_step}};
  j["distribution"] = {{"singularity_threshold", c.singularity_threshold}};
  j["contact"] = {{"stiffness", c.contact.stiffness},
                  {"damping", c.contact.damping},
                  {"holding_force", c.contact.holding_force},
                  {"rot_stiffness", c.contact.rot_stiffness},
                  {"rot_damping", c.contact.rot_damping}};
  j["sim"] = {{"gravity", c.sim.gravity},
              {"timestep", c.sim.timestep},
              {"duration", c.sim.duration},
              {"kp", c.sim.kp},
              {"kd", c.sim.kd},
              {"goal", c.sim.goal},
              {"goal_tolerance", c.sim.goal_tolerance},
              {"float_time", c.sim.float_time},
              {"log_interval", c.sim.log_interval}};
  return j;
}

namespace {

int limb_index(const RobotModel& model, const std::string& name, const std::string& field) {
  for (int i = 0; i < model.num_limbs(); ++i) {
    if (model.limbs[i].name == name) return i;
  }
  throw ConfigError(field, "unknown limb '" + name + "'");
}

}  // namespace

Scenario prepare(const ScenarioConfig& config) {
  config.validate();
  Scenario sc;
  sc.config = config;
  sc.model = load_robot(config.robot_path());
  const RobotModel& m = sc.model;
  const Vec3 dir = config.gait.direction.normalized();
  const Vec3 up = config.gait.up.normalized();

  sc.initial = SystemState::zero(m);
  sc.initial.base_position = config.stance.base_position;
  sc.initial.base_orientation = Quat(Eigen::AngleAxisd(config.stance.base_yaw, Vec3::UnitZ()));
  const Mat3 rb = sc.initial.base_orientation.toRotationMatrix();

  std::vector<int> order;
  for (const std::string& n : config.gait.order) order.push_back(limb_index(m, n, "gait.order"));
  CrawlParameters crawl;
  crawl.stride = config.gait.stride;
  crawl.step_height = config.gait.step_height;
  crawl.swing_period = config.gait.swing_period;
  crawl.base_shift = config.gait.base_shift;
  crawl.shift_duration = config.gait.shift_period;
  crawl.release_height = config.gait.release_height;
  crawl.grasp_height = config.gait.grasp_height;
  crawl.release_fraction = config.gait.release_fraction;
  crawl.grasp_fraction = config.gait.grasp_fraction;
  crawl.cycles = config.gait.cycles;
  crawl.order = order;
  crawl.direction = dir;
  crawl.up = up;
  std::vector<double> stagger(m.num_limbs(), 0.0);
  if (config.gait.type == "crawl") {
    if (crawl.order.empty()) {
      for (int i = 0; i < m.num_limbs(); ++i) crawl.order.push_back(i);
    }
    const std::vector<double> s = crawl_stagger(crawl);
    for (std::size_t k = 0; k < crawl.order.size(); ++k) stagger[crawl.order[k]] = s[k];
  }

  std::vector<Vec3> grasps(m.num_limbs());
  for (int i = 0; i < m.num_limbs(); ++i) {
    const auto it = config.stance.feet.find(m.limbs[i].name);
    if (it == config.stance.feet.end()) throw ConfigError("stance.feet." + m.limbs[i].name, "missing foot");
    grasps[i] = sc.initial.base_position + rb * it->second + stagger[i] * dir;
    const int nj = static_cast<int>(m.limbs[i].joints.size());
    VecX seed = VecX::Zero(nj);
    const auto own = config.stance.limb_seeds.find(m.limbs[i].name);
    const std::vector<double>& given = own != config.stance.limb_seeds.end() ? own->second : config.stance.seed;
    if (!given.empty() && static_cast<int>(given.size()) != nj) {
      throw ConfigError("stance.seed_deg", "need one angle per joint of limb " + m.limbs[i].name);
    }
    for (int k = 0; k < static_cast<int>(given.size()); ++k) seed[k] = given[k];
    try {
      sc.initial.set_limb_angles(m, i, inverse_kinematics(m, i, {grasps[i], std::nullopt}, sc.initial.base_position,
                                                           sc.initial.base_orientation, seed));
    } catch (const Error& e) {
      throw ConfigError("stance.feet." + m.limbs[i].name, std::string("initial stance infeasible: ") + e.what());
    }
    grasps[i] = forward_kinematics(m, sc.initial).tip_positions[i];
  }

  if (config.gait.type == "crawl") {
    sc.schedule = build_crawl_schedule(crawl, grasps);
  } else {
    const int limb = limb_index(m, config.gait.swing_limb, "gait.swing_limb");
    sc.schedule = build_single_step_schedule(limb, grasps[limb], grasps[limb] + config.gait.stride * dir,
                                             config.gait.step_height, config.gait.swing_period, up);
  }

  sc.plan_options.mode = config.mode;
  sc.plan_options.alpha = config.alpha;
  sc.plan_options.weights = config.lrst;
  sc.plan_options.weights.height = config.gait.step_height;
  sc.plan_options.optimizer.starts = config.optimizer_starts;
  sc.plan_options.optimizer.simplex = config.simplex;
  sc.plan_options.optimizer.seed = config.seed;
  sc.plan_options.distribution.singularity_threshold = config.singularity_threshold;
  sc.plan_options.distribution.samples = config.gait.samples;
  sc.plan_options.allow_partial = true;

  sc.sim.gravity = -config.sim.gravity * up;
  sc.sim.timestep = config.sim.timestep;
  sc.sim.duration = config.sim.duration;
  sc.sim.contact = config.contact;
  sc.sim.goal_displacement = config.sim.goal;
  sc.sim.goal_direction = dir;
  sc.sim.goal_tolerance = config.sim.goal_tolerance;
  sc.sim.float_time = config.sim.float_time;
  sc.sim.log_interval = config.sim.log_interval;
  sc.sim.gains.kp = VecX::Zero(m.dof());
  sc.sim.gains.kd = VecX::Zero(m.dof());
  for (const LimbSpec& l : m.limbs) {
    if (l.joints.size() != config.sim.kp.size()) {
      throw ConfigError("sim.kp", "need one gain per joint of limb " + l.name);
    }
    for (std::size_t k = 0; k < l.joints.size(); ++k) {
      sc.sim.gains.kp[l.joints[k]] = config.sim.kp[k];
      sc.sim.gains.kd[l.joints[k]] = config.sim.kd[k];
    }
  }
  sc.sim.validate(m);
  return sc;
}

int exit_code(Termination cause) {
  switch (cause) {
    case Termination::GoalReached: return 0;
    case Termination::DetachedFloating: return 2;
    case Termination::Singularity: return 3;
    case Termination::TimeOut: return 4;
    case Termination::NumericalBlowup: return 5;
  }
  return 1;
}

RunSummary summarize(const Scenario& sc, const MotionPlan& plan, const SimLog* log) {
  RunSummary s;
  s.name = fs::path(sc.config.output_dir).filename().string();
  s.mode = to_string(sc.config.mode);
  s.alpha = plan.alpha;
  s.plan_failure = plan.failure;
  for (const ObjectiveValue& v : plan.swing_objectives) {
    if (v.feasible && sc.config.lrst.k1 > 0.0) {
      s.plan_peak_momentum_rate = std::max(s.plan_peak_momentum_rate, v.j1 / sc.config.lrst.k1);
    }
  }
  for (const SwingPlan& sp : plan.swings) {
    std::array<Vec3, 8> pts{};
    if (const auto* b = std::get_if<BezierCurve>(&sp.path)) {
      pts = b->points;
    } else {
      const auto& v = std::get<ViaPointSpline>(sp.path);
      pts = {v.start, v.start, v.start, v.apex, v.apex, v.target, v.target, v.target};
    }
    s.control_points.push_back(pts);
  }
  if (!log) {
    s.cause = plan.failure ? (plan.failure->kind == "singularity" ? "singularity" : "planner_infeasible")
                           : "planned";
    s.exit_code = plan.failure ? (plan.failure->kind == "singularity" ? 3 : 6) : 0;
    s.end_time = plan.end_time();
    return s;
  }
  s.cause = to_string(log->cause);
  s.exit_code = exit_code(log->cause);
  s.end_time = log->end_time;
  s.distance = log->displacement;
  s.unplanned_detachments = log->unplanned_detachments;
  s.events = log->events;
  const Quat q0 = log->samples.front().state.base_orientation;
  double sum_f = 0.0, sum_m = 0.0;
  for (const LogSample& ls : log->samples) {
    double f = 0.0, mo = 0.0;
    for (const ContactSample& c : ls.contacts) {
      if (!c.attached) continue;
      f = std::max(f, c.force.norm());
      mo = std::max(mo, c.moment.norm());
    }
    s.max_force = std::max(s.max_force, f);
    s.max_moment = std::max(s.max_moment, mo);
    sum_f += f;
    sum_m += mo;
    s.peak_force_rate = std::max(s.peak_force_rate, ls.external.head<3>().norm());
    s.peak_moment_rate = std::max(s.peak_moment_rate, ls.external.tail<3>().norm());
    s.attitude_excursion =
        std::max(s.attitude_excursion, rad2deg(q0.angularDistance(ls.state.base_orientation)));
  }
  s.mean_force = sum_f / static_cast<double>(log->samples.size());
  s.mean_moment = sum_m / static_cast<double>(log->samples.size());
  return s;
}

RunResult run(const ScenarioConfig& config, bool plan_only) {
  RunResult r{prepare(config), {}, std::nullopt, {}};
  r.plan = assemble_plan(r.scenario.model, r.scenario.schedule, r.scenario.plan_options, r.scenario.initial,
                         config.gait.samples);
  const bool infeasible = r.plan.failure && r.plan.failure->kind != "singularity";
  if (!plan_only && !infeasible) r.log = run_scenario(r.scenario.model, r.plan, r.scenario.sim);
  r.summary = summarize(r.scenario, r.plan, r.log ? &*r.log : nullptr);
  return r;
}

Json to_json(const RunSummary& s) {
  Json j;
  j["schema_version"] = 1;
  j["name"] = s.name;
  j["mode"] = s.mode;
  j["alpha"] = s.alpha;
  j["cause"] = s.cause;
  j["exit_code"] = s.exit_code;
  j["end_time"] = s.end_time;
  j["distance"] = s.distance;
  j["unplanned_detachments"] = s.unplanned_detachments;
  j["stats"] = {{"max_force", s.max_force},
                {"mean_force", s.mean_force},
                {"max_moment", s.max_moment},
                {"mean_moment", s.mean_moment},
                {"peak_force_rate", s.peak_force_rate},
                {"peak_moment_rate", s.peak_moment_rate},
                {"attitude_excursion_deg", s.attitude_excursion},
                {"plan_peak_momentum_rate", s.plan_peak_momentum_rate}};
  if (s.plan_failure) {
    j["plan_failure"] = {{"kind", s.plan_failure->kind},
                         {"phase", s.plan_failure->phase},
                         {"time", s.plan_failure->time},
                         {"message", s.plan_failure->message}};
  } else {
    j["plan_failure"] = nullptr;
  }
  Json ev = Json::array();
  for (const SimEvent& e : s.events) {
    ev.push_back({{"time", e.time}, {"kind", e.kind}, {"limb", e.limb}, {"value", e.value}, {"detail", e.detail}});
  }
  j["events"] = ev;
  Json swings = Json::array();
  for (const auto& pts : s.control_points) {
    Json a = Json::array();
    for (const Vec3& p : pts) a.push_back(to_array(p));
    swings.push_back(a);
  }
  j["swing_control_points"] = swings;
  return j;
}

namespace {

class AtomicFile {
 public:
  explicit AtomicFile(fs::path target) : target_(std::move(target)), tmp_(target_.string() + ".tmp") {
    out_.open(tmp_);
    if (!out_) throw Error("cannot write " + tmp_.string());
    out_ << std::setprecision(17);
  }
  std::ofstream& stream() { return out_; }
  void commit() {
    out_.close();
    fs::rename(tmp_, target_);
  }

 private:
  fs::path target_;
  fs::path tmp_;
  std::ofstream out_;
};

}  // namespace

void write_outputs(const RunResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  const RobotModel& m = r.scenario.model;
  const int n = m.dof();
  {
    AtomicFile f(dir / "plan.csv");
    auto& o = f.stream();
    o << "time,phase,base_x,base_y,base_z,base_qw,base_qx,base_qy,base_qz";
    for (const char* c : {"vx", "vy", "vz", "wx", "wy", "wz"}) o << ",base_" << c;
    for (int i = 0; i < n; ++i) o << ",q" << i;
    for (int i = 0; i < n; ++i) o << ",qd" << i;
    for (const LimbSpec& l : m.limbs) o << "," << l.name << "_x," << l.name << "_y," << l.name << "_z," << l.name << "_attached";
    o << "\n";
    for (const PlanSample& p : r.plan.samples) {
      const SystemState& s = p.state;
      o << s.time << "," << p.phase << "," << s.base_position.x() << "," << s.base_position.y() << ","
        << s.base_position.z() << "," << s.base_orientation.w() << "," << s.base_orientation.x() << ","
        << s.base_orientation.y() << "," << s.base_orientation.z();
      for (int k = 0; k < 6; ++k) o << "," << s.base_twist[k];
      for (int i = 0; i < n; ++i) o << "," << s.joint_angles[i];
      for (int i = 0; i < n; ++i) o << "," << s.joint_rates[i];
      for (int l = 0; l < m.num_limbs(); ++l) {
        o << "," << p.end_effectors[l].x() << "," << p.end_effectors[l].y() << "," << p.end_effectors[l].z() << ","
          << (p.attached[l] ? 1 : 0);
      }
      o << "\n";
    }
    f.commit();
  }
  if (r.log) {
    AtomicFile f(dir / "results.csv");
    auto& o = f.stream();
    o << "time,base_x,base_y,base_z,base_qw,base_qx,base_qy,base_qz";
    for (int i = 0; i < n; ++i) o << ",q" << i;
    for (const LimbSpec& l : m.limbs) {
      o << "," << l.name << "_attached";
      for (const char* c : {"fx", "fy", "fz", "mx", "my", "mz"}) o << "," << l.name << "_" << c;
    }
    for (const char* c : {"px", "py", "pz", "lx", "ly", "lz"}) o << ",momentum_" << c;
    o << "\n";
    for (const LogSample& ls : r.log->samples) {
      const SystemState& s = ls.state;
      o << s.time << "," << s.base_position.x() << "," << s.base_position.y() << "," << s.base_position.z() << ","
        << s.base_orientation.w() << "," << s.base_orientation.x() << "," << s.base_orientation.y() << ","
        << s.base_orientation.z();
      for (int i = 0; i < n; ++i) o << "," << s.joint_angles[i];
      for (const ContactSample& c : ls.contacts) {
        o << "," << (c.attached ? 1 : 0);
        for (int k = 0; k < 3; ++k) o << "," << c.force[k];
        for (int k = 0; k < 3; ++k) o << "," << c.moment[k];
      }
      for (int k = 0; k < 6; ++k) o << "," << ls.momentum[k];
      o << "\n";
    }
    f.commit();
  }
  {
    AtomicFile f(dir / "summary.json");
    f.stream() << to_json(r.summary).dump(2) << "\n";
    f.commit();
  }
}

void check_comparable(const std::vector<ScenarioConfig>& configs) {
  if (configs.empty()) throw ComparisonError("nothing to compare");
  auto shared = [](const ScenarioConfig& c) {
    Json j = to_json(c);
    j.erase("mode");
    j.erase("alpha");
    j.erase("output_dir");
    j["robot"] = fs::weakly_canonical(c.robot_path()).string();
    return j;
  };
  const Json ref = shared(configs.front());
  for (std::size_t i = 1; i < configs.size(); ++i) {
    const Json other = shared(configs[i]);
    if (other != ref) {
      std::string field = "?";
      for (auto it = ref.begin(); it != ref.end(); ++it) {
        if (!other.contains(it.key()) || other.at(it.key()) != it.value()) {
          field = it.key();
          break;
        }
      }
      throw ComparisonError("config " + std::to_string(i) + " differs from config 0 in '" + field +
                            "'; only mode and alpha may differ");
    }
  }
}

namespace {

double ratio(double value, double reference) {
  if (reference == 0.0) return value == 0.0 ? 1.0 : kInf;
  return value / reference;
}

}  // namespace

ComparisonSummary compare(const std::vector<RunSummary>& runs) {
  ComparisonSummary out;
  if (runs.empty()) throw ComparisonError("nothing to compare");
  out.reference = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].mode == "BL") {
      out.reference = static_cast<int>(i);
      break;
    }
  }
  const RunSummary& ref = runs[out.reference];
  for (const RunSummary& r : runs) {
    ComparisonEntry e;
    e.summary = r;
    e.max_force_ratio = ratio(r.max_force, ref.max_force);
    e.mean_force_ratio = ratio(r.mean_force, ref.mean_force);
    e.max_moment_ratio = ratio(r.max_moment, ref.max_moment);
    e.mean_moment_ratio = ratio(r.mean_moment, ref.mean_moment);
    out.entries.push_back(e);
  }
  return out;
}

Json to_json(const ComparisonSummary& c) {
  Json j;
  j["schema_version"] = 1;
  j["reference"] = c.reference;
  Json runs = Json::array();
  for (const ComparisonEntry& e : c.entries) {
    Json r = to_json(e.summary);
    r.erase("events");
    r.erase("swing_control_points");
    r["ratios"] = {{"max_force", e.max_force_ratio},
                   {"mean_force", e.mean_force_ratio},
                   {"max_moment", e.max_moment_ratio},
                   {"mean_moment", e.mean_moment_ratio}};
    runs.push_back(r);
  }
  j["runs"] = runs;
  return j;
}

std::string format_table(const ComparisonSummary& c) {
  std::ostringstream o;
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %5s %-18s %8s %9s %9s %9s %9s %7s %7s %7s %7s\n", "mode", "alpha",
                "cause", "dist[m]", "maxF[N]", "meanF[N]", "maxM[Nm]", "meanM[Nm]", "maxF%", "meanF%", "maxM%",
                "meanM%");
  o << line;
  for (const ComparisonEntry& e : c.entries) {
    const RunSummary& s = e.summary;
    std::snprintf(line, sizeof line, "%-6s %5.2f %-18s %8.4f %9.4f %9.4f %9.5f %9.5f %7.1f %7.1f %7.1f %7.1f\n",
                  s.mode.c_str(), s.alpha, s.cause.c_str(), s.distance, s.max_force, s.mean_force, s.max_moment,
                  s.mean_moment, 100.0 * e.max_force_ratio, 100.0 * e.mean_force_ratio,
                  100.0 * e.max_moment_ratio, 100.0 * e.mean_moment_ratio);
    o << line;
  }
  return o.str();
}

}  // namespace ramp
