/*
 * Copyright 2026 The magslam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "magslam/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace magslam {

namespace {

using nlohmann::json;

// Reads the members of one JSON object and rejects unknown keys.
class ObjectReader {
public:
  ObjectReader(const json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) {
      throw ConfigError(where() + ": expected an object");
    }
  }

  bool has(const std::string &key) const { return obj_.contains(key); }

  template <typename T>
  void get(const std::string &key, T &out) {
    if (!obj_.contains(key)) {
      return;
    }
    seen_.insert(key);
    const json &v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) {
          throw ConfigError(field(key) + ": expected a boolean");
        }
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v.is_number()) {
          throw ConfigError(field(key) + ": expected a number");
        }
        if constexpr (std::is_integral_v<T>) {
          if (!v.is_number_integer()) {
            throw ConfigError(field(key) + ": expected an integer");
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) {
          throw ConfigError(field(key) + ": expected a string");
        }
      }
      out = v.get<T>();
    } catch (const json::exception &e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  void get(const std::string &key, std::optional<double> &out) {
    if (!obj_.contains(key)) {
      return;
    }
    if (obj_.at(key).is_null()) {
      seen_.insert(key);
      out.reset();
      return;
    }
    double v = 0.0;
    get(key, v);
    out = v;
  }

  void get(const std::string &key, Vec3 &out) {
    if (!obj_.contains(key)) {
      return;
    }
    seen_.insert(key);
    const json &v = obj_.at(key);
    if (!v.is_array() || v.size() != 3) {
      throw ConfigError(field(key) + ": expected an array of 3 numbers");
    }
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a number");
      }
      out[i] = v[i].get<double>();
    }
  }

  std::optional<ObjectReader> child(const std::string &key) {
    if (!obj_.contains(key)) {
      return std::nullopt;
    }
    seen_.insert(key);
    return ObjectReader(obj_.at(key), field(key));
  }

  void finish() const {
    for (const auto &[key, value] : obj_.items()) {
      if (!seen_.count(key)) {
        throw ConfigError(field(key) + ": unknown key");
      }
    }
  }

  std::string field(const std::string &key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json &obj_;
  std::string path_;
  std::set<std::string> seen_;
};

json vec_json(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }

std::string method_name(FieldMethod m) {
  return m == FieldMethod::Dense ? "dense" : "reduced_rank";
}

FieldMethod parse_method(const std::string &s, const std::string &path) {
  if (s == "dense") {
    return FieldMethod::Dense;
  }
  if (s == "reduced_rank") {
    return FieldMethod::ReducedRank;
  }
  throw ConfigError(path + ": expected 'dense' or 'reduced_rank'");
}

double lemniscate_length(double side) {
  // arc length of (a sin t, a/2 sin 2t) over one period, midpoint rule
  const double a = 0.5 * side;
  constexpr int kSteps = 20000;
  double len = 0.0;
  for (int i = 0; i < kSteps; ++i) {
    const double t = 2.0 * kPi * (i + 0.5) / kSteps;
    len += std::hypot(a * std::cos(t), a * std::cos(2.0 * t)) * 2.0 * kPi / kSteps;
  }
  return len;
}

ScenarioPreset make_preset(std::string name, std::string label, double time, double length,
                           double ell, double ratio, Vec3 o_pos, Vec3 o_rot) {
  ScenarioPreset p;
  p.name = std::move(name);
  p.label = std::move(label);
  p.time_s = time;
  p.length_m = length;
  p.length_scale = ell;
  p.sigma_se_over_l = ratio;
  p.o_pos_mm_s = o_pos;
  p.o_rot_deg_s = o_rot;
  p.motion.rate = 10.0;
  p.motion.duration = time;
  return p;
}

// Square loop of the given side whose path length matches the table.
void square_analogue(ScenarioPreset &p, double side, bool turns) {
  MotionSpec &m = p.motion;
  m.kind = MotionKind::SquareLoop;
  m.side = side;
  m.turn_at_corners = turns;
  const int n_sides = std::max(1, static_cast<int>(std::llround(p.length_m / side)));
  m.laps = n_sides / 4.0;
  const double turn_time = turns ? (n_sides - 1) * 90.0 / m.turn_rate_deg : 0.0;
  m.speed = n_sides * side / std::max(p.time_s - turn_time, 1.0);
}

void snake_analogue(ScenarioPreset &p, int rows, double spacing) {
  MotionSpec &m = p.motion;
  m.kind = MotionKind::Snake;
  m.rows = rows;
  m.row_spacing = spacing;
  m.side = (p.length_m - (rows - 1) * spacing) / rows;
  m.turn_at_corners = true;
  const double turn_time = 2.0 * (rows - 1) * 90.0 / m.turn_rate_deg;
  m.speed = p.length_m / std::max(p.time_s - turn_time, 1.0);
}

void infinity_analogue(ScenarioPreset &p, double side) {
  MotionSpec &m = p.motion;
  m.kind = MotionKind::InfinityLoop;
  m.side = side;
  m.turn_at_corners = true;
  m.laps = p.length_m / lemniscate_length(side);
}

std::vector<ScenarioPreset> build_presets() {
  std::vector<ScenarioPreset> v;
  auto add = [&](ScenarioPreset p) { v.push_back(std::move(p)); };
  {
    auto p = make_preset("tiny_no_rot", "Tiny no rot", 40.5, 6.15, 0.15, 5.0,
                         Vec3(50, -50, 0), Vec3(0, 0, -1));
    square_analogue(p, 1.0, false);
    add(p);
  }
  {
    auto p = make_preset("tiny_yaw_rot", "Tiny yaw rot", 96.6, 6.23, 0.15, 5.0,
                         Vec3(50, -50, 0), Vec3(0, 0, -1));
    square_analogue(p, 1.0, true);
    add(p);
  }
  {
    auto p = make_preset("snake_wide_1", "Snake wide 1", 82.3, 52.0, 0.5, 1.25,
                         Vec3(-50, 50, 0), Vec3(0, 0, 1));
    snake_analogue(p, 4, 1.0);
    add(p);
  }
  {
    auto p = make_preset("snake_wide_2", "Snake wide 2", 70.7, 50.5, 0.85, 1.78,
                         Vec3(-25, 25, 0), Vec3(0, 0, 0.5));
    snake_analogue(p, 4, 1.0);
    add(p);
  }
  {
    auto p = make_preset("squares_short", "Squares short", 67.1, 45.4, 0.912, 1.88,
                         Vec3(-50, 50, 0), Vec3(0, 0, 1));
    square_analogue(p, 2.0, true);
    add(p);
  }
  {
    auto p = make_preset("squares_long", "Squares long", 98.2, 63.8, 0.975, 2.19,
                         Vec3(25, -25, 0), Vec3(0, 0, -0.5));
    square_analogue(p, 2.0, true);
    add(p);
  }
  {
    auto p = make_preset("snake_long", "Snake long", 164.0, 133.0, 0.712, 2.4,
                         Vec3(-50, 50, 0), Vec3(0, 0, 1));
    snake_analogue(p, 6, 1.0);
    add(p);
  }
  {
    auto p = make_preset("snake_thin_1", "Snake thin 1", 88.5, 62.4, 0.9, 0.9,
                         Vec3(25, -25, 0), Vec3(0, 0, -0.5));
    snake_analogue(p, 4, 0.5);
    add(p);
  }
  {
    auto p = make_preset("snake_thin_2", "Snake thin 2", 82.1, 63.4, 0.9, 0.9,
                         Vec3(-25, 25, 0), Vec3(0, 0, 0.5));
    snake_analogue(p, 4, 0.5);
    add(p);
  }
  {
    auto p = make_preset("infinity_symbol", "Infinity symbol", 57.2, 68.2, 1.07, 3.36,
                         Vec3(50, -50, 0), Vec3(0, 0, -1));
    infinity_analogue(p, 4.0);
    add(p);
  }
  return v;
}

void read_motion(ObjectReader &r, MotionSpec &m) {
  if (r.has("kind")) {
    std::string kind;
    r.get("kind", kind);
    try {
      m.kind = parse_motion(kind);
    } catch (const std::invalid_argument &) {
      throw ConfigError(r.field("kind") + ": unknown motion '" + kind + "'");
    }
  }
  r.get("duration", m.duration);
  r.get("rate", m.rate);
  r.get("radius", m.radius);
  r.get("wiggle_deg", m.wiggle_deg);
  r.get("yaw_amplitude_deg", m.yaw_amplitude_deg);
  r.get("max_rate_deg", m.max_rate_deg);
  r.get("laps", m.laps);
  r.get("side", m.side);
  r.get("speed", m.speed);
  r.get("rows", m.rows);
  r.get("row_spacing", m.row_spacing);
  r.get("turn_rate_deg", m.turn_rate_deg);
  r.get("turn_at_corners", m.turn_at_corners);
  r.finish();
}

json motion_json(const MotionSpec &m) {
  return json{{"kind", motion_name(m.kind)},
              {"duration", m.duration},
              {"rate", m.rate},
              {"radius", m.radius},
              {"wiggle_deg", m.wiggle_deg},
              {"yaw_amplitude_deg", m.yaw_amplitude_deg},
              {"max_rate_deg", m.max_rate_deg},
              {"laps", m.laps},
              {"side", m.side},
              {"speed", m.speed},
              {"rows", m.rows},
              {"row_spacing", m.row_spacing},
              {"turn_rate_deg", m.turn_rate_deg},
              {"turn_at_corners", m.turn_at_corners}};
}

} // namespace

std::string mode_name(RunMode mode) {
  switch (mode) {
  case RunMode::Slamma:
    return "slamma";
  case RunMode::Slcamma:
    return "slcamma";
  case RunMode::SingleMag:
    return "single_mag";
  case RunMode::DeadReckoning:
    return "dead_reckoning";
  }
  return "unknown";
}

RunMode parse_mode(const std::string &name) {
  for (RunMode m : {RunMode::Slamma, RunMode::Slcamma, RunMode::SingleMag,
                    RunMode::DeadReckoning}) {
    if (mode_name(m) == name) {
      return m;
    }
  }
  throw ConfigError("mode: unknown mode '" + name + "'");
}

double RunConfig::margin() const {
  return domain_margin ? *domain_margin : 2.0 * hyper.length_scale;
}

NoiseConfig RunConfig::noise_config() const {
  const double dt = 1.0 / motion.rate;
  NoiseConfig n;
  const Vec3 sp = sigma_pos_mm_s * 1e-3 * dt;
  const Vec3 sr = sigma_rot_deg_s * kDegToRad * dt;
  n.q_pos = sp.cwiseAbs2().asDiagonal();
  n.q_rot = sr.cwiseAbs2().asDiagonal();
  n.sigma_ver = sigma_ver;
  n.sigma_y = hyper.sigma_y;
  n.prior_scale_var = prior_scale_std * prior_scale_std;
  n.prior_bias_var = prior_bias_std * prior_bias_std;
  return n;
}

SimNoise RunConfig::sim_noise() const {
  SimNoise n;
  n.sigma_pos = sigma_pos_mm_s * 1e-3;
  n.sigma_rot = sigma_rot_deg_s * kDegToRad;
  n.offset_pos = o_pos_mm_s * 1e-3;
  n.offset_rot = o_rot_deg_s * kDegToRad;
  n.sigma_y = hyper.sigma_y;
  return n;
}

SlamOptions RunConfig::slam_options() const {
  SlamOptions o;
  o.mode = mode == RunMode::Slcamma ? FilterMode::Slcamma : FilterMode::Slamma;
  o.hyper = hyper;
  o.noise = noise_config();
  o.iteration = iteration;
  o.vertical_update = vertical_update;
  return o;
}

void RunConfig::validate() const {
  auto positive = [](double v, const char *path) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(path) + ": must be positive");
    }
  };
  auto non_negative = [](const Vec3 &v, const char *path) {
    if (!v.allFinite() || (v.array() < 0.0).any()) {
      throw ConfigError(std::string(path) + ": entries must be non-negative");
    }
  };
  if (schema_version != kSchemaVersion) {
    throw ConfigError("schema_version: unsupported version " + std::to_string(schema_version));
  }
  positive(hyper.length_scale, "hyper.length_scale");
  positive(hyper.sigma_se, "hyper.sigma_se");
  positive(hyper.sigma_lin, "hyper.sigma_lin");
  positive(hyper.sigma_y, "hyper.sigma_y");
  if (n_se_modes < 1) {
    throw ConfigError("n_se_modes: must be >= 1");
  }
  if (domain_margin && !(*domain_margin >= 0.0)) {
    throw ConfigError("domain_margin: must be non-negative");
  }
  non_negative(sigma_pos_mm_s, "noise.sigma_pos_mm_s");
  non_negative(sigma_rot_deg_s, "noise.sigma_rot_deg_s");
  positive(sigma_ver, "noise.sigma_ver");
  positive(prior_scale_std, "noise.prior_scale_std");
  positive(prior_bias_std, "noise.prior_bias_std");
  if (!o_pos_mm_s.allFinite() || !o_rot_deg_s.allFinite()) {
    throw ConfigError("drift: offsets must be finite");
  }
  if (field.sigma_cf && !(*field.sigma_cf >= 0.0)) {
    throw ConfigError("field.sigma_cf: must be non-negative");
  }
  if (field.length_scale) {
    positive(*field.length_scale, "field.length_scale");
  }
  if (field.n_modes < 1) {
    throw ConfigError("field.n_modes: must be >= 1");
  }
  try {
    motion.validate();
  } catch (const std::invalid_argument &e) {
    throw ConfigError(std::string("motion: ") + e.what());
  }
  if (calibration_ranges.scale_lo > calibration_ranges.scale_hi ||
      !(calibration_ranges.scale_lo > 0.0) ||
      calibration_ranges.bias_lo > calibration_ranges.bias_hi) {
    throw ConfigError("calibration: invalid ranges");
  }
  if (iteration.tau_max < 1) {
    throw ConfigError("iteration.tau_max: must be >= 1");
  }
  positive(iteration.conv_position, "iteration.conv_position");
  positive(iteration.conv_rotation, "iteration.conv_rotation_deg");
  positive(iteration.max_position_step, "iteration.max_position_step");
  if (single_mag_index < 0) {
    throw ConfigError("single_mag_index: must be non-negative");
  }
  if (mc < 1) {
    throw ConfigError("mc: must be >= 1");
  }
  positive(grid_spacing, "map.grid_spacing");
}

const std::vector<ScenarioPreset> &scenario_presets() {
  static const std::vector<ScenarioPreset> presets = build_presets();
  return presets;
}

const ScenarioPreset &find_preset(const std::string &name) {
  for (const auto &p : scenario_presets()) {
    if (p.name == name) {
      return p;
    }
  }
  throw ConfigError("preset: unknown preset '" + name + "'");
}

void apply_preset(const ScenarioPreset &preset, RunConfig &cfg) {
  cfg.preset = preset.name;
  cfg.hyper.length_scale = preset.length_scale;
  cfg.hyper.sigma_se = preset.sigma_se();
  cfg.sigma_pos_mm_s = preset.sigma_pos_mm_s;
  cfg.sigma_rot_deg_s = preset.sigma_rot_deg_s;
  cfg.o_pos_mm_s = preset.o_pos_mm_s;
  cfg.o_rot_deg_s = preset.o_rot_deg_s;
  cfg.motion = preset.motion;
  cfg.vertical_update = true;
}

RunConfig config_from_json(const json &doc) {
  RunConfig cfg;
  ObjectReader root(doc, "");
  if (!root.has("schema_version")) {
    throw ConfigError("schema_version: required");
  }
  root.get("schema_version", cfg.schema_version);
  if (root.has("preset")) {
    std::string name;
    root.get("preset", name);
    apply_preset(find_preset(name), cfg);
  }
  if (root.has("mode")) {
    std::string m;
    root.get("mode", m);
    cfg.mode = parse_mode(m);
  }
  root.get("precalibrate", cfg.precalibrate);
  root.get("single_mag_index", cfg.single_mag_index);
  if (auto r = root.child("hyper")) {
    r->get("length_scale", cfg.hyper.length_scale);
    r->get("sigma_se", cfg.hyper.sigma_se);
    r->get("sigma_lin", cfg.hyper.sigma_lin);
    r->get("sigma_y", cfg.hyper.sigma_y);
    r->finish();
  }
  root.get("n_se_modes", cfg.n_se_modes);
  root.get("domain_margin", cfg.domain_margin);
  if (auto r = root.child("noise")) {
    r->get("sigma_pos_mm_s", cfg.sigma_pos_mm_s);
    r->get("sigma_rot_deg_s", cfg.sigma_rot_deg_s);
    r->get("sigma_ver", cfg.sigma_ver);
    r->get("prior_scale_std", cfg.prior_scale_std);
    r->get("prior_bias_std", cfg.prior_bias_std);
    r->finish();
  }
  if (auto r = root.child("drift")) {
    r->get("o_pos_mm_s", cfg.o_pos_mm_s);
    r->get("o_rot_deg_s", cfg.o_rot_deg_s);
    r->finish();
  }
  if (auto r = root.child("field")) {
    r->get("sigma_cf", cfg.field.sigma_cf);
    r->get("length_scale", cfg.field.length_scale);
    r->get("earth_field", cfg.field.earth_field);
    if (r->has("method")) {
      std::string m;
      r->get("method", m);
      cfg.field.method = parse_method(m, r->field("method"));
    }
    r->get("n_modes", cfg.field.n_modes);
    r->get("rr_margin", cfg.field.rr_margin);
    r->finish();
  }
  if (auto r = root.child("motion")) {
    read_motion(*r, cfg.motion);
  }
  root.get("layout", cfg.layout);
  if (auto r = root.child("calibration")) {
    r->get("sample", cfg.sample_calibration);
    r->get("scale_lo", cfg.calibration_ranges.scale_lo);
    r->get("scale_hi", cfg.calibration_ranges.scale_hi);
    r->get("bias_lo", cfg.calibration_ranges.bias_lo);
    r->get("bias_hi", cfg.calibration_ranges.bias_hi);
    r->finish();
  }
  root.get("vertical_update", cfg.vertical_update);
  if (auto r = root.child("iteration")) {
    r->get("tau_max", cfg.iteration.tau_max);
    r->get("conv_position", cfg.iteration.conv_position);
    double deg = cfg.iteration.conv_rotation * kRadToDeg;
    r->get("conv_rotation_deg", deg);
    cfg.iteration.conv_rotation = deg * kDegToRad;
    r->get("max_position_step", cfg.iteration.max_position_step);
    r->finish();
  }
  root.get("seed", cfg.seed);
  root.get("mc", cfg.mc);
  if (auto r = root.child("map")) {
    r->get("grid_spacing", cfg.grid_spacing);
    r->finish();
  }
  root.get("output", cfg.output);
  root.finish();
  cfg.validate();
  return cfg;
}

json config_to_json(const RunConfig &cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  if (!cfg.preset.empty()) {
    j["preset"] = cfg.preset;
  }
  j["mode"] = mode_name(cfg.mode);
  j["precalibrate"] = cfg.precalibrate;
  j["single_mag_index"] = cfg.single_mag_index;
  j["hyper"] = {{"length_scale", cfg.hyper.length_scale},
                {"sigma_se", cfg.hyper.sigma_se},
                {"sigma_lin", cfg.hyper.sigma_lin},
                {"sigma_y", cfg.hyper.sigma_y}};
  j["n_se_modes"] = cfg.n_se_modes;
  j["domain_margin"] = cfg.domain_margin ? json(*cfg.domain_margin) : json(nullptr);
  j["noise"] = {{"sigma_pos_mm_s", vec_json(cfg.sigma_pos_mm_s)},
                {"sigma_rot_deg_s", vec_json(cfg.sigma_rot_deg_s)},
                {"sigma_ver", cfg.sigma_ver},
                {"prior_scale_std", cfg.prior_scale_std},
                {"prior_bias_std", cfg.prior_bias_std}};
  j["drift"] = {{"o_pos_mm_s", vec_json(cfg.o_pos_mm_s)},
                {"o_rot_deg_s", vec_json(cfg.o_rot_deg_s)}};
  json field = {{"earth_field", vec_json(cfg.field.earth_field)},
                {"method", method_name(cfg.field.method)},
                {"n_modes", cfg.field.n_modes},
                {"rr_margin", cfg.field.rr_margin}};
  field["sigma_cf"] = cfg.field.sigma_cf ? json(*cfg.field.sigma_cf) : json(nullptr);
  field["length_scale"] = cfg.field.length_scale ? json(*cfg.field.length_scale) : json(nullptr);
  j["field"] = field;
  j["motion"] = motion_json(cfg.motion);
  j["layout"] = cfg.layout;
  j["calibration"] = {{"sample", cfg.sample_calibration},
                      {"scale_lo", cfg.calibration_ranges.scale_lo},
                      {"scale_hi", cfg.calibration_ranges.scale_hi},
                      {"bias_lo", cfg.calibration_ranges.bias_lo},
                      {"bias_hi", cfg.calibration_ranges.bias_hi}};
  j["vertical_update"] = cfg.vertical_update;
  j["iteration"] = {{"tau_max", cfg.iteration.tau_max},
                    {"conv_position", cfg.iteration.conv_position},
                    {"conv_rotation_deg", cfg.iteration.conv_rotation * kRadToDeg},
                    {"max_position_step", cfg.iteration.max_position_step}};
  j["seed"] = cfg.seed;
  j["mc"] = cfg.mc;
  j["map"] = {{"grid_spacing", cfg.grid_spacing}};
  j["output"] = cfg.output;
  return j;
}

RunConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path + ": cannot open config");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(doc);
}

} // namespace magslam
