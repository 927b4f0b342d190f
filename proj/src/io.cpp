// Copyright 2026 The phevcqr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "phevcqr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace phevcqr::io {

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return buf.str();
}

void write_text_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory '" + dir.string() + "'" +
                  (ec ? ": " + ec.message() : std::string()));
  }
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Json parse_json(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InputError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": malformed JSON (" + e.what() + ")");
  }
}

Json read_json_file(const fs::path& path) {
  return parse_json(read_text_file(path), path.string());
}

void write_json_file(const fs::path& path, const Json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos
                                                                            : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InputError(source + ": missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& cell = rows[row][col];
  double value = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() ||
      !std::isfinite(value)) {
    throw InputError(source + ":" + std::to_string(lines[row]) + ": column '" + header[col] +
                     "': '" + cell + "' is not a finite number");
  }
  return value;
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw InputError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, found " +
                       std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
    table.lines.push_back(line_no);
  }
  if (table.header.empty()) throw InputError(source + ": empty CSV file");
  return table;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text_file(path), path.string()); }

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& context) {
  if (!obj.is_object()) throw InputError(context + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw InputError(context + ": unknown field '" + item.key() + "'");
    }
  }
}

namespace {

const Json* find_field(const Json& obj, std::string_view key) {
  const auto it = obj.find(std::string(key));
  return it == obj.end() ? nullptr : &*it;
}

[[noreturn]] void bad_type(std::string_view key, const std::string& context, const char* want) {
  throw InputError(context + "." + std::string(key) + ": expected " + want);
}

}  // namespace

void read_field(const Json& obj, std::string_view key, double& out, const std::string& context) {
  if (const Json* v = find_field(obj, key)) {
    if (!v->is_number()) bad_type(key, context, "a number");
    out = v->get<double>();
  }
}

void read_field(const Json& obj, std::string_view key, int& out, const std::string& context) {
  if (const Json* v = find_field(obj, key)) {
    if (!v->is_number_integer()) bad_type(key, context, "an integer");
    out = v->get<int>();
  }
}

void read_field(const Json& obj, std::string_view key, std::uint64_t& out,
                const std::string& context) {
  if (const Json* v = find_field(obj, key)) {
    if (!v->is_number_unsigned()) bad_type(key, context, "a non-negative integer");
    out = v->get<std::uint64_t>();
  }
}

void read_field(const Json& obj, std::string_view key, bool& out, const std::string& context) {
  if (const Json* v = find_field(obj, key)) {
    if (!v->is_boolean()) bad_type(key, context, "true or false");
    out = v->get<bool>();
  }
}

void read_field(const Json& obj, std::string_view key, std::string& out,
                const std::string& context) {
  if (const Json* v = find_field(obj, key)) {
    if (!v->is_string()) bad_type(key, context, "a string");
    out = v->get<std::string>();
  }
}

void read_field(const Json& obj, std::string_view key, std::vector<double>& out,
                const std::string& context) {
  if (const Json* v = find_field(obj, key)) {
    if (!v->is_array()) bad_type(key, context, "an array of numbers");
    std::vector<double> values;
    for (const auto& e : *v) {
      if (!e.is_number()) bad_type(key, context, "an array of numbers");
      values.push_back(e.get<double>());
    }
    out = std::move(values);
  }
}

RouteFile route_from_json(const Json& doc, const std::string& source) {
  check_keys(doc, {"id", "segments"}, source);
  RouteFile route;
  route.id = "route";
  read_field(doc, "id", route.id, source);
  const Json* segs = find_field(doc, "segments");
  if (segs == nullptr || !segs->is_array() || segs->empty()) {
    throw InputError(source + ".segments: expected a non-empty array");
  }
  for (std::size_t i = 0; i < segs->size(); ++i) {
    const std::string ctx = source + ".segments[" + std::to_string(i) + "]";
    const Json& s = (*segs)[i];
    check_keys(s, {"length_m", "speed_limit_mph", "speed_limit_mps", "ends_with_stop"}, ctx);
    edm::RouteSegment seg;
    if (!s.contains("length_m")) throw InputError(ctx + ": missing field 'length_m'");
    read_field(s, "length_m", seg.length_m, ctx);
    const bool mph = s.contains("speed_limit_mph");
    const bool mps = s.contains("speed_limit_mps");
    if (mph == mps) {
      throw InputError(ctx + ": give exactly one of 'speed_limit_mph' or 'speed_limit_mps'");
    }
    if (mph) {
      double limit = 0.0;
      read_field(s, "speed_limit_mph", limit, ctx);
      seg.speed_limit_mps = mph_to_mps(limit);
    } else {
      read_field(s, "speed_limit_mps", seg.speed_limit_mps, ctx);
    }
    read_field(s, "ends_with_stop", seg.ends_with_stop, ctx);
    if (!(seg.length_m > 0.0)) throw InputError(ctx + ".length_m: must be positive");
    if (!(seg.speed_limit_mps > 0.0)) throw InputError(ctx + ": speed limit must be positive");
    route.segments.push_back(seg);
  }
  return route;
}

Json route_to_json(const RouteFile& route) {
  Json doc;
  doc["id"] = route.id;
  Json segs = Json::array();
  for (const auto& s : route.segments) {
    segs.push_back({{"length_m", s.length_m},
                    {"speed_limit_mps", s.speed_limit_mps},
                    {"ends_with_stop", s.ends_with_stop}});
  }
  doc["segments"] = std::move(segs);
  return doc;
}

RouteFile read_route(const fs::path& path) {
  return route_from_json(read_json_file(path), path.string());
}

edm::DriverParams driver_params_from_json(const Json& doc, const std::string& context) {
  check_keys(doc, {"a", "b", "delta", "c1", "theta"}, context);
  edm::DriverParams p;
  read_field(doc, "a", p.a, context);
  read_field(doc, "b", p.b, context);
  read_field(doc, "delta", p.delta, context);
  read_field(doc, "c1", p.c1, context);
  read_field(doc, "theta", p.theta, context);
  return p;
}

Json to_json(const edm::DriverParams& p) {
  return {{"a", p.a}, {"b", p.b}, {"delta", p.delta}, {"c1", p.c1}, {"theta", p.theta}};
}

edm::DriverConstants driver_constants_from_json(const Json& doc, const std::string& context) {
  check_keys(doc,
             {"x_safe", "line_of_sight", "dt", "a_brake_cap", "stop_dwell_s", "stop_speed",
              "time_ceiling_factor"},
             context);
  edm::DriverConstants c;
  read_field(doc, "x_safe", c.x_safe, context);
  read_field(doc, "line_of_sight", c.line_of_sight, context);
  read_field(doc, "dt", c.dt, context);
  read_field(doc, "a_brake_cap", c.a_brake_cap, context);
  read_field(doc, "stop_dwell_s", c.stop_dwell_s, context);
  read_field(doc, "stop_speed", c.stop_speed, context);
  read_field(doc, "time_ceiling_factor", c.time_ceiling_factor, context);
  if (!(c.dt > 0.0) || !(c.line_of_sight > 0.0) || c.x_safe < 0.0 || !(c.a_brake_cap > 0.0) ||
      c.stop_dwell_s < 0.0 || !(c.stop_speed > 0.0) || !(c.time_ceiling_factor > 0.0)) {
    throw InputError(context + ": driver constants out of range");
  }
  return c;
}

Json to_json(const edm::DriverConstants& c) {
  return {{"x_safe", c.x_safe},
          {"line_of_sight", c.line_of_sight},
          {"dt", c.dt},
          {"a_brake_cap", c.a_brake_cap},
          {"stop_dwell_s", c.stop_dwell_s},
          {"stop_speed", c.stop_speed},
          {"time_ceiling_factor", c.time_ceiling_factor}};
}

plant::PlantParams plant_params_from_json(const Json& doc, const std::string& source) {
  check_keys(doc,
             {"vehicle", "battery", "engine", "ems", "controller", "divergence_error_mps",
              "divergence_window_s"},
             source);
  plant::PlantParams p;
  if (doc.contains("vehicle")) {
    const auto& v = doc["vehicle"];
    const std::string ctx = source + ".vehicle";
    check_keys(v, {"mass", "aero_term", "rolling_coeff", "driveline_efficiency", "wheel_radius"},
               ctx);
    read_field(v, "mass", p.vehicle.mass, ctx);
    read_field(v, "aero_term", p.vehicle.aero_term, ctx);
    read_field(v, "rolling_coeff", p.vehicle.rolling_coeff, ctx);
    read_field(v, "driveline_efficiency", p.vehicle.driveline_efficiency, ctx);
    read_field(v, "wheel_radius", p.vehicle.wheel_radius, ctx);
  }
  if (doc.contains("battery")) {
    const auto& b = doc["battery"];
    const std::string ctx = source + ".battery";
    check_keys(b,
               {"energy_capacity_wh", "max_discharge_power_w", "max_charge_power_w", "soc_min",
                "soc_max"},
               ctx);
    read_field(b, "energy_capacity_wh", p.battery.energy_capacity_wh, ctx);
    read_field(b, "max_discharge_power_w", p.battery.max_discharge_power_w, ctx);
    read_field(b, "max_charge_power_w", p.battery.max_charge_power_w, ctx);
    read_field(b, "soc_min", p.battery.soc_min, ctx);
    read_field(b, "soc_max", p.battery.soc_max, ctx);
  }
  if (doc.contains("engine")) {
    const auto& e = doc["engine"];
    const std::string ctx = source + ".engine";
    check_keys(e, {"willans_slope", "idle_rate", "max_power_w"}, ctx);
    read_field(e, "willans_slope", p.engine.willans_slope, ctx);
    read_field(e, "idle_rate", p.engine.idle_rate, ctx);
    read_field(e, "max_power_w", p.engine.max_power_w, ctx);
  }
  if (doc.contains("ems")) {
    const auto& e = doc["ems"];
    const std::string ctx = source + ".ems";
    check_keys(e, {"charge_sustain_soc", "engine_assist_power_w"}, ctx);
    read_field(e, "charge_sustain_soc", p.ems.charge_sustain_soc, ctx);
    read_field(e, "engine_assist_power_w", p.ems.engine_assist_power_w, ctx);
  }
  if (doc.contains("controller")) {
    const auto& c = doc["controller"];
    const std::string ctx = source + ".controller";
    check_keys(c, {"schedule", "integrator_clamp", "torque_limit"}, ctx);
    if (c.contains("schedule")) {
      if (!c["schedule"].is_array()) throw InputError(ctx + ".schedule: expected an array");
      p.controller.schedule.clear();
      for (std::size_t i = 0; i < c["schedule"].size(); ++i) {
        const std::string pctx = ctx + ".schedule[" + std::to_string(i) + "]";
        const auto& g = c["schedule"][i];
        check_keys(g, {"speed_mps", "kp", "ki"}, pctx);
        plant::GainPoint point;
        read_field(g, "speed_mps", point.speed_mps, pctx);
        read_field(g, "kp", point.kp, pctx);
        read_field(g, "ki", point.ki, pctx);
        p.controller.schedule.push_back(point);
      }
    }
    read_field(c, "integrator_clamp", p.controller.integrator_clamp, ctx);
    read_field(c, "torque_limit", p.controller.torque_limit, ctx);
  }
  read_field(doc, "divergence_error_mps", p.divergence_error_mps, source);
  read_field(doc, "divergence_window_s", p.divergence_window_s, source);
  try {
    plant::validate(p);
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
  return p;
}

Json to_json(const plant::PlantParams& p) {
  Json schedule = Json::array();
  for (const auto& g : p.controller.schedule) {
    schedule.push_back({{"speed_mps", g.speed_mps}, {"kp", g.kp}, {"ki", g.ki}});
  }
  return {{"vehicle",
           {{"mass", p.vehicle.mass},
            {"aero_term", p.vehicle.aero_term},
            {"rolling_coeff", p.vehicle.rolling_coeff},
            {"driveline_efficiency", p.vehicle.driveline_efficiency},
            {"wheel_radius", p.vehicle.wheel_radius}}},
          {"battery",
           {{"energy_capacity_wh", p.battery.energy_capacity_wh},
            {"max_discharge_power_w", p.battery.max_discharge_power_w},
            {"max_charge_power_w", p.battery.max_charge_power_w},
            {"soc_min", p.battery.soc_min},
            {"soc_max", p.battery.soc_max}}},
          {"engine",
           {{"willans_slope", p.engine.willans_slope},
            {"idle_rate", p.engine.idle_rate},
            {"max_power_w", p.engine.max_power_w}}},
          {"ems",
           {{"charge_sustain_soc", p.ems.charge_sustain_soc},
            {"engine_assist_power_w", p.ems.engine_assist_power_w}}},
          {"controller",
           {{"schedule", schedule},
            {"integrator_clamp", p.controller.integrator_clamp},
            {"torque_limit", p.controller.torque_limit}}},
          {"divergence_error_mps", p.divergence_error_mps},
          {"divergence_window_s", p.divergence_window_s}};
}

plant::PlantParams read_plant_params(const fs::path& path) {
  return plant_params_from_json(read_json_file(path), path.string());
}

namespace {

constexpr std::string_view kGeneNames[] = {"a", "b", "delta", "c1", "theta"};

}  // namespace

calibrate::GaConfig ga_config_from_json(const Json& doc, const std::string& context) {
  check_keys(doc,
             {"population", "generations", "bounds", "crossover_rate", "mutation_rate",
              "mutation_scale", "elite", "tournament", "seed"},
             context);
  calibrate::GaConfig c;
  read_field(doc, "population", c.population, context);
  read_field(doc, "generations", c.generations, context);
  read_field(doc, "crossover_rate", c.crossover_rate, context);
  read_field(doc, "mutation_rate", c.mutation_rate, context);
  read_field(doc, "mutation_scale", c.mutation_scale, context);
  read_field(doc, "elite", c.elite, context);
  read_field(doc, "tournament", c.tournament, context);
  read_field(doc, "seed", c.seed, context);
  if (doc.contains("bounds")) {
    const std::string ctx = context + ".bounds";
    check_keys(doc["bounds"], {"a", "b", "delta", "c1", "theta"}, ctx);
    for (std::size_t g = 0; g < 5; ++g) {
      std::vector<double> pair;
      read_field(doc["bounds"], kGeneNames[g], pair, ctx);
      if (pair.empty()) continue;
      if (pair.size() != 2) {
        throw InputError(ctx + "." + std::string(kGeneNames[g]) + ": expected [lo, hi]");
      }
      c.bounds[g] = {pair[0], pair[1]};
    }
  }
  try {
    calibrate::validate(c);
  } catch (const InputError& e) {
    throw InputError(context + ": " + e.what());
  }
  return c;
}

Json to_json(const calibrate::GaConfig& c) {
  Json bounds;
  for (std::size_t g = 0; g < 5; ++g) {
    bounds[std::string(kGeneNames[g])] = {c.bounds[g].lo, c.bounds[g].hi};
  }
  return {{"population", c.population},         {"generations", c.generations},
          {"bounds", bounds},                   {"crossover_rate", c.crossover_rate},
          {"mutation_rate", c.mutation_rate},   {"mutation_scale", c.mutation_scale},
          {"elite", c.elite},                   {"tournament", c.tournament},
          {"seed", c.seed}};
}

gbq::Hyperparams hyperparams_from_json(const Json& doc, const std::string& context) {
  check_keys(doc,
             {"n_trees", "learning_rate", "max_depth", "max_leaves", "min_samples_leaf",
              "histogram_bins", "seed"},
             context);
  gbq::Hyperparams hp;
  read_field(doc, "n_trees", hp.n_trees, context);
  read_field(doc, "learning_rate", hp.learning_rate, context);
  read_field(doc, "max_depth", hp.max_depth, context);
  read_field(doc, "max_leaves", hp.max_leaves, context);
  read_field(doc, "min_samples_leaf", hp.min_samples_leaf, context);
  read_field(doc, "histogram_bins", hp.histogram_bins, context);
  read_field(doc, "seed", hp.seed, context);
  try {
    gbq::validate(hp);
  } catch (const InputError& e) {
    throw InputError(context + ": " + e.what());
  }
  return hp;
}

Json to_json(const gbq::Hyperparams& hp) {
  return {{"n_trees", hp.n_trees},
          {"learning_rate", hp.learning_rate},
          {"max_depth", hp.max_depth},
          {"max_leaves", hp.max_leaves},
          {"min_samples_leaf", hp.min_samples_leaf},
          {"histogram_bins", hp.histogram_bins},
          {"seed", hp.seed}};
}

std::vector<edm::DriverParams> read_params_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  std::size_t col[5];
  for (std::size_t g = 0; g < 5; ++g) col[g] = t.column(kGeneNames[g]);
  std::vector<edm::DriverParams> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    edm::DriverParams p{t.number(r, col[0]), t.number(r, col[1]), t.number(r, col[2]),
                        t.number(r, col[3]), t.number(r, col[4])};
    try {
      edm::validate(p);
    } catch (const std::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(t.lines[r]) + ": " + e.what());
    }
    out.push_back(p);
  }
  if (out.empty()) throw InputError(path.string() + ": no parameter rows");
  return out;
}

void write_params_csv(const fs::path& path, std::span<const edm::DriverParams> params) {
  std::ostringstream out;
  out << "a,b,delta,c1,theta\n";
  for (const auto& p : params) {
    out << format_number(p.a) << ',' << format_number(p.b) << ',' << format_number(p.delta) << ','
        << format_number(p.c1) << ',' << format_number(p.theta) << '\n';
  }
  write_text_file(path, out.str());
}

void write_trajectory_csv(const fs::path& path, const edm::Trajectory& trajectory) {
  std::ostringstream out;
  out << "t_s,x_m,v_mps,a_mps2,mode\n";
  for (const auto& s : trajectory.samples) {
    out << format_number(s.t) << ',' << format_number(s.x) << ',' << format_number(s.v) << ','
        << format_number(s.accel) << ',' << edm::mode_name(s.mode) << '\n';
  }
  write_text_file(path, out.str());
}

void write_plant_trace_csv(const fs::path& path, std::span<const plant::TraceRow> trace) {
  std::ostringstream out;
  out << "t_s,v_mps,engine_w,battery_w,soc,fuel_g\n";
  for (const auto& r : trace) {
    out << format_number(r.t) << ',' << format_number(r.v) << ',' << format_number(r.engine_w)
        << ',' << format_number(r.battery_w) << ',' << format_number(r.soc) << ','
        << format_number(r.fuel_g) << '\n';
  }
  write_text_file(path, out.str());
}

Json energy_json(const plant::EnergyResult& r) {
  return {{"m_fuel_g", r.m_fuel_g},
          {"E_batt_J", r.e_batt_j},
          {"m_f_eq_g", r.m_f_eq_g},
          {"soc_final", r.soc_final},
          {"tracking_rmse_mps", r.tracking_rmse_mps},
          {"saturated_steps", r.saturated_steps},
          {"soc_clipped_steps", r.soc_clipped_steps}};
}

Json calibration_json(const calibrate::CalibrationResult& r) {
  return {{"params", to_json(r.params)}, {"rmse_mph", r.rmse_mph}, {"history", r.history}};
}

calibrate::ReferenceTrace read_reference_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t tc = t.column("t_s");
  const bool mph = t.has_column("v_mph");
  if (!mph && !t.has_column("v_mps")) {
    throw InputError(path.string() + ": needs a 'v_mps' or 'v_mph' column");
  }
  const std::size_t vc = t.column(mph ? "v_mph" : "v_mps");
  std::vector<double> time, speed;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    time.push_back(t.number(r, tc));
    const double v = t.number(r, vc);
    speed.push_back(mph ? mph_to_mps(v) : v);
  }
  if (time.empty()) throw InputError(path.string() + ": reference trace is empty");
  try {
    return calibrate::make_trace(time, speed);
  } catch (const std::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_reference_csv(const fs::path& path, const calibrate::ReferenceTrace& trace) {
  std::ostringstream out;
  out << "t_s,v_mps\n";
  for (std::size_t i = 0; i < trace.v.size(); ++i) {
    out << format_number(trace.t0 + trace.dt * static_cast<double>(i)) << ','
        << format_number(trace.v[i]) << '\n';
  }
  write_text_file(path, out.str());
}

fs::path dataset_meta_path(const fs::path& csv_path) {
  fs::path meta = csv_path;
  meta.replace_extension(".meta.json");
  return meta;
}

void write_dataset(const fs::path& csv_path, const synth::Dataset& dataset) {
  std::ostringstream out;
  for (const auto& name : synth::feature_names()) out << name << ',';
  out << "m_f_eq_g\n";
  for (const auto& row : dataset.rows) {
    for (double v : row.features()) out << format_number(v) << ',';
    out << format_number(row.m_f_eq_g) << '\n';
  }
  write_text_file(csv_path, out.str());

  Json exclusions = Json::array();
  for (const auto& e : dataset.exclusions) {
    exclusions.push_back({{"param_index", e.param_index},
                          {"segment_index", e.segment_index},
                          {"soc0", e.soc0},
                          {"reason", e.reason}});
  }
  Json meta = {{"rows", dataset.rows.size()},
               {"seed", dataset.seed},
               {"route_id", dataset.route_id},
               {"soc0_list", dataset.soc0_list},
               {"param_count", dataset.param_count},
               {"segment_count", dataset.segment_count},
               {"exclusions", exclusions}};
  write_json_file(dataset_meta_path(csv_path), meta);
}

LoadedDataset read_dataset_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  std::vector<std::size_t> cols;
  for (const auto& name : synth::feature_names()) cols.push_back(t.column(name));
  const std::size_t target = t.column("m_f_eq_g");
  LoadedDataset out{FeatureMatrix(0, cols.size()), {}};
  std::vector<double> row(cols.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) row[c] = t.number(r, cols[c]);
    out.x.push_row(row);
    out.y.push_back(t.number(r, target));
  }
  if (out.y.empty()) throw InputError(path.string() + ": dataset has no rows");
  return out;
}

void write_intervals_csv(const fs::path& path, std::span<const std::size_t> row_ids,
                         std::span<const double> y_true,
                         std::span<const MethodIntervals> methods) {
  std::ostringstream out;
  out << "row_id,y_true_g,lo_g,hi_g,method,crossing_flag\n";
  for (const auto& m : methods) {
    if (m.intervals.size() != row_ids.size() || y_true.size() != row_ids.size()) {
      throw InputError("interval table for '" + m.method + "' has the wrong length");
    }
    for (std::size_t i = 0; i < row_ids.size(); ++i) {
      const auto& iv = m.intervals[i];
      out << row_ids[i] << ',' << format_number(y_true[i]) << ',' << format_number(iv.lo) << ','
          << format_number(iv.hi) << ',' << m.method << ',' << (iv.crossing ? 1 : 0) << '\n';
    }
  }
  write_text_file(path, out.str());
}

}  // namespace phevcqr::io
