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

#ifndef PHEVCQR_IO_HPP_
#define PHEVCQR_IO_HPP_

#include <filesystem>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "phevcqr/calibrate.hpp"
#include "phevcqr/conformal.hpp"
#include "phevcqr/dataset.hpp"
#include "phevcqr/edm.hpp"
#include "phevcqr/gbq.hpp"
#include "phevcqr/plant.hpp"

namespace phevcqr::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Raw file access. Failures raise IoError naming the path.
std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, std::string_view content);
void ensure_directory(const fs::path& dir);

// Shortest text that parses back to the same double.
std::string format_number(double value);

// Parse errors raise InputError with the source name, line and column.
Json parse_json(std::string_view text, const std::string& source);
Json read_json_file(const fs::path& path);
void write_json_file(const fs::path& path, const Json& doc);

// Comma-separated table with a header line; blank lines are skipped.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  // Column index; throws InputError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable read_csv(const fs::path& path);

// Object helpers for hand-written config files: every key must be known,
// and absent keys keep their defaults.
void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& context);
void read_field(const Json& obj, std::string_view key, double& out, const std::string& context);
void read_field(const Json& obj, std::string_view key, int& out, const std::string& context);
void read_field(const Json& obj, std::string_view key, std::uint64_t& out,
                const std::string& context);
void read_field(const Json& obj, std::string_view key, bool& out, const std::string& context);
void read_field(const Json& obj, std::string_view key, std::string& out,
                const std::string& context);
void read_field(const Json& obj, std::string_view key, std::vector<double>& out,
                const std::string& context);

// Route: {"id", "segments": [{"length_m", "speed_limit_mph" | "speed_limit_mps",
// "ends_with_stop"}]}.
struct RouteFile {
  std::string id;
  std::vector<edm::RouteSegment> segments;
};
RouteFile route_from_json(const Json& doc, const std::string& source);
Json route_to_json(const RouteFile& route);
RouteFile read_route(const fs::path& path);

edm::DriverParams driver_params_from_json(const Json& doc, const std::string& context);
Json to_json(const edm::DriverParams& p);

edm::DriverConstants driver_constants_from_json(const Json& doc, const std::string& context);
Json to_json(const edm::DriverConstants& c);

plant::PlantParams plant_params_from_json(const Json& doc, const std::string& source);
Json to_json(const plant::PlantParams& p);
plant::PlantParams read_plant_params(const fs::path& path);

calibrate::GaConfig ga_config_from_json(const Json& doc, const std::string& context);
Json to_json(const calibrate::GaConfig& c);

gbq::Hyperparams hyperparams_from_json(const Json& doc, const std::string& context);
Json to_json(const gbq::Hyperparams& hp);

// Parameter table with columns a,b,delta,c1,theta (others ignored).
std::vector<edm::DriverParams> read_params_csv(const fs::path& path);
void write_params_csv(const fs::path& path, std::span<const edm::DriverParams> params);

void write_trajectory_csv(const fs::path& path, const edm::Trajectory& trajectory);
void write_plant_trace_csv(const fs::path& path, std::span<const plant::TraceRow> trace);
Json energy_json(const plant::EnergyResult& result);
Json calibration_json(const calibrate::CalibrationResult& result);

// Reference speed trace: column t_s plus v_mps or v_mph.
calibrate::ReferenceTrace read_reference_csv(const fs::path& path);
void write_reference_csv(const fs::path& path, const calibrate::ReferenceTrace& trace);

// Dataset table plus a <stem>.meta.json sidecar with provenance.
fs::path dataset_meta_path(const fs::path& csv_path);
void write_dataset(const fs::path& csv_path, const synth::Dataset& dataset);

struct LoadedDataset {
  FeatureMatrix x;
  std::vector<double> y;
};
LoadedDataset read_dataset_csv(const fs::path& path);

struct MethodIntervals {
  std::string method;
  std::vector<conformal::PredictionInterval> intervals;
};
// Columns row_id,y_true_g,lo_g,hi_g,method,crossing_flag.
void write_intervals_csv(const fs::path& path, std::span<const std::size_t> row_ids,
                         std::span<const double> y_true, std::span<const MethodIntervals> methods);

}  // namespace phevcqr::io

#endif  // PHEVCQR_IO_HPP_
