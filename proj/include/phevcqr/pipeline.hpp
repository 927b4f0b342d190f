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

#ifndef PHEVCQR_PIPELINE_HPP_
#define PHEVCQR_PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phevcqr/conformal.hpp"
#include "phevcqr/dataset.hpp"
#include "phevcqr/evalreport.hpp"
#include "phevcqr/io.hpp"

namespace phevcqr::pipeline {

namespace fs = std::filesystem;

// Directory holding the bundled route, vehicle and parameter files.
fs::path data_dir();

inline const std::vector<std::string>& all_methods() {
  static const std::vector<std::string> names{"CQR", "CV", "CV+", "JK+aB"};
  return names;
}

// Canonical method name for a user spelling ("cvplus", "jk+ab", ...).
// Throws InputError for unknown names.
std::string canonical_method(std::string_view name);

struct PipelineConfig {
  fs::path route_path;    // empty: bundled route
  fs::path vehicle_path;  // empty: bundled vehicle
  fs::path params_path;   // empty: bundled calibrated parameters
  edm::DriverConstants driver;
  calibrate::GaConfig ga;
  std::size_t copula_samples = 1000;
  std::vector<double> soc0_list{0.26, 0.30, 0.40};
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
  double alpha = 0.1;
  gbq::Hyperparams hyperparams;
  std::vector<std::string> methods = all_methods();
  int cv_folds = 5;
  int jkab_resamples = 30;
  std::uint64_t seed = 20240501;
  fs::path out_dir = "phevcqr_out";
  int jobs = 1;
};

// Missing keys keep their defaults; unknown keys are rejected.
// Relative paths resolve against `base_dir`.
PipelineConfig config_from_json(const io::Json& doc, const std::string& source,
                                const fs::path& base_dir);
PipelineConfig config_from_json(const io::Json& doc, const std::string& source);
PipelineConfig read_config(const fs::path& path);
// Every field, with file paths resolved, so the run can be repeated.
io::Json config_snapshot(const PipelineConfig& config);

// Stage seed: hash of the master seed and a fixed tag.
std::uint64_t stage_seed(const PipelineConfig& config, std::string_view stage);

// A pipeline stage that failed; the CLI maps it to exit code 4.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

using Logger = std::function<void(const std::string&)>;

struct Inputs {
  io::RouteFile route;
  plant::PlantParams plant;
  std::vector<edm::DriverParams> calibrated;
};

// Reads the route, vehicle and parameter files (InputError on bad content).
Inputs load_inputs(const PipelineConfig& config);

// Copula fit on the calibrated parameters, sampling, and simulation.
synth::Dataset synthesize(const PipelineConfig& config, const Inputs& inputs,
                          const Logger& log = {});

struct CqrArtifact {
  conformal::CqrModel model;
  io::Json to_json() const;
  static CqrArtifact from_json(const io::Json& doc);
};

struct MethodRun {
  std::vector<io::MethodIntervals> intervals;  // in config.methods order
  std::optional<conformal::CqrModel> cqr;
  std::size_t jkab_excluded = 0;
};

// Fits every configured method on the split and predicts the test rows.
// A pre-fitted CQR model is reused instead of refitted.
MethodRun run_methods(const PipelineConfig& config, const FeatureMatrix& x,
                      std::span<const double> y, const conformal::DataSplit& split,
                      const std::optional<conformal::CqrModel>& prefit = std::nullopt,
                      const Logger& log = {});

struct PipelineResult {
  synth::Dataset dataset;
  conformal::DataSplit split;
  std::vector<eval::MethodReport> reports;
  MethodRun run;
};

// Full run; writes dataset, model, intervals, report and config snapshot
// under config.out_dir. Stage failures raise StageError.
PipelineResult run_pipeline(const PipelineConfig& config, const Logger& log = {});

// Evaluation and report emission shared with the evaluate subcommand.
std::vector<eval::MethodReport> evaluate_and_write(const PipelineConfig& config,
                                                   const conformal::DataSplit& split,
                                                   std::span<const double> y,
                                                   const MethodRun& run);

}  // namespace phevcqr::pipeline

#endif  // PHEVCQR_PIPELINE_HPP_
