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

// phevcqr command-line front end. Exit codes: 0 success, 2 bad
// configuration or input, 3 simulation or calibration failure, 4 pipeline
// stage failure.

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "phevcqr/calibrate.hpp"
#include "phevcqr/pipeline.hpp"

namespace {

using namespace phevcqr;
namespace fs = std::filesystem;

constexpr int kExitInput = 2;
constexpr int kExitSimulation = 3;
constexpr int kExitStage = 4;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  bool quiet = false;
};

pipeline::PipelineConfig load_config(const Globals& g) {
  pipeline::PipelineConfig c =
      g.config_path.empty() ? pipeline::PipelineConfig{} : pipeline::read_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (g.out) c.out_dir = *g.out;
  if (g.jobs) {
    if (*g.jobs < 1) throw InputError("--jobs must be >= 1");
    c.jobs = *g.jobs;
  }
  return c;
}

pipeline::Logger make_logger(const Globals& g) {
  if (g.quiet) return {};
  return [](const std::string& msg) { std::cerr << "[phevcqr] " << msg << '\n'; };
}

struct SimulateArgs {
  edm::DriverParams params;
  double soc0 = 0.30;
  bool trace = false;
};

int cmd_simulate(const Globals& g, const SimulateArgs& args) {
  const auto config = load_config(g);
  const auto inputs_route = config.route_path.empty()
                                ? io::read_route(pipeline::data_dir() / "route_default.json")
                                : io::read_route(config.route_path);
  const auto plant_params = config.vehicle_path.empty()
                                ? io::read_plant_params(pipeline::data_dir() / "vehicle_default.json")
                                : io::read_plant_params(config.vehicle_path);
  const edm::Route route(inputs_route.segments);
  edm::validate(args.params, route);
  const auto trajectory = edm::simulate_trip(args.params, route, config.driver);
  std::vector<plant::TraceRow> trace;
  const auto energy =
      plant::simulate_energy(trajectory, args.soc0, plant_params, args.trace ? &trace : nullptr);
  io::ensure_directory(config.out_dir);
  io::write_trajectory_csv(config.out_dir / "trajectory.csv", trajectory);
  io::write_json_file(config.out_dir / "energy.json", io::energy_json(energy));
  if (args.trace) io::write_plant_trace_csv(config.out_dir / "plant_trace.csv", trace);
  std::printf("trip %.1f s, m_fuel %.3f g, E_batt %.1f J, m_f_eq %.3f g, final SoC %.4f\n",
              trajectory.duration(), energy.m_fuel_g, energy.e_batt_j, energy.m_f_eq_g,
              energy.soc_final);
  return 0;
}

int cmd_calibrate(const Globals& g, const std::string& reference_path) {
  const auto config = load_config(g);
  const auto reference = io::read_reference_csv(reference_path);
  const auto route_file = config.route_path.empty()
                              ? io::read_route(pipeline::data_dir() / "route_default.json")
                              : io::read_route(config.route_path);
  calibrate::GaConfig ga = config.ga;
  if (g.seed) ga.seed = pipeline::stage_seed(config, "calibrate");
  const auto result = calibrate::fit_edm(reference, edm::Route(route_file.segments), ga,
                                         config.driver, config.jobs);
  io::ensure_directory(config.out_dir);
  io::write_json_file(config.out_dir / "calibration.json", io::calibration_json(result));
  std::printf("RMSE %.4f mph  a=%.4f b=%.4f delta=%.4f c1=%.4f theta=%.4f\n", result.rmse_mph,
              result.params.a, result.params.b, result.params.delta, result.params.c1,
              result.params.theta);
  return 0;
}

int cmd_gen_data(const Globals& g) {
  const auto config = load_config(g);
  const auto log = make_logger(g);
  const auto inputs = pipeline::load_inputs(config);
  io::ensure_directory(config.out_dir);
  io::write_json_file(config.out_dir / "config.json", pipeline::config_snapshot(config));
  const auto dataset = pipeline::synthesize(config, inputs, log);
  io::write_dataset(config.out_dir / "dataset.csv", dataset);
  std::printf("wrote %zu rows to %s\n", dataset.rows.size(),
              (config.out_dir / "dataset.csv").string().c_str());
  return 0;
}

fs::path default_dataset(const pipeline::PipelineConfig& c, const std::string& given) {
  return given.empty() ? c.out_dir / "dataset.csv" : fs::path(given);
}

int cmd_train(const Globals& g, const std::string& dataset_path) {
  const auto config = load_config(g);
  const auto log = make_logger(g);
  const auto data = io::read_dataset_csv(default_dataset(config, dataset_path));
  const auto split = conformal::split(data.y.size(), config.split_fractions,
                                      pipeline::stage_seed(config, "split"));
  if (log) log("fitting CQR on " + std::to_string(split.train.size()) + " training rows");
  const auto model = conformal::cqr_fit(
      data.x.select(split.train), select(data.y, split.train), data.x.select(split.calib),
      select(data.y, split.calib), config.alpha, config.hyperparams, config.jobs);
  io::ensure_directory(config.out_dir);
  io::write_json_file(config.out_dir / "cqr_model.json", pipeline::CqrArtifact{model}.to_json());
  io::write_json_file(config.out_dir / "config.json", pipeline::config_snapshot(config));
  std::printf("Q_alpha = %.6g g\n", model.q_alpha);
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& dataset_path, const std::string& model_path) {
  auto config = load_config(g);
  const auto log = make_logger(g);
  const auto data = io::read_dataset_csv(default_dataset(config, dataset_path));
  const fs::path model_file = model_path.empty() ? config.out_dir / "cqr_model.json" : fs::path(model_path);
  std::optional<conformal::CqrModel> prefit;
  if (std::find(config.methods.begin(), config.methods.end(), "CQR") != config.methods.end()) {
    prefit = pipeline::CqrArtifact::from_json(io::read_json_file(model_file)).model;
    config.alpha = prefit->alpha;
  }
  const auto split = conformal::split(data.y.size(), config.split_fractions,
                                      pipeline::stage_seed(config, "split"));
  const auto run = pipeline::run_methods(config, data.x, data.y, split, prefit, log);
  io::ensure_directory(config.out_dir);
  const auto reports = pipeline::evaluate_and_write(config, split, data.y, run);
  for (const auto& r : reports) {
    std::printf("%-6s coverage %.4f  mean width %.4f g  crossing %.4f\n", r.name.c_str(),
                r.coverage, r.mean_width, r.crossing_rate);
  }
  return 0;
}

int cmd_pipeline(const Globals& g, const std::vector<std::string>& methods) {
  auto config = load_config(g);
  if (!methods.empty()) {
    config.methods.clear();
    for (const auto& m : methods) {
      const auto name = pipeline::canonical_method(m);
      if (std::find(config.methods.begin(), config.methods.end(), name) == config.methods.end()) {
        config.methods.push_back(name);
      }
    }
  }
  const auto result = pipeline::run_pipeline(config, make_logger(g));
  for (const auto& r : result.reports) {
    std::printf("%-6s coverage %.4f  mean width %.4f g  crossing %.4f\n", r.name.c_str(),
                r.coverage, r.mean_width, r.crossing_rate);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PHEV fuel-consumption prediction intervals with conformalized quantile regression"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline configuration JSON");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--jobs", g.jobs, "Worker threads");
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Drive the route with one parameter set and compute energy use");
  simulate->add_option("--a", sim.params.a, "Maximum acceleration, m/s^2");
  simulate->add_option("--b", sim.params.b, "Comfortable deceleration, m/s^2");
  simulate->add_option("--delta", sim.params.delta, "Acceleration exponent");
  simulate->add_option("--c1", sim.params.c1, "Critical braking calibration");
  simulate->add_option("--theta", sim.params.theta, "Speed-limit offset, m/s");
  simulate->add_option("--soc0", sim.soc0, "Initial state of charge");
  simulate->add_flag("--trace", sim.trace, "Also write the per-step plant trace");

  std::string reference;
  auto* calib = app.add_subcommand("calibrate", "Fit EDM parameters to a reference speed trace");
  calib->add_option("--reference", reference, "CSV with t_s and v_mps or v_mph")->required();

  auto* gen = app.add_subcommand("gen-data", "Sample driver parameters and build the dataset");

  std::string dataset_path;
  auto* train = app.add_subcommand("train", "Fit the CQR quantile models on a dataset");
  train->add_option("--dataset", dataset_path, "Dataset CSV (default <out>/dataset.csv)");

  std::string model_path;
  auto* evaluate = app.add_subcommand("evaluate", "Score CQR and the baselines on the test split");
  evaluate->add_option("--dataset", dataset_path, "Dataset CSV (default <out>/dataset.csv)");
  evaluate->add_option("--model", model_path, "CQR model JSON (default <out>/cqr_model.json)");

  std::vector<std::string> methods;
  auto* pipe = app.add_subcommand("pipeline", "Run the full experiment end to end");
  pipe->add_option("--methods", methods, "Subset of cqr, cv, cvplus, jkab")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*simulate) return cmd_simulate(g, sim);
    if (*calib) return cmd_calibrate(g, reference);
    if (*gen) return cmd_gen_data(g);
    if (*train) return cmd_train(g, dataset_path);
    if (*evaluate) return cmd_evaluate(g, dataset_path, model_path);
    if (*pipe) return cmd_pipeline(g, methods);
  } catch (const pipeline::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const SimulationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSimulation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
