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

#include "phevcqr/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "phevcqr/copula.hpp"
#include "phevcqr/seed.hpp"

#ifndef PHEVCQR_DATA_DIR
#define PHEVCQR_DATA_DIR "data"
#endif

namespace phevcqr::pipeline {

fs::path data_dir() {
  if (const char* env = std::getenv("PHEVCQR_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return PHEVCQR_DATA_DIR;
}

std::string canonical_method(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c == '+') {
      key += "plus";
    } else if (std::isalnum(static_cast<unsigned char>(c))) {
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (key == "cqr") return "CQR";
  if (key == "cv") return "CV";
  if (key == "cvplus") return "CV+";
  if (key == "jkplusab" || key == "jkab" || key == "jackknifeplusafterbootstrap") return "JK+aB";
  throw InputError("unknown method '" + std::string(name) + "' (expected cqr, cv, cvplus, jkab)");
}

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

void validate(const PipelineConfig& c, const std::string& source) {
  auto fail = [&](const std::string& what) { throw InputError(source + ": " + what); };
  if (c.copula_samples < 1) fail("copula_samples must be >= 1");
  if (c.soc0_list.empty()) fail("soc0_list must not be empty");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (c.methods.empty()) fail("methods must not be empty");
  if (c.cv_folds < 2) fail("cv_folds must be >= 2");
  if (c.jkab_resamples < 2) fail("jkab_resamples must be >= 2");
  if (c.jobs < 1) fail("jobs must be >= 1");
  double total = 0.0;
  for (double f : c.split_fractions) {
    if (!(f > 0.0)) fail("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("split fractions must sum to 1");
  gbq::validate(c.hyperparams);
}

}  // namespace

PipelineConfig config_from_json(const io::Json& doc, const std::string& source,
                                const fs::path& base_dir) {
  io::check_keys(doc,
                 {"route", "vehicle", "params", "driver_constants", "ga", "copula_samples",
                  "soc0_list", "split_fractions", "alpha", "hyperparams", "methods", "cv_folds",
                  "jkab_resamples", "seed", "out_dir", "jobs"},
                 source);
  PipelineConfig c;
  std::string path;
  if (doc.contains("route")) {
    io::read_field(doc, "route", path, source);
    c.route_path = resolve(path, base_dir);
  }
  if (doc.contains("vehicle")) {
    io::read_field(doc, "vehicle", path, source);
    c.vehicle_path = resolve(path, base_dir);
  }
  if (doc.contains("params")) {
    io::read_field(doc, "params", path, source);
    c.params_path = resolve(path, base_dir);
  }
  if (doc.contains("out_dir")) {
    io::read_field(doc, "out_dir", path, source);
    c.out_dir = resolve(path, base_dir);
  }
  if (doc.contains("driver_constants")) {
    c.driver = io::driver_constants_from_json(doc["driver_constants"], source + ".driver_constants");
  }
  if (doc.contains("ga")) c.ga = io::ga_config_from_json(doc["ga"], source + ".ga");
  if (doc.contains("hyperparams")) {
    c.hyperparams = io::hyperparams_from_json(doc["hyperparams"], source + ".hyperparams");
  }
  std::uint64_t samples = c.copula_samples;
  io::read_field(doc, "copula_samples", samples, source);
  c.copula_samples = static_cast<std::size_t>(samples);
  io::read_field(doc, "soc0_list", c.soc0_list, source);
  if (doc.contains("split_fractions")) {
    std::vector<double> f;
    io::read_field(doc, "split_fractions", f, source);
    if (f.size() != 3) throw InputError(source + ".split_fractions: expected 3 numbers");
    c.split_fractions = {f[0], f[1], f[2]};
  }
  io::read_field(doc, "alpha", c.alpha, source);
  if (doc.contains("methods")) {
    const auto& m = doc["methods"];
    if (!m.is_array()) throw InputError(source + ".methods: expected an array of names");
    c.methods.clear();
    for (const auto& e : m) {
      if (!e.is_string()) throw InputError(source + ".methods: expected an array of names");
      const auto name = canonical_method(e.get<std::string>());
      if (std::find(c.methods.begin(), c.methods.end(), name) == c.methods.end()) {
        c.methods.push_back(name);
      }
    }
  }
  io::read_field(doc, "cv_folds", c.cv_folds, source);
  io::read_field(doc, "jkab_resamples", c.jkab_resamples, source);
  io::read_field(doc, "seed", c.seed, source);
  io::read_field(doc, "jobs", c.jobs, source);
  validate(c, source);
  return c;
}

PipelineConfig config_from_json(const io::Json& doc, const std::string& source) {
  return config_from_json(doc, source, {});
}

PipelineConfig read_config(const fs::path& path) {
  return config_from_json(io::read_json_file(path), path.string(), path.parent_path());
}

namespace {

fs::path route_file(const PipelineConfig& c) {
  return c.route_path.empty() ? data_dir() / "route_default.json" : c.route_path;
}
fs::path vehicle_file(const PipelineConfig& c) {
  return c.vehicle_path.empty() ? data_dir() / "vehicle_default.json" : c.vehicle_path;
}
fs::path params_file(const PipelineConfig& c) {
  return c.params_path.empty() ? data_dir() / "calibrated_params.csv" : c.params_path;
}

std::string absolute_string(const fs::path& p) {
  std::error_code ec;
  const auto abs = fs::absolute(p, ec);
  return (ec ? p : abs).lexically_normal().string();
}

}  // namespace

io::Json config_snapshot(const PipelineConfig& c) {
  io::Json methods = io::Json::array();
  for (const auto& m : c.methods) methods.push_back(m);
  return {{"route", absolute_string(route_file(c))},
          {"vehicle", absolute_string(vehicle_file(c))},
          {"params", absolute_string(params_file(c))},
          {"driver_constants", io::to_json(c.driver)},
          {"ga", io::to_json(c.ga)},
          {"copula_samples", c.copula_samples},
          {"soc0_list", c.soc0_list},
          {"split_fractions", c.split_fractions},
          {"alpha", c.alpha},
          {"hyperparams", io::to_json(c.hyperparams)},
          {"methods", methods},
          {"cv_folds", c.cv_folds},
          {"jkab_resamples", c.jkab_resamples},
          {"seed", c.seed},
          {"out_dir", absolute_string(c.out_dir)},
          {"jobs", c.jobs}};
}

std::uint64_t stage_seed(const PipelineConfig& config, std::string_view stage) {
  return derive_seed(config.seed, stage);
}

namespace {

template <typename Fn>
auto run_stage(const std::string& name, const Logger& log, Fn&& fn) -> decltype(fn()) {
  if (log) log("stage " + name);
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

Inputs load_inputs(const PipelineConfig& config) {
  Inputs in;
  in.route = io::read_route(route_file(config));
  in.plant = io::read_plant_params(vehicle_file(config));
  in.calibrated = io::read_params_csv(params_file(config));
  for (double soc : config.soc0_list) {
    if (soc < in.plant.battery.soc_min || soc > in.plant.battery.soc_max) {
      throw InputError("soc0 " + io::format_number(soc) + " lies outside the battery window [" +
                       io::format_number(in.plant.battery.soc_min) + ", " +
                       io::format_number(in.plant.battery.soc_max) + "]");
    }
  }
  return in;
}

synth::Dataset synthesize(const PipelineConfig& config, const Inputs& inputs, const Logger& log) {
  const auto model = run_stage("copula-fit", log, [&] {
    return synth::fit_tcopula(synth::to_matrix(inputs.calibrated));
  });
  if (log) log("copula nu = " + std::to_string(model.nu));
  const auto params = run_stage("copula-sample", log, [&] {
    return synth::to_params(
        synth::sample_tcopula(model, config.copula_samples, stage_seed(config, "copula")));
  });
  return run_stage("simulate", log, [&] {
    synth::SimulationSetup setup;
    setup.driver = config.driver;
    setup.plant = inputs.plant;
    setup.jobs = config.jobs;
    auto ds = synth::generate_dataset(params, inputs.route.segments, config.soc0_list, setup);
    ds.seed = config.seed;
    ds.route_id = inputs.route.id;
    if (log && !ds.exclusions.empty()) {
      log(std::to_string(ds.exclusions.size()) + " trips excluded from the dataset");
    }
    return ds;
  });
}

io::Json CqrArtifact::to_json() const {
  io::Json doc;
  doc["format"] = "phevcqr.cqr";
  doc["version"] = 1;
  doc["alpha"] = model.alpha;
  doc["q_alpha"] = model.q_alpha;
  doc["lower"] = model.lower.to_json();
  doc["upper"] = model.upper.to_json();
  return doc;
}

CqrArtifact CqrArtifact::from_json(const io::Json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "phevcqr.cqr" || doc.at("version").get<int>() != 1) {
      throw InputError("not a version 1 CQR model document");
    }
    CqrArtifact a;
    a.model.alpha = doc.at("alpha").get<double>();
    a.model.q_alpha = doc.at("q_alpha").get<double>();
    a.model.lower = gbq::QuantileEnsemble::from_json(nlohmann::json::parse(doc.at("lower").dump()));
    a.model.upper = gbq::QuantileEnsemble::from_json(nlohmann::json::parse(doc.at("upper").dump()));
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed CQR model document: ") + e.what());
  }
}

namespace {

std::vector<std::size_t> concat(const std::vector<std::size_t>& a,
                                const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

bool wants(const PipelineConfig& c, const char* method) {
  return std::find(c.methods.begin(), c.methods.end(), method) != c.methods.end();
}

}  // namespace

MethodRun run_methods(const PipelineConfig& config, const FeatureMatrix& x,
                      std::span<const double> y, const conformal::DataSplit& split,
                      const std::optional<conformal::CqrModel>& prefit, const Logger& log) {
  MethodRun run;
  const auto x_test = x.select(split.test);
  std::vector<std::vector<conformal::PredictionInterval>> by_method(config.methods.size());
  auto slot = [&](const char* name) -> std::vector<conformal::PredictionInterval>& {
    const auto it = std::find(config.methods.begin(), config.methods.end(), name);
    return by_method[static_cast<std::size_t>(it - config.methods.begin())];
  };

  if (wants(config, "CQR")) {
    if (prefit) {
      run.cqr = *prefit;
    } else {
      if (log) log("fitting CQR quantile models");
      run.cqr = conformal::cqr_fit(x.select(split.train), select(y, split.train),
                                   x.select(split.calib), select(y, split.calib), config.alpha,
                                   config.hyperparams, config.jobs);
    }
    slot("CQR") = conformal::cqr_predict(*run.cqr, x_test, config.jobs);
  }

  const auto pool = concat(split.train, split.calib);
  const bool cv = wants(config, "CV");
  const bool cvplus = wants(config, "CV+");
  const bool jkab = wants(config, "JK+aB");
  if (cv || cvplus || jkab) {
    const auto x_pool = x.select(pool);
    const auto y_pool = select(y, pool);
    const auto fitter = conformal::gbq_point_fitter(config.hyperparams);
    if (cv || cvplus) {
      if (log) log("fitting " + std::to_string(config.cv_folds) + " cross-validation folds");
      const auto fold = conformal::kfold_assignment(pool.size(), config.cv_folds,
                                                    stage_seed(config, "cv-folds"));
      const auto cf = conformal::cross_fit(x_pool, y_pool, fold, fitter, config.jobs);
      if (cv) {
        if (log) log("fitting the full-pool point model");
        slot("CV") = conformal::cv_intervals(cf, fitter(x_pool, y_pool), x_test, config.alpha);
      }
      if (cvplus) slot("CV+") = conformal::cvplus_intervals(cf, x_test, config.alpha, config.jobs);
    }
    if (jkab) {
      if (log) log("fitting " + std::to_string(config.jkab_resamples) + " bootstrap models");
      const auto resamples = conformal::bootstrap_resamples(pool.size(), config.jkab_resamples,
                                                            stage_seed(config, "jkab"));
      auto res = conformal::jkab_fit_predict(x_pool, y_pool, x_test, config.alpha, resamples,
                                             fitter, config.jobs);
      run.jkab_excluded = res.excluded;
      if (log && res.excluded > 0) {
        log(std::to_string(res.excluded) + " rows had no out-of-bag model");
      }
      slot("JK+aB") = std::move(res.intervals);
    }
  }
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    run.intervals.push_back({config.methods[m], std::move(by_method[m])});
  }
  return run;
}

std::vector<eval::MethodReport> evaluate_and_write(const PipelineConfig& config,
                                                   const conformal::DataSplit& split,
                                                   std::span<const double> y,
                                                   const MethodRun& run) {
  const auto y_test = select(y, split.test);
  std::vector<eval::MethodReport> reports;
  for (const auto& m : run.intervals) reports.push_back(eval::evaluate(m.method, m.intervals, y_test));
  eval::emit_report(reports, {config.alpha, config.seed}, config.out_dir);
  io::write_intervals_csv(config.out_dir / "intervals.csv", split.test, y_test, run.intervals);
  return reports;
}

PipelineResult run_pipeline(const PipelineConfig& config, const Logger& log) {
  const Inputs inputs = load_inputs(config);
  run_stage("output", log, [&] {
    io::ensure_directory(config.out_dir);
    io::write_json_file(config.out_dir / "config.json", config_snapshot(config));
  });

  PipelineResult result;
  result.dataset = synthesize(config, inputs, log);
  run_stage("write-dataset", log, [&] { io::write_dataset(config.out_dir / "dataset.csv", result.dataset); });
  const auto x = result.dataset.features();
  const auto y = result.dataset.targets();
  if (log) log("dataset rows: " + std::to_string(y.size()));

  result.split = run_stage("split", log, [&] {
    return conformal::split(y.size(), config.split_fractions, stage_seed(config, "split"));
  });
  result.run = run_stage("train", log, [&] { return run_methods(config, x, y, result.split, std::nullopt, log); });
  if (result.run.cqr) {
    run_stage("write-model", log, [&] {
      io::write_json_file(config.out_dir / "cqr_model.json", CqrArtifact{*result.run.cqr}.to_json());
    });
  }
  result.reports = run_stage("report", log, [&] { return evaluate_and_write(config, result.split, y, result.run); });
  return result;
}

}  // namespace phevcqr::pipeline
