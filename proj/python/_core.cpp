/*
 * Copyright 2026 The crossalign Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Thin bindings: JSON crosses the boundary as text, matrices as numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "crossalign/commands.hpp"
#include "crossalign/config.hpp"
#include "crossalign/error.hpp"
#include "crossalign/report.hpp"
#include "crossalign/zsl.hpp"

namespace py = pybind11;
using namespace crossalign;

namespace {

py::array_t<double> to_numpy(const Tensor2D& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

RunConfig config_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return RunConfig::from_json(j);
}

py::tuple synth(const std::string& config_text) {
  const RunConfig cfg = config_from_text(config_text);
  const FeatureTable t = synth_dataset(cfg.resolved_synth());
  return py::make_tuple(to_numpy(t.visual), py::cast(t.labels), to_numpy(t.descriptors));
}

std::vector<std::string> splits(std::size_t num_classes, const std::string& ratio,
                                std::size_t num_splits, std::uint64_t seed) {
  std::vector<std::string> out;
  for (const auto& s : make_splits(num_classes, SplitRatio::parse(ratio), num_splits, seed)) {
    out.push_back(s.to_json());
  }
  return out;
}

std::string resolved_config(const std::string& config_text) {
  return config_from_text(config_text).to_json().dump();
}

std::string experiment(const std::string& config_text) {
  RunConfig cfg = config_from_text(config_text);
  cfg.validate();
  const FeatureTable table = load_run_data(cfg);
  if (cfg.scale_model) scale_model_to_features(cfg.hp, table.visual_dim(), table.semantic_dim());
  ExperimentReport report;
  {
    py::gil_scoped_release release;
    report = run_experiment(table, cfg.ratio, cfg.num_splits, cfg.hp, cfg.mode, cfg.seed);
  }
  return experiment_report_json(report, cfg.to_json()).dump();
}

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"crossalign"};
  for (const auto& a : args) argv.push_back(a.c_str());
  py::gil_scoped_release release;
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of crossalign.";

  static py::exception<Error> base(m, "CrossalignError");
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<DataError> data_error(m, "DataError", base.ptr());
  static py::exception<NumericError> numeric_error(m, "NumericError", base.ptr());
  static py::exception<IoError> io_error(m, "IoError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.category()) {
        case ErrorCategory::kConfig: py::set_error(config_error, e.what()); break;
        case ErrorCategory::kData: py::set_error(data_error, e.what()); break;
        case ErrorCategory::kNumeric: py::set_error(numeric_error, e.what()); break;
        case ErrorCategory::kIo: py::set_error(io_error, e.what()); break;
      }
    }
  });

  m.def("synth_dataset", &synth, py::arg("config_json") = "",
        "(visual, labels, descriptors) generated from the synth block of a run config.");
  m.def("make_splits", &splits, py::arg("num_classes"), py::arg("ratio"),
        py::arg("num_splits"), py::arg("seed"));
  m.def("resolved_config", &resolved_config, py::arg("config_json") = "");
  m.def("run_experiment", &experiment, py::arg("config_json") = "");
  m.def("harmonic_mean", &harmonic_mean, py::arg("seen"), py::arg("unseen"));
  m.def("run_cli", &cli, py::arg("args"));
}
