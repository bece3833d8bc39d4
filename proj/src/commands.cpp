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

#include "crossalign/commands.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crossalign/checkpoint.hpp"
#include "crossalign/config.hpp"
#include "crossalign/error.hpp"
#include "crossalign/report.hpp"
#include "crossalign/zsl.hpp"

namespace crossalign {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Flags shared by every pipeline command. Empty strings and unset counts mean
/// "keep whatever the preset and config file say".
struct Flags {
  std::string config;
  std::string preset;
  std::string ratio;
  std::string out;
  std::string visual;
  std::string descriptors;
  std::size_t splits = 0;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  bool scale_model = false;
  bool binary = false;
  std::string modes = "zsl,gzsl";

  CLI::Option* splits_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
};

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

/// Preset first, then the config file, then explicit flags.
RunConfig resolve(const Flags& f, const std::string& preset_override = "") {
  json j = json::object();
  if (!f.config.empty()) {
    try {
      j = read_json_file(f.config);
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
  }
  if (!j.is_object()) throw ConfigError("config " + f.config + " must hold a JSON object");
  if (!f.preset.empty()) j["preset"] = f.preset;
  if (!preset_override.empty()) {
    j["preset"] = preset_override;
    j.erase("mode");
  }
  RunConfig cfg = RunConfig::from_json(j);
  if (!f.ratio.empty()) cfg.ratio = SplitRatio::parse(f.ratio);
  if (f.splits_opt != nullptr && f.splits_opt->count() > 0) cfg.num_splits = f.splits;
  if (f.seed_opt != nullptr && f.seed_opt->count() > 0) cfg.seed = f.seed;
  if (f.epochs_opt != nullptr && f.epochs_opt->count() > 0) cfg.hp.epochs = f.epochs;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.scale_model) cfg.scale_model = true;
  if (!f.visual.empty() || !f.descriptors.empty()) {
    cfg.synthetic = false;
    cfg.visual_path = f.visual;
    cfg.descriptor_path = f.descriptors;
  }
  return cfg;
}

/// Validates, loads the table and applies model scaling.
FeatureTable prepare(RunConfig& cfg) {
  cfg.validate();
  FeatureTable table = load_run_data(cfg);
  if (cfg.ratio.seen + cfg.ratio.unseen != table.num_classes()) {
    throw ConfigError("ratio " + cfg.ratio.str() + " does not match the " +
                      std::to_string(table.num_classes()) + " classes in the data");
  }
  if (cfg.scale_model) scale_model_to_features(cfg.hp, table.visual_dim(), table.semantic_dim());
  cfg.hp.validate();
  return table;
}

std::string split_name(const char* prefix, std::size_t i, const char* ext) {
  return std::string(prefix) + std::to_string(i) + ext;
}

int cmd_gen_data(const Flags& f) {
  RunConfig cfg = resolve(f);
  if (!cfg.synthetic) throw ConfigError("gen-data needs a synthetic config, not data files");
  const SynthConfig synth = cfg.resolved_synth();
  synth.validate();
  const FeatureTable table = synth_dataset(synth);
  make_dirs(cfg.out_dir);
  const char* ext = f.binary ? ".bin" : ".csv";
  const fs::path visual = cfg.out_dir / (std::string("visual") + ext);
  const fs::path descriptors = cfg.out_dir / (std::string("descriptors") + ext);
  if (f.binary) {
    write_features_binary(table, visual, descriptors);
  } else {
    write_features_csv(table, visual, descriptors);
  }
  write_text(cfg.out_dir / "synth.json", synth_to_json(synth).dump(2) + "\n");
  std::cout << "wrote " << table.num_instances() << " visual rows and " << table.num_classes()
            << " descriptors (dims " << table.visual_dim() << '/' << table.semantic_dim()
            << ") to " << cfg.out_dir.string() << '\n';
  return 0;
}

int cmd_train(const Flags& f) {
  RunConfig cfg = resolve(f);
  const FeatureTable table = prepare(cfg);
  const fs::path out = cfg.out_dir;
  for (const char* sub : {"logs", "checkpoints", "splits"}) make_dirs(out / sub);
  const json echo = cfg.to_json();
  write_text(out / "config.json", echo.dump(2) + "\n");

  std::ofstream log;
  std::size_t log_split = static_cast<std::size_t>(-1);
  auto log_for = [&](std::size_t split) -> std::ofstream& {
    if (split != log_split) {
      if (log.is_open()) log.close();
      const fs::path path = out / "logs" / split_name("train_split", split, ".jsonl");
      log.open(path, std::ios::trunc);
      if (!log) throw IoError("cannot write " + path.string());
      log_split = split;
    }
    return log;
  };

  ExperimentHooks hooks;
  hooks.on_step = [&](std::size_t split, const StepRecord& r) {
    log_for(split) << step_log_line(split, r).dump() << '\n';
  };
  hooks.on_epoch = [&](std::size_t split, const EpochRecord& r) {
    log_for(split) << epoch_log_line(split, r).dump() << '\n';
  };
  hooks.on_model = [&](std::size_t split, const SplitSpec& spec, const VaePair& model) {
    save_checkpoint(out / "checkpoints" / split_name("split", split, ".json"), model);
    write_text(out / "splits" / split_name("split", split, ".json"), spec.to_json() + "\n");
    std::cout << "split " << split << " trained\n" << std::flush;
  };
  const ExperimentReport report =
      run_experiment(table, cfg.ratio, cfg.num_splits, cfg.hp, cfg.mode, cfg.seed, hooks);
  if (log.is_open()) log.close();
  const json rj = experiment_report_json(report, echo);
  write_text(out / "report.json", rj.dump(2) + "\n");
  std::cout << format_experiment_table(rj);
  return 0;
}

int cmd_eval(const Flags& f) {
  if (f.out.empty()) throw ConfigError("eval needs --out naming a trained run directory");
  const fs::path run = f.out;
  RunConfig cfg = RunConfig::from_json(read_json_file(run / "config.json"));
  cfg.scale_model = false;  // the echo already holds the resolved widths
  const FeatureTable table = prepare(cfg);
  ExperimentReport report;
  report.mode = cfg.mode;
  report.ratio = cfg.ratio;
  report.master_seed = cfg.seed;
  for (std::size_t i = 0; i < cfg.num_splits; ++i) {
    const fs::path ckpt = run / "checkpoints" / split_name("split", i, ".json");
    const fs::path spec_path = run / "splits" / split_name("split", i, ".json");
    if (!fs::exists(ckpt) || !fs::exists(spec_path)) {
      throw IoError("run " + run.string() + " has no checkpoint for split " + std::to_string(i));
    }
    std::ifstream in(spec_path);
    std::stringstream text;
    text << in.rdbuf();
    const SplitSpec split = SplitSpec::from_json(text.str());
    const VaePair model = load_checkpoint(ckpt);
    if (model.dims.visual_dim != table.visual_dim() ||
        model.dims.semantic_dim != table.semantic_dim()) {
      throw DimensionError("checkpoint " + ckpt.string() + " does not match the data widths");
    }
    Metrics m = evaluate_model(model, table, split, cfg.mode, cfg.hp, split_run_rng(cfg.seed, i));
    report.per_split.push_back(SplitResult{split, std::move(m), {}});
  }
  summarize_report(report);
  const json rj = experiment_report_json(report, cfg.to_json());
  write_text(run / "eval_report.json", rj.dump(2) + "\n");
  std::cout << format_experiment_table(rj);
  return 0;
}

int cmd_ablate(const Flags& f) {
  bool run_zsl = false, run_gzsl = false;
  std::stringstream modes(f.modes);
  for (std::string m; std::getline(modes, m, ',');) {
    const Mode mode = parse_mode(m);
    (mode == Mode::kZsl ? run_zsl : run_gzsl) = true;
  }
  RunConfig zsl = resolve(f, "zsl");
  RunConfig gzsl = resolve(f, "gzsl");
  const FeatureTable table = prepare(zsl);
  prepare(gzsl);
  make_dirs(zsl.out_dir);
  const json echo = {{"zsl", zsl.to_json()}, {"gzsl", gzsl.to_json()}, {"modes", f.modes}};
  write_text(zsl.out_dir / "config.json", echo.dump(2) + "\n");

  AblationOptions options;
  options.num_splits = zsl.num_splits;
  options.master_seed = zsl.seed;
  options.run_zsl = run_zsl;
  options.run_gzsl = run_gzsl;
  const auto rows = run_ablation(table, zsl.ratio, zsl.hp, gzsl.hp, options);
  const json aj = ablation_report_json(rows, echo);
  write_text(zsl.out_dir / "ablation.csv", ablation_csv(rows));
  write_text(zsl.out_dir / "ablation.json", aj.dump(2) + "\n");
  write_text(zsl.out_dir / "ablation_bars.svg", ablation_bar_svg(aj));
  std::cout << format_ablation_table(aj);
  return 0;
}

int cmd_report(const Flags& f, const std::string& positional) {
  const fs::path run = !positional.empty() ? fs::path(positional) : fs::path(f.out);
  if (run.empty()) throw ConfigError("report needs a run directory");
  if (!fs::is_directory(run)) throw IoError("run directory " + run.string() + " does not exist");
  bool found = false;

  for (const char* name : {"report.json", "eval_report.json"}) {
    if (fs::exists(run / name)) {
      std::cout << name << '\n' << format_experiment_table(read_json_file(run / name));
      found = true;
    }
  }

  const fs::path logs = run / "logs";
  if (fs::is_directory(logs)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(logs)) {
      if (e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<std::vector<EpochRecord>> curves;
    for (const fs::path& p : files) {
      std::ifstream in(p);
      if (!in) throw IoError("cannot read " + p.string());
      std::vector<EpochRecord> history;
      std::size_t lineno = 0;
      for (std::string line; std::getline(in, line);) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
          j = json::parse(line);
        } catch (const json::exception&) {
          throw FormatError(p.string() + ":" + std::to_string(lineno) + " is not a JSON record");
        }
        if (j.value("kind", std::string()) == "epoch") history.push_back(epoch_from_log_line(j));
      }
      curves.push_back(std::move(history));
    }
    if (!curves.empty()) {
      write_text(run / "loss_curves.svg", loss_curve_svg(curves));
      std::cout << "loss curves for " << curves.size() << " split(s) -> "
                << (run / "loss_curves.svg").string() << '\n';
      found = true;
    }
  }

  if (fs::exists(run / "ablation.json")) {
    const json aj = read_json_file(run / "ablation.json");
    std::cout << format_ablation_table(aj);
    write_text(run / "ablation_bars.svg", ablation_bar_svg(aj));
    std::cout << "ablation chart -> " << (run / "ablation_bars.svg").string() << '\n';
    found = true;
  }

  if (!found) throw IoError("no logs or reports found in " + run.string());
  return 0;
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

void add_common(CLI::App* cmd, Flags& f, bool pipeline) {
  cmd->add_option("--config", f.config, "JSON run config");
  cmd->add_option("--out", f.out, "output directory");
  f.seed_opt = cmd->add_option("--seed", f.seed, "master seed");
  if (!pipeline) return;
  cmd->add_option("--preset", f.preset, "zsl or gzsl defaults");
  cmd->add_option("--ratio", f.ratio, "seen/unseen class counts, e.g. 60/10");
  f.splits_opt = cmd->add_option("--splits", f.splits, "number of random class splits");
  f.epochs_opt = cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--visual", f.visual, "visual feature file (CSV or binary)");
  cmd->add_option("--descriptors", f.descriptors, "class descriptor file (CSV or binary)");
  cmd->add_flag("--scale-model", f.scale_model, "size latent and hidden widths to the data");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"crossalign: cross-modal VAE alignment for zero-shot classification"};
  app.require_subcommand(1);
  Flags gen_flags, train_flags, eval_flags, ablate_flags, report_flags;
  std::string report_dir;

  CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic feature table");
  add_common(gen, gen_flags, false);
  gen->add_flag("--binary", gen_flags.binary, "write the binary format instead of CSV");
  CLI::App* train_cmd = app.add_subcommand("train", "train and evaluate on each split");
  add_common(train_cmd, train_flags, true);
  CLI::App* eval_cmd = app.add_subcommand("eval", "re-evaluate the checkpoints of a run");
  eval_cmd->add_option("--out", eval_flags.out, "run directory")->required();
  CLI::App* ablate = app.add_subcommand("ablate", "six-variant contrastive ablation");
  add_common(ablate, ablate_flags, true);
  ablate->add_option("--modes", ablate_flags.modes, "comma list of zsl,gzsl");
  CLI::App* report = app.add_subcommand("report", "summarize a run directory");
  report->add_option("--out", report_flags.out, "run directory");
  report->add_option("run_dir", report_dir, "run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[config] " << one_line(e.what()) << '\n';
    return static_cast<int>(ErrorCategory::kConfig);
  }

  try {
    if (*gen) return cmd_gen_data(gen_flags);
    if (*train_cmd) return cmd_train(train_flags);
    if (*eval_cmd) return cmd_eval(eval_flags);
    if (*ablate) return cmd_ablate(ablate_flags);
    if (*report) return cmd_report(report_flags, report_dir);
  } catch (const Error& e) {
    std::cerr << "error[" << category_name(e.category()) << "] " << one_line(e.what()) << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error[io] " << one_line(e.what()) << '\n';
    return static_cast<int>(ErrorCategory::kIo);
  } catch (const std::exception& e) {
    std::cerr << "error[internal] " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace crossalign
