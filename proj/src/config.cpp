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

#include "crossalign/config.hpp"

#include <algorithm>
#include <fstream>

#include "crossalign/error.hpp"
#include "crossalign/rng.hpp"

namespace crossalign {

using nlohmann::json;

nlohmann::json synth_to_json(const SynthConfig& c) {
  return json{{"num_classes", c.num_classes},
              {"instances_per_class", c.instances_per_class},
              {"visual_dim", c.visual_dim},
              {"semantic_dim", c.semantic_dim},
              {"concept_dim", c.concept_dim},
              {"intra_class_std", c.intra_class_std},
              {"inter_class_sim", c.inter_class_sim},
              {"label_noise_rate", c.label_noise_rate},
              {"descriptor_noise_std", c.descriptor_noise_std},
              {"seed", c.seed}};
}

SynthConfig synth_from_json(const nlohmann::json& j, SynthConfig c) {
  c.num_classes = j.value("num_classes", c.num_classes);
  c.instances_per_class = j.value("instances_per_class", c.instances_per_class);
  c.visual_dim = j.value("visual_dim", c.visual_dim);
  c.semantic_dim = j.value("semantic_dim", c.semantic_dim);
  c.concept_dim = j.value("concept_dim", c.concept_dim);
  c.intra_class_std = j.value("intra_class_std", c.intra_class_std);
  c.inter_class_sim = j.value("inter_class_sim", c.inter_class_sim);
  c.label_noise_rate = j.value("label_noise_rate", c.label_noise_rate);
  c.descriptor_noise_std = j.value("descriptor_noise_std", c.descriptor_noise_std);
  c.seed = j.value("seed", c.seed);
  return c;
}

void RunConfig::apply_preset(const std::string& name) {
  const Mode m = parse_mode(name);
  preset = name;
  mode = m;
  hp = crossalign::preset(m);
}

void RunConfig::apply(const nlohmann::json& j) {
  try {
    if (j.contains("mode")) mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("lambda")) {
      const auto l = j.at("lambda").get<std::vector<double>>();
      if (l.size() != 5) throw ConfigError("'lambda' must list exactly five weights");
      hp.weights.cmfr = l[0];
      hp.weights.cmda = l[1];
      hp.weights.vtov = l[2];
      hp.weights.vtos = l[3];
      hp.weights.stov = l[4];
    }
    hp.weights.tau = j.value("tau", hp.weights.tau);
    hp.c = j.value("c", hp.c);
    hp.k = j.value("k", hp.k);
    hp.latent = j.value("latent_dim", hp.latent);
    hp.visual_hidden = j.value("visual_hidden", hp.visual_hidden);
    hp.semantic_hidden = j.value("semantic_hidden", hp.semantic_hidden);
    hp.epochs = j.value("epochs", hp.epochs);
    hp.optimizer.learning_rate = j.value("learning_rate", hp.optimizer.learning_rate);
    hp.optimizer.beta1 = j.value("beta1", hp.optimizer.beta1);
    hp.optimizer.beta2 = j.value("beta2", hp.optimizer.beta2);
    hp.optimizer.eps = j.value("eps", hp.optimizer.eps);
    hp.warmup_epochs = j.value("warmup_epochs", hp.warmup_epochs);
    hp.contrastive_on_mu = j.value("contrastive_on_mu", hp.contrastive_on_mu);
    hp.sum_reduction = j.value("sum_reduction", hp.sum_reduction);
    hp.n_gen = j.value("n_gen", hp.n_gen);
    hp.eval_on_sample = j.value("eval_on_sample", hp.eval_on_sample);
    if (j.contains("classifier")) {
      const json& c = j.at("classifier");
      hp.classifier.epochs = c.value("epochs", hp.classifier.epochs);
      hp.classifier.learning_rate = c.value("learning_rate", hp.classifier.learning_rate);
    }
    if (j.contains("data") && j.contains("synth")) {
      throw ConfigError("config names both 'data' files and a 'synth' generator; pick one");
    }
    if (j.contains("data")) {
      synthetic = false;
      visual_path = j.at("data").at("visual").get<std::string>();
      descriptor_path = j.at("data").at("descriptors").get<std::string>();
    }
    if (j.contains("synth")) {
      synthetic = true;
      synth = synth_from_json(j.at("synth"), synth);
      if (j.at("synth").contains("seed")) synth_seed_explicit = true;
    }
    if (j.contains("ratio")) ratio = SplitRatio::parse(j.at("ratio").get<std::string>());
    num_splits = j.value("splits", num_splits);
    seed = j.value("seed", seed);
    scale_model = j.value("scale_model", scale_model);
    if (j.contains("out")) out_dir = j.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    cfg.apply_preset(j.value("preset", std::string("zsl")));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad preset: ") + e.what());
  }
  cfg.apply(j);
  return cfg;
}

nlohmann::json RunConfig::to_json() const {
  json j;
  j["preset"] = preset;
  j["mode"] = mode_name(mode);
  j["lambda"] = {hp.weights.cmfr, hp.weights.cmda, hp.weights.vtov, hp.weights.vtos,
                 hp.weights.stov};
  j["tau"] = hp.weights.tau;
  j["c"] = hp.c;
  j["k"] = hp.k;
  j["latent_dim"] = hp.latent;
  j["visual_hidden"] = hp.visual_hidden;
  j["semantic_hidden"] = hp.semantic_hidden;
  j["epochs"] = hp.epochs;
  j["learning_rate"] = hp.optimizer.learning_rate;
  j["beta1"] = hp.optimizer.beta1;
  j["beta2"] = hp.optimizer.beta2;
  j["eps"] = hp.optimizer.eps;
  j["warmup_epochs"] = hp.warmup_epochs;
  j["contrastive_on_mu"] = hp.contrastive_on_mu;
  j["sum_reduction"] = hp.sum_reduction;
  j["n_gen"] = hp.n_gen;
  j["eval_on_sample"] = hp.eval_on_sample;
  j["classifier"] = {{"epochs", hp.classifier.epochs},
                     {"learning_rate", hp.classifier.learning_rate}};
  if (synthetic) {
    j["synth"] = synth_to_json(resolved_synth());
  } else {
    j["data"] = {{"visual", visual_path.string()}, {"descriptors", descriptor_path.string()}};
  }
  j["ratio"] = ratio.str();
  j["splits"] = num_splits;
  j["seed"] = seed;
  j["scale_model"] = scale_model;
  return j;
}

void RunConfig::validate() const {
  hp.validate();
  if (!(hp.optimizer.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (num_splits < 1) throw ConfigError("splits must be >= 1");
  if (ratio.seen < 1 || ratio.unseen < 1) throw ConfigError("ratio needs seen and unseen classes");
  if (synthetic) {
    synth.validate();
    if (ratio.seen + ratio.unseen != synth.num_classes) {
      throw ConfigError("ratio " + ratio.str() + " does not add up to the " +
                        std::to_string(synth.num_classes) + " synthetic classes");
    }
  } else {
    for (const auto& p : {visual_path, descriptor_path}) {
      if (p.empty() || !std::filesystem::exists(p)) {
        throw ConfigError("data file '" + p.string() + "' does not exist");
      }
    }
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

void scale_model_to_features(HyperParams& hp, std::size_t visual_dim, std::size_t semantic_dim) {
  hp.latent = std::max<std::size_t>(4, visual_dim / 2);
  hp.visual_hidden = 2 * visual_dim;
  hp.semantic_hidden = 2 * semantic_dim;
}

SynthConfig RunConfig::resolved_synth() const {
  SynthConfig s = synth;
  if (!synth_seed_explicit) s.seed = Rng(seed).split(StreamLabel::kData).seed();
  return s;
}

FeatureTable load_run_data(const RunConfig& cfg) {
  if (cfg.synthetic) return synth_dataset(cfg.resolved_synth());
  return load_features(cfg.visual_path, cfg.descriptor_path);
}

}  // namespace crossalign
