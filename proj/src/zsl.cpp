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

#include "crossalign/zsl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "crossalign/error.hpp"
#include "crossalign/numerics.hpp"

namespace crossalign {

LatentDataset generate_latent_training_set(const VaePair& model, const FeatureTable& table,
                                           const SplitSpec& split,
                                           const InstancePartition& partition, Mode mode,
                                           std::size_t n_gen, Rng& rng) {
  if (n_gen < 1) throw ConfigError("n_gen must be >= 1");
  const std::size_t latent = model.dims.latent;
  std::size_t total = split.unseen.size() * n_gen;
  if (mode == Mode::kGzsl) total += partition.seen_train.size();

  LatentDataset ds;
  ds.rows = Tensor2D(total, latent);
  ds.labels.reserve(total);
  ds.provenance.reserve(total);
  std::size_t r = 0;
  for (int cls : split.unseen) {
    if (cls < 0 || static_cast<std::size_t>(cls) >= table.num_classes()) {
      throw IntegrityError("unseen class " + std::to_string(cls) + " has no descriptor");
    }
    const Tensor2D desc = kernels::gather_rows(table.descriptors, {{static_cast<std::size_t>(cls)}});
    const LatentGaussian q = encode_semantic(model, desc);
    for (std::size_t i = 0; i < n_gen; ++i, ++r) {
      const Tensor2D z = gaussian_reparam_sample(q.mu, q.log_var, rng);
      std::copy(z.row(0).begin(), z.row(0).end(), ds.rows.row(r).begin());
      ds.labels.push_back(cls);
      ds.provenance.push_back(Provenance::kSemanticGenerated);
    }
  }
  if (mode == Mode::kGzsl && !partition.seen_train.empty()) {
    const Tensor2D visual = kernels::gather_rows(table.visual, partition.seen_train);
    const LatentGaussian q = encode_visual(model, visual);
    const Tensor2D z = gaussian_reparam_sample(q.mu, q.log_var, rng);
    for (std::size_t i = 0; i < z.rows(); ++i, ++r) {
      std::copy(z.row(i).begin(), z.row(i).end(), ds.rows.row(r).begin());
      ds.labels.push_back(table.labels[partition.seen_train[i]]);
      ds.provenance.push_back(Provenance::kVisualEncoded);
    }
  }
  return ds;
}

Tensor2D SoftmaxClassifier::logits(const Tensor2D& latent) const {
  return kernels::affine(latent, weights, bias);
}

std::vector<int> SoftmaxClassifier::predict(const Tensor2D& latent) const {
  const Tensor2D scores = logits(latent);
  std::vector<int> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    // max_element returns the first maximum; columns are in ascending class order.
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    out[i] = classes[best];
  }
  return out;
}

SoftmaxClassifier train_classifier(const LatentDataset& ds, const std::vector<int>& classes,
                                   const ClassifierSettings& settings) {
  if (ds.rows.rows() == 0) throw IntegrityError("classifier training set is empty");
  std::vector<int> sorted = classes;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 2) throw IntegrityError("classifier needs at least two classes");

  std::map<int, std::size_t> column;
  for (std::size_t j = 0; j < sorted.size(); ++j) column[sorted[j]] = j;
  std::vector<std::size_t> target(ds.labels.size());
  std::vector<std::size_t> counts(sorted.size(), 0);
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    auto it = column.find(ds.labels[i]);
    if (it == column.end()) {
      throw IntegrityError("latent row labelled " + std::to_string(ds.labels[i]) +
                           " is outside the classifier's classes");
    }
    target[i] = it->second;
    ++counts[it->second];
  }
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    if (counts[j] == 0) {
      throw IntegrityError("class " + std::to_string(sorted[j]) + " has no training rows");
    }
  }

  const std::size_t n = ds.rows.rows(), dim = ds.rows.cols(), C = sorted.size();
  SoftmaxClassifier clf;
  clf.classes = sorted;
  clf.weights = Tensor2D(dim, C);
  clf.bias = Tensor2D(1, C);
  std::vector<Tensor2D*> params{&clf.weights, &clf.bias};
  AdamState state = AdamState::zeros_like(params);
  const AdamSettings adam{settings.learning_rate, 0.9, 0.999, 1e-8};

  for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
    Tensor2D delta = clf.logits(ds.rows);  // becomes softmax - onehot
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto row = delta.row(i);
      const double peak = *std::max_element(row.begin(), row.end());
      double total = 0.0;
      for (double& v : row) {
        v = std::exp(v - peak);
        total += v;
      }
      for (double& v : row) v /= total;
      loss -= std::log(std::max(row[target[i]], 1e-300));
      row[target[i]] -= 1.0;
    }
    clf.loss_history.push_back(loss / static_cast<double>(n));
    Tensor2D grad_w = kernels::matmul_at(ds.rows, delta);
    Tensor2D grad_b(1, C);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < C; ++j) grad_b(0, j) += delta(i, j);
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (double& v : grad_w.values()) v *= inv;
    for (double& v : grad_b.values()) v *= inv;
    const std::vector<Tensor2D> grads{std::move(grad_w), std::move(grad_b)};
    adam_step(params, grads, state, adam);
  }
  return clf;
}

std::vector<int> classify(const VaePair& model, const SoftmaxClassifier& clf,
                          const Tensor2D& visual, Rng* sample_rng) {
  const LatentGaussian q = encode_visual(model, visual);
  if (sample_rng != nullptr) return clf.predict(gaussian_reparam_sample(q.mu, q.log_var, *sample_rng));
  return clf.predict(q.mu);
}

double harmonic_mean(double seen, double unseen) {
  const double denom = seen + unseen;
  return denom > 0.0 ? 2.0 * seen * unseen / denom : 0.0;
}

namespace {

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // correct, total

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

Tally score(const VaePair& model, const SoftmaxClassifier& clf, const FeatureTable& table,
            const std::vector<std::size_t>& rows, Rng* sample_rng) {
  Tally t;
  if (rows.empty()) return t;
  const std::vector<int> predicted =
      classify(model, clf, kernels::gather_rows(table.visual, rows), sample_rng);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int truth = table.labels[rows[i]];
    auto& pc = t.per_class[truth];
    ++pc.second;
    ++t.total;
    if (predicted[i] == truth) {
      ++pc.first;
      ++t.correct;
    }
  }
  return t;
}

void add_per_class(Metrics& m, const Tally& t) {
  for (const auto& [cls, ct] : t.per_class) {
    m.per_class[cls] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
}

}  // namespace

Metrics evaluate(const VaePair& model, const SoftmaxClassifier& clf, const FeatureTable& table,
                 const InstancePartition& partition, Mode mode, Rng* sample_rng) {
  Metrics m;
  m.mode = mode;
  if (partition.unseen_test.empty()) throw EvaluationError("no unseen-class test instances");
  if (mode == Mode::kZsl) {
    const Tally t = score(model, clf, table, partition.unseen_test, sample_rng);
    m.zsl_accuracy = t.accuracy();
    add_per_class(m, t);
    double macro = 0.0;
    for (const auto& [cls, acc] : m.per_class) macro += acc;
    m.zsl_macro = macro / static_cast<double>(m.per_class.size());
    return m;
  }
  if (partition.seen_test.empty()) throw EvaluationError("no seen-class test instances for GZSL");
  const Tally seen = score(model, clf, table, partition.seen_test, sample_rng);
  const Tally unseen = score(model, clf, table, partition.unseen_test, sample_rng);
  m.seen_accuracy = seen.accuracy();
  m.unseen_accuracy = unseen.accuracy();
  m.harmonic = harmonic_mean(m.seen_accuracy, m.unseen_accuracy);
  add_per_class(m, seen);
  add_per_class(m, unseen);
  return m;
}

Metrics evaluate_model(const VaePair& model, const FeatureTable& table, const SplitSpec& split,
                       Mode mode, const HyperParams& hp, const Rng& rng) {
  Rng clf_rng = rng.split(StreamLabel::kClassifier);
  const InstancePartition partition = partition_instances(table, split, mode);
  const LatentDataset ds =
      generate_latent_training_set(model, table, split, partition, mode, hp.n_gen, clf_rng);
  std::vector<int> classes = split.unseen;
  if (mode == Mode::kGzsl) {
    classes.clear();
    for (std::size_t c = 0; c < table.num_classes(); ++c) classes.push_back(static_cast<int>(c));
  }
  const SoftmaxClassifier clf = train_classifier(ds, classes, hp.classifier);
  Rng eval_rng = clf_rng.split(1);
  return evaluate(model, clf, table, partition, mode, hp.eval_on_sample ? &eval_rng : nullptr);
}

Rng split_run_rng(std::uint64_t master_seed, std::size_t index) {
  return Rng(master_seed).split(StreamLabel::kSplits).split(1 + index);
}

std::vector<SplitSpec> experiment_splits(std::size_t num_classes, SplitRatio ratio,
                                         std::size_t num_splits, std::uint64_t master_seed) {
  const Rng split_stream = Rng(master_seed).split(StreamLabel::kSplits);
  return make_splits(num_classes, ratio, num_splits, split_stream.seed());
}

void summarize_report(ExperimentReport& report) {
  const Mode mode = report.mode;
  const double n = static_cast<double>(report.per_split.size());
  auto stats = [&](auto field, double& mean_out, double& std_out) {
    double sum = 0.0;
    for (const auto& r : report.per_split) sum += field(r.metrics);
    mean_out = sum / n;
    double sq = 0.0;
    for (const auto& r : report.per_split) sq += std::pow(field(r.metrics) - mean_out, 2);
    std_out = std::sqrt(sq / n);
  };
  report.mean.mode = report.stddev.mode = mode;
  stats([](const Metrics& m) { return m.zsl_accuracy; }, report.mean.zsl_accuracy,
        report.stddev.zsl_accuracy);
  stats([](const Metrics& m) { return m.zsl_macro; }, report.mean.zsl_macro,
        report.stddev.zsl_macro);
  stats([](const Metrics& m) { return m.seen_accuracy; }, report.mean.seen_accuracy,
        report.stddev.seen_accuracy);
  stats([](const Metrics& m) { return m.unseen_accuracy; }, report.mean.unseen_accuracy,
        report.stddev.unseen_accuracy);
  stats([](const Metrics& m) { return m.harmonic; }, report.mean.harmonic,
        report.stddev.harmonic);
}

ExperimentReport run_experiment(const FeatureTable& table, SplitRatio ratio,
                                std::size_t num_splits, const HyperParams& hp, Mode mode,
                                std::uint64_t master_seed, const ExperimentHooks& hooks) {
  hp.validate();
  ExperimentReport report;
  report.mode = mode;
  report.ratio = ratio;
  report.master_seed = master_seed;
  const auto splits = experiment_splits(table.num_classes(), ratio, num_splits, master_seed);
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const SplitSpec& split = splits[i];
    const Rng run_rng = split_run_rng(master_seed, i);
    const InstancePartition partition = partition_instances(table, split, mode);
    std::function<void(const StepRecord&)> on_step;
    std::function<void(const EpochRecord&)> on_epoch;
    if (hooks.on_step) on_step = [&](const StepRecord& r) { hooks.on_step(i, r); };
    if (hooks.on_epoch) on_epoch = [&](const EpochRecord& r) { hooks.on_epoch(i, r); };
    TrainResult trained = train(table, partition, hp, run_rng, on_step, on_epoch);
    if (hooks.on_model) hooks.on_model(i, split, trained.model);
    Metrics m = evaluate_model(trained.model, table, split, mode, hp, run_rng);
    report.per_split.push_back(SplitResult{split, std::move(m), std::move(trained.history)});
  }

  summarize_report(report);
  return report;
}

const std::array<AblationVariant, 6>& ablation_variants() {
  static const std::array<AblationVariant, 6> variants{{
      {"v0", false, false, false},
      {"v1", true, false, false},
      {"v2", false, true, false},
      {"v3", false, false, true},
      {"v4", true, true, false},
      {"v5", true, true, true},
  }};
  return variants;
}

HyperParams ablation_config(const HyperParams& base, const AblationVariant& variant) {
  HyperParams hp = base;
  if (!variant.vtov) hp.weights.vtov = 0.0;
  if (!variant.vtos) hp.weights.vtos = 0.0;
  if (!variant.stov) hp.weights.stov = 0.0;
  return hp;
}

std::vector<AblationRow> run_ablation(const FeatureTable& table, SplitRatio ratio,
                                      const HyperParams& zsl_base, const HyperParams& gzsl_base,
                                      const AblationOptions& options) {
  std::vector<AblationRow> rows;
  for (const AblationVariant& v : ablation_variants()) {
    AblationRow row;
    row.variant = v;
    if (options.run_zsl) {
      row.zsl_report = run_experiment(table, ratio, options.num_splits, ablation_config(zsl_base, v),
                                      Mode::kZsl, options.master_seed);
      row.zsl = row.zsl_report.mean.zsl_accuracy;
    }
    if (options.run_gzsl) {
      row.gzsl_report = run_experiment(table, ratio, options.num_splits,
                                       ablation_config(gzsl_base, v), Mode::kGzsl,
                                       options.master_seed);
      row.gzsl = row.gzsl_report.mean.harmonic;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "variant,vtov,vtos,stov,zsl,gzsl\n";
  char buf[64];
  for (const AblationRow& r : rows) {
    os << r.variant.name << ',' << int(r.variant.vtov) << ',' << int(r.variant.vtos) << ','
       << int(r.variant.stov);
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f\n", r.zsl, r.gzsl);
    os << buf;
  }
  return os.str();
}

}  // namespace crossalign
