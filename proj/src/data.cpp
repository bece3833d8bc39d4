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

#include "crossalign/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "crossalign/error.hpp"

namespace crossalign {

std::vector<std::vector<std::size_t>> FeatureTable::rows_by_class() const {
  std::vector<std::vector<std::size_t>> out(num_classes());
  for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(i);
  return out;
}

void FeatureTable::validate() const {
  if (labels.size() != visual.rows()) {
    throw IntegrityError("label count " + std::to_string(labels.size()) +
                         " differs from visual row count " + std::to_string(visual.rows()));
  }
  if (original_ids.size() != descriptors.rows()) {
    throw IntegrityError("original id mapping does not cover every descriptor row");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes()) {
      throw IntegrityError("visual row " + std::to_string(i) + " has label " +
                           std::to_string(labels[i]) + " outside 0.." +
                           std::to_string(num_classes()) + " with no descriptor");
    }
  }
}

// ---------------------------------------------------------------------------
// File formats

namespace {

constexpr char kBinaryMagic[8] = {'X', 'A', 'L', 'N', 'F', 'T', '0', '1'};

/// One parsed file: class id per row plus the feature matrix.
struct RawRows {
  std::vector<std::int64_t> ids;
  Tensor2D values;
};

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

RawRows read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  const auto header = split_commas(line);
  if (header.empty() || trim(header[0]) != "class_id") {
    throw FormatError(path.string() + ":1: header must start with 'class_id'");
  }
  const std::size_t dim = header.size() - 1;
  if (dim == 0) throw FormatError(path.string() + ":1: header declares no feature columns");
  for (std::size_t d = 0; d < dim; ++d) {
    if (trim(header[d + 1]) != "f" + std::to_string(d)) {
      throw FormatError(path.string() + ":1: expected column 'f" + std::to_string(d) + "'");
    }
  }
  RawRows raw;
  std::vector<double> data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != dim + 1) {
      throw FormatError(where + ": expected " + std::to_string(dim + 1) + " fields, found " +
                        std::to_string(fields.size()));
    }
    std::int64_t id = 0;
    auto f0 = trim(fields[0]);
    auto [p, ec] = std::from_chars(f0.data(), f0.data() + f0.size(), id);
    if (ec != std::errc() || p != f0.data() + f0.size()) {
      throw FormatError(where + ": malformed class_id '" + std::string(f0) + "'");
    }
    raw.ids.push_back(id);
    for (std::size_t d = 0; d < dim; ++d) {
      auto f = trim(fields[d + 1]);
      double v = 0.0;
      auto [q, ec2] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec2 != std::errc() || q != f.data() + f.size() || !std::isfinite(v)) {
        throw FormatError(where + ": malformed value in column f" + std::to_string(d));
      }
      data.push_back(v);
    }
  }
  raw.values = Tensor2D(raw.ids.size(), dim, std::move(data));
  return raw;
}

RawRows read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  std::uint64_t rows = 0, dim = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  if (!in || std::memcmp(magic, kBinaryMagic, 8) != 0) {
    throw FormatError(path.string() + ": bad binary feature header");
  }
  RawRows raw;
  raw.ids.resize(rows);
  std::vector<double> data(rows * dim);
  for (std::uint64_t r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(&raw.ids[r]), sizeof(std::int64_t));
    in.read(reinterpret_cast<char*>(data.data() + r * dim),
            static_cast<std::streamsize>(dim * sizeof(double)));
    if (!in) throw FormatError(path.string() + ": truncated at row " + std::to_string(r));
  }
  raw.values = Tensor2D(rows, dim, std::move(data));
  return raw;
}

bool is_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8] = {};
  in.read(magic, 8);
  return in.gcount() == 8 && std::memcmp(magic, kBinaryMagic, 8) == 0;
}

RawRows read_any(const std::filesystem::path& path) {
  return is_binary(path) ? read_binary(path) : read_csv(path);
}

void write_csv(const std::filesystem::path& path, const Tensor2D& values,
               const std::vector<std::int64_t>& ids) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (f == nullptr) throw IoError("cannot write " + path.string());
  std::fputs("class_id", f);
  for (std::size_t d = 0; d < values.cols(); ++d) std::fprintf(f, ",f%zu", d);
  std::fputc('\n', f);
  for (std::size_t r = 0; r < values.rows(); ++r) {
    std::fprintf(f, "%lld", static_cast<long long>(ids[r]));
    for (double v : values.row(r)) std::fprintf(f, ",%.17g", v);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw IoError("failed writing " + path.string());
}

void write_binary(const std::filesystem::path& path, const Tensor2D& values,
                  const std::vector<std::int64_t>& ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint64_t rows = values.rows(), dim = values.cols();
  out.write(kBinaryMagic, 8);
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  for (std::size_t r = 0; r < values.rows(); ++r) {
    out.write(reinterpret_cast<const char*>(&ids[r]), sizeof(std::int64_t));
    out.write(reinterpret_cast<const char*>(values.row(r).data()),
              static_cast<std::streamsize>(dim * sizeof(double)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::int64_t> visual_ids(const FeatureTable& t) {
  std::vector<std::int64_t> ids(t.labels.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ids[i] = t.original_ids[static_cast<std::size_t>(t.labels[i])];
  }
  return ids;
}

}  // namespace

FeatureTable load_features(const std::filesystem::path& visual_path,
                           const std::filesystem::path& descriptor_path) {
  RawRows visual = read_any(visual_path);
  RawRows desc = read_any(descriptor_path);

  std::map<std::int64_t, std::size_t> desc_row;
  for (std::size_t j = 0; j < desc.ids.size(); ++j) {
    if (!desc_row.emplace(desc.ids[j], j).second) {
      throw IntegrityError(descriptor_path.string() + ": duplicate descriptor for class " +
                           std::to_string(desc.ids[j]));
    }
  }
  for (std::int64_t id : visual.ids) {
    if (!desc_row.contains(id)) {
      throw IntegrityError("class " + std::to_string(id) + " in " + visual_path.string() +
                           " has no descriptor in " + descriptor_path.string());
    }
  }

  FeatureTable table;
  std::map<std::int64_t, int> dense;
  for (const auto& [id, row] : desc_row) {
    dense[id] = static_cast<int>(table.original_ids.size());
    table.original_ids.push_back(id);
  }
  table.descriptors = Tensor2D(desc_row.size(), desc.values.cols());
  for (const auto& [id, row] : desc_row) {
    auto src = desc.values.row(row);
    std::copy(src.begin(), src.end(),
              table.descriptors.row(static_cast<std::size_t>(dense[id])).begin());
  }
  table.visual = std::move(visual.values);
  table.labels.reserve(visual.ids.size());
  for (std::int64_t id : visual.ids) table.labels.push_back(dense[id]);
  table.validate();
  return table;
}

void write_features_csv(const FeatureTable& table, const std::filesystem::path& visual_path,
                        const std::filesystem::path& descriptor_path) {
  write_csv(visual_path, table.visual, visual_ids(table));
  write_csv(descriptor_path, table.descriptors, table.original_ids);
}

void write_features_binary(const FeatureTable& table, const std::filesystem::path& visual_path,
                           const std::filesystem::path& descriptor_path) {
  write_binary(visual_path, table.visual, visual_ids(table));
  write_binary(descriptor_path, table.descriptors, table.original_ids);
}

// ---------------------------------------------------------------------------
// Synthetic data

void SynthConfig::validate() const {
  if (num_classes < 1 || instances_per_class < 1 || visual_dim < 1 || semantic_dim < 1 ||
      concept_dim < 1) {
    throw ConfigError("synthetic config: all counts must be >= 1");
  }
  if (!(intra_class_std >= 0.0) || !std::isfinite(intra_class_std)) {
    throw ConfigError("synthetic config: intra_class_std must be >= 0");
  }
  if (!(inter_class_sim >= 0.0 && inter_class_sim < 1.0)) {
    throw ConfigError("synthetic config: inter_class_sim must lie in [0, 1)");
  }
  if (!(label_noise_rate >= 0.0 && label_noise_rate < 1.0)) {
    throw ConfigError("synthetic config: label_noise_rate must lie in [0, 1)");
  }
  if (label_noise_rate > 0.0 && num_classes < 2) {
    throw ConfigError("synthetic config: label noise needs at least two classes");
  }
  if (!(descriptor_noise_std >= 0.0)) {
    throw ConfigError("synthetic config: descriptor_noise_std must be >= 0");
  }
}

SyntheticDataset synth_dataset_with_truth(const SynthConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng concept_rng = root.split(1);
  Rng map_rng = root.split(2);
  Rng instance_rng = root.split(3);
  Rng noise_rng = root.split(4);

  const std::size_t C = cfg.num_classes, L = cfg.concept_dim;
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(L));

  Tensor2D concepts(C, L);
  for (double& v : concepts.values()) v = concept_rng.normal();
  Tensor2D semantic_map(L, cfg.semantic_dim);
  for (double& v : semantic_map.values()) v = map_rng.normal() * map_scale;
  Tensor2D visual_map(L, cfg.visual_dim);
  for (double& v : visual_map.values()) v = map_rng.normal() * map_scale;
  Tensor2D global(1, cfg.visual_dim);
  for (double& v : global.values()) v = map_rng.normal();

  SyntheticDataset out;
  FeatureTable& table = out.table;
  table.descriptors = kernels::matmul(concepts, semantic_map);
  for (double& v : table.descriptors.values()) v += cfg.descriptor_noise_std * concept_rng.normal();

  const double own = std::sqrt(1.0 - cfg.inter_class_sim);
  const double shared = std::sqrt(cfg.inter_class_sim);
  out.prototypes = kernels::matmul(concepts, visual_map);
  for (std::size_t c = 0; c < C; ++c) {
    auto row = out.prototypes.row(c);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] = own * row[d] + shared * global(0, d);
  }

  const std::size_t total = C * cfg.instances_per_class;
  table.visual = Tensor2D(total, cfg.visual_dim);
  table.labels.resize(total);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < cfg.instances_per_class; ++k) {
      const std::size_t r = c * cfg.instances_per_class + k;
      table.labels[r] = static_cast<int>(c);
      auto row = table.visual.row(r);
      auto proto = out.prototypes.row(c);
      for (std::size_t d = 0; d < row.size(); ++d) {
        row[d] = proto[d] + cfg.intra_class_std * instance_rng.normal();
      }
    }
  }
  out.true_labels = table.labels;

  const auto relabel = static_cast<std::size_t>(std::llround(cfg.label_noise_rate * static_cast<double>(total)));
  if (relabel > 0) {
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    noise_rng.shuffle(order);
    for (std::size_t i = 0; i < relabel; ++i) {
      const std::size_t r = order[i];
      auto other = static_cast<int>(noise_rng.uniform_index(C - 1));
      if (other >= table.labels[r]) ++other;
      table.labels[r] = other;
    }
  }

  table.original_ids.resize(C);
  std::iota(table.original_ids.begin(), table.original_ids.end(), 0);
  return out;
}

FeatureTable synth_dataset(const SynthConfig& cfg) { return synth_dataset_with_truth(cfg).table; }

// ---------------------------------------------------------------------------
// Splits

SplitRatio SplitRatio::parse(const std::string& text) {
  const auto slash = text.find('/');
  SplitRatio r;
  auto parse_part = [&text](std::string_view part, std::size_t& out) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (ec != std::errc() || p != part.data() + part.size() || part.empty()) {
      throw ConfigError("ratio must look like SEEN/UNSEEN, got '" + text + "'");
    }
  };
  if (slash == std::string::npos) throw ConfigError("ratio must look like SEEN/UNSEEN, got '" + text + "'");
  std::string_view all(text);
  parse_part(all.substr(0, slash), r.seen);
  parse_part(all.substr(slash + 1), r.unseen);
  return r;
}

std::string SplitRatio::str() const { return std::to_string(seen) + "/" + std::to_string(unseen); }

const char* mode_name(Mode mode) { return mode == Mode::kZsl ? "zsl" : "gzsl"; }

Mode parse_mode(const std::string& text) {
  if (text == "zsl") return Mode::kZsl;
  if (text == "gzsl") return Mode::kGzsl;
  throw ConfigError("mode must be 'zsl' or 'gzsl', got '" + text + "'");
}

std::string SplitSpec::to_json() const {
  nlohmann::json j;
  j["ratio"] = ratio.str();
  j["split_index"] = split_index;
  j["seen"] = seen;
  j["unseen"] = unseen;
  j["gzsl_train_fraction"] = gzsl_train_fraction;
  j["partition_seed"] = partition_seed;
  return j.dump();
}

SplitSpec SplitSpec::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SplitSpec s;
    s.ratio = SplitRatio::parse(j.at("ratio").get<std::string>());
    s.split_index = j.at("split_index").get<std::size_t>();
    s.seen = j.at("seen").get<std::vector<int>>();
    s.unseen = j.at("unseen").get<std::vector<int>>();
    s.gzsl_train_fraction = j.at("gzsl_train_fraction").get<double>();
    s.partition_seed = j.value("partition_seed", std::uint64_t{0});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed split file: ") + e.what());
  }
}

namespace {
/// C(n, k) saturating at `cap`.
std::size_t bounded_binomial(std::size_t n, std::size_t k, std::size_t cap) {
  k = std::min(k, n - k);
  double acc = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    acc = acc * static_cast<double>(n - k + i) / static_cast<double>(i);
    if (acc >= static_cast<double>(cap)) return cap;
  }
  return static_cast<std::size_t>(std::llround(acc));
}
}  // namespace

std::vector<SplitSpec> make_splits(std::size_t num_classes, SplitRatio ratio,
                                   std::size_t num_splits, std::uint64_t seed,
                                   double gzsl_train_fraction) {
  if (ratio.seen + ratio.unseen != num_classes) {
    throw ConfigError("ratio " + ratio.str() + " does not add up to " +
                      std::to_string(num_classes) + " classes");
  }
  if (ratio.seen < 1 || ratio.unseen < 1) throw ConfigError("ratio needs seen and unseen classes");
  if (num_splits < 1) throw ConfigError("num_splits must be >= 1");
  if (!(gzsl_train_fraction > 0.0 && gzsl_train_fraction < 1.0)) {
    throw ConfigError("gzsl_train_fraction must lie in (0, 1)");
  }
  if (bounded_binomial(num_classes, ratio.unseen, num_splits) < num_splits) {
    throw ConfigError("only " + std::to_string(bounded_binomial(num_classes, ratio.unseen, num_splits)) +
                      " distinct partitions exist for ratio " + ratio.str());
  }

  Rng rng(seed);
  std::set<std::vector<int>> used;
  std::vector<SplitSpec> out;
  std::vector<int> classes(num_classes);
  while (out.size() < num_splits) {
    std::iota(classes.begin(), classes.end(), 0);
    rng.shuffle(classes);
    std::vector<int> unseen(classes.begin() + static_cast<std::ptrdiff_t>(ratio.seen), classes.end());
    std::sort(unseen.begin(), unseen.end());
    if (!used.insert(unseen).second) continue;
    SplitSpec s;
    s.ratio = ratio;
    s.split_index = out.size();
    s.seen.assign(classes.begin(), classes.begin() + static_cast<std::ptrdiff_t>(ratio.seen));
    std::sort(s.seen.begin(), s.seen.end());
    s.unseen = std::move(unseen);
    s.gzsl_train_fraction = gzsl_train_fraction;
    s.partition_seed = rng.next_u64();
    out.push_back(std::move(s));
  }
  return out;
}

InstancePartition partition_instances(const FeatureTable& table, const SplitSpec& split, Mode mode) {
  const auto by_class = table.rows_by_class();
  InstancePartition p;
  p.train_by_class.resize(table.num_classes());
  const Rng root(split.partition_seed);
  for (int c : split.seen) {
    if (c < 0 || static_cast<std::size_t>(c) >= table.num_classes()) {
      throw IntegrityError("split names class " + std::to_string(c) + " absent from the table");
    }
    std::vector<std::size_t> rows = by_class[static_cast<std::size_t>(c)];
    std::size_t train_count = rows.size();
    if (mode == Mode::kGzsl) {
      Rng rng = root.split(static_cast<std::uint64_t>(c));
      rng.shuffle(rows);
      train_count = static_cast<std::size_t>(
          std::llround(split.gzsl_train_fraction * static_cast<double>(rows.size())));
      std::sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(train_count));
      std::sort(rows.begin() + static_cast<std::ptrdiff_t>(train_count), rows.end());
    }
    auto& train = p.train_by_class[static_cast<std::size_t>(c)];
    train.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(train_count));
    p.seen_train.insert(p.seen_train.end(), train.begin(), train.end());
    p.seen_test.insert(p.seen_test.end(), rows.begin() + static_cast<std::ptrdiff_t>(train_count),
                       rows.end());
  }
  for (int c : split.unseen) {
    if (c < 0 || static_cast<std::size_t>(c) >= table.num_classes()) {
      throw IntegrityError("split names class " + std::to_string(c) + " absent from the table");
    }
    const auto& rows = by_class[static_cast<std::size_t>(c)];
    p.unseen_test.insert(p.unseen_test.end(), rows.begin(), rows.end());
  }
  std::sort(p.seen_train.begin(), p.seen_train.end());
  std::sort(p.seen_test.begin(), p.seen_test.end());
  std::sort(p.unseen_test.begin(), p.unseen_test.end());
  return p;
}

Batch sample_batch(const FeatureTable& table, const InstancePartition& partition, std::size_t c,
                   std::size_t k, Rng& rng, bool require_pairs) {
  if (c < 1 || k < 1) throw SamplingError("batch needs c >= 1 classes and k >= 1 instances");
  if (require_pairs && k < 2) {
    throw PreconditionError("k = 1 leaves every anchor without a same-class positive; "
                            "the visual-to-visual loss needs k >= 2");
  }
  std::vector<int> eligible;
  for (std::size_t cls = 0; cls < partition.train_by_class.size(); ++cls) {
    if (partition.train_by_class[cls].size() >= k) eligible.push_back(static_cast<int>(cls));
  }
  if (eligible.size() < c) {
    throw SamplingError("need " + std::to_string(c) + " seen classes with >= " + std::to_string(k) +
                        " training instances, only " + std::to_string(eligible.size()) +
                        " available");
  }
  // Partial Fisher-Yates: the first c entries are a uniform c-subset.
  for (std::size_t i = 0; i < c; ++i) {
    std::swap(eligible[i], eligible[i + rng.uniform_index(eligible.size() - i)]);
  }
  Batch b;
  b.classes.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(c));
  b.visual = Tensor2D(c * k, table.visual_dim());
  b.descriptors = Tensor2D(c, table.semantic_dim());
  for (std::size_t j = 0; j < c; ++j) {
    const int cls = b.classes[j];
    auto desc = table.descriptors.row(static_cast<std::size_t>(cls));
    std::copy(desc.begin(), desc.end(), b.descriptors.row(j).begin());
    std::vector<std::size_t> pool = partition.train_by_class[static_cast<std::size_t>(cls)];
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
      auto src = table.visual.row(pool[i]);
      std::copy(src.begin(), src.end(), b.visual.row(j * k + i).begin());
      b.labels.push_back(cls);
    }
  }
  return b;
}

}  // namespace crossalign
