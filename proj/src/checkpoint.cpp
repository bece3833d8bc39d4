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

#include "crossalign/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crossalign/error.hpp"

namespace crossalign {

using nlohmann::json;

std::string hex_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", value);
  return buf;
}

double parse_hex_double(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw FormatError("malformed float literal '" + text + "'");
  return v;
}

std::string checkpoint_to_json(const VaePair& pair) {
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["dims"] = {{"visual_dim", pair.dims.visual_dim},
                 {"semantic_dim", pair.dims.semantic_dim},
                 {"visual_hidden", pair.dims.visual_hidden},
                 {"semantic_hidden", pair.dims.semantic_hidden},
                 {"latent", pair.dims.latent}};
  json tensors = json::object();
  const auto names = VaePair::parameter_names();
  const auto params = pair.parameters();
  for (std::size_t i = 0; i < names.size(); ++i) {
    json data = json::array();
    for (double v : params[i]->values()) data.push_back(hex_double(v));
    tensors[names[i]] = {{"rows", params[i]->rows()}, {"cols", params[i]->cols()},
                         {"data", std::move(data)}};
  }
  doc["tensors"] = std::move(tensors);
  return doc.dump();
}

VaePair checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError("unsupported checkpoint format_version " + std::to_string(version));
    }
    VaePair pair;
    const json& d = doc.at("dims");
    pair.dims.visual_dim = d.at("visual_dim").get<std::size_t>();
    pair.dims.semantic_dim = d.at("semantic_dim").get<std::size_t>();
    pair.dims.visual_hidden = d.at("visual_hidden").get<std::size_t>();
    pair.dims.semantic_hidden = d.at("semantic_hidden").get<std::size_t>();
    pair.dims.latent = d.at("latent").get<std::size_t>();
    pair.dims.validate();

    // Start from correctly-shaped zeros so shapes can be checked against dims.
    Rng unused(0);
    pair = init_params(unused, pair.dims);
    const auto names = VaePair::parameter_names();
    auto params = pair.parameters();
    const json& tensors = doc.at("tensors");
    for (std::size_t i = 0; i < names.size(); ++i) {
      const json& t = tensors.at(names[i]);
      const auto rows = t.at("rows").get<std::size_t>();
      const auto cols = t.at("cols").get<std::size_t>();
      if (rows != params[i]->rows() || cols != params[i]->cols()) {
        throw DimensionError("checkpoint tensor " + names[i] + " has shape " +
                             std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                             params[i]->shape_string());
      }
      const json& data = t.at("data");
      if (data.size() != rows * cols) {
        throw FormatError("checkpoint tensor " + names[i] + " has wrong element count");
      }
      for (std::size_t k = 0; k < data.size(); ++k) {
        params[i]->values()[k] = parse_hex_double(data[k].get<std::string>());
      }
    }
    return pair;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const VaePair& pair) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(pair) << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

VaePair load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace crossalign
