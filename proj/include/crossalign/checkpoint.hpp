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

#pragma once

#include <filesystem>
#include <string>

#include "crossalign/model.hpp"

namespace crossalign {

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON document: {"format_version", "dims": {...}, "tensors": {name: {rows, cols, data}}}.
/// Values are hexadecimal float strings ("%a"), so a write/read round trip is bit-exact.
std::string checkpoint_to_json(const VaePair& pair);
VaePair checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const VaePair& pair);
VaePair load_checkpoint(const std::filesystem::path& path);

/// "%a" formatting of one double, and its inverse.
std::string hex_double(double value);
double parse_hex_double(const std::string& text);

}  // namespace crossalign
