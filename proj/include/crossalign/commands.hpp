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

namespace crossalign {

/// Entry point of the `crossalign` tool. Returns the process exit code:
/// 0 success, 2 config, 3 data, 4 numeric divergence, 5 I/O. Failures print one
/// line `error[<category>] <message>` to standard error.
int run_cli(int argc, const char* const* argv);

}  // namespace crossalign
