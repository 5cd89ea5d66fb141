// Copyright 2026 The revsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "revsim/bmt/model.hpp"

namespace revsim::cli
{

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kDivergence = 4,
  kCheckpoint = 5,
  kPairing = 6,
};

/// Everything a command can be configured with. A --config JSON file sets
/// any of these fields; explicit flags override it.
struct RunConfig
{
  bmt::BmtConfig model;
  std::string data;
  std::string out;
  std::string checkpoint;
  int num_modes = 6;
  std::string mode = "replay";
  int max_resamples = 20;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Stable-order JSON echo (identical for identical configs).
nlohmann::ordered_json to_json(const RunConfig & rc);
/// Throws std::invalid_argument on unknown keys or bad types.
RunConfig run_config_from_json(const nlohmann::json & j, RunConfig base = {});

/// Entry point of the `revsim` tool. Returns the process exit code.
int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err);

}  // namespace revsim::cli
