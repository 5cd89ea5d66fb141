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

#include <filesystem>
#include <string>

#include "revsim/scenario/types.hpp"

namespace revsim::scenario
{

/// Reads and validates a scenario file. Headings are normalized on load and
/// a `vx`/`vy` velocity pair, when given instead of `speed`, is projected onto
/// the heading.
/// Throws ParseError (malformed JSON, missing/unknown/mistyped key) or
/// SchemaError (invariant violated).
Scenario load_scenario(const std::filesystem::path & path);

/// Parses from an in-memory JSON document; same contract as load_scenario.
Scenario parse_scenario(const std::string & text);

/// Canonical JSON text (stable key order, round-trip exact doubles).
std::string serialize_scenario(const Scenario & s);

/// Throws IoError if the file cannot be written. The write goes through a
/// temporary file followed by a rename.
void save_scenario(const Scenario & s, const std::filesystem::path & path);

/// Writes text to path atomically (temp + rename). Throws IoError.
void write_file_atomic(const std::filesystem::path & path, const std::string & text);

std::string read_file(const std::filesystem::path & path);

}  // namespace revsim::scenario
