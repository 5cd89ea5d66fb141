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

#include <stdexcept>
#include <string>

namespace revsim
{

/// Malformed input file (bad JSON, missing or mistyped field).
class ParseError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Input parsed but violates a data-model invariant. `field()` names the
/// offending field, `index()` the element it belongs to (-1 if scenario level).
class SchemaError : public std::runtime_error
{
public:
  SchemaError(std::string field, int index, const std::string & detail)
  : std::runtime_error("schema error in '" + field + "'" +
                       (index >= 0 ? " at index " + std::to_string(index) : std::string()) +
                       ": " + detail),
    field_(std::move(field)),
    index_(index)
  {
  }

  const std::string & field() const { return field_; }
  int index() const { return index_; }

private:
  std::string field_;
  int index_;
};

class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class InvalidStateError : public std::runtime_error
{
public:
  explicit InvalidStateError(int step)
  : std::runtime_error("invalid state at step " + std::to_string(step)), step_(step)
  {
  }
  int step() const { return step_; }

private:
  int step_;
};

/// Base for model-side failures (bad shapes, capacity, checkpoints).
class ModelError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public ModelError
{
public:
  using ModelError::ModelError;
};

class CapacityError : public ModelError
{
public:
  using ModelError::ModelError;
};

class CheckpointError : public ModelError
{
public:
  using ModelError::ModelError;
};

/// Loss requested over a batch whose mask selects nothing.
class MaskError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Training loss became NaN or infinite.
class DivergenceError : public std::runtime_error
{
public:
  DivergenceError(int step, const std::string & detail)
  : std::runtime_error("training diverged at step " + std::to_string(step) + ": " + detail),
    step_(step)
  {
  }
  int step() const { return step_; }

private:
  int step_;
};

class GradCheckFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Prediction and ground-truth corpora share no (or not all) scenario ids.
class MissingPairError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace revsim
