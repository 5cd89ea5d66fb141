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

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace revsim::bmt
{

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Trainable (or frozen) tensor owned by the model.
struct Parameter
{
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;
  bool decay = true;  // AdamW decoupled weight decay applies
};

class Tape;

/// Handle to a node recorded on a Tape.
struct Var
{
  Tape * tape = nullptr;
  int id = -1;

  const Matrix & value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode recorder. Nodes are appended in evaluation order and
/// back-propagated in reverse. With recording off (inference) no backward
/// closures are kept and parameters are not marked as requiring gradients.
class Tape
{
public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape &) = delete;
  Tape & operator=(const Tape &) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix value);
  Var parameter(Parameter & p);

  /// Runs backprop from a 1x1 node, seeding d(root) = seed. Parameter grads
  /// accumulate into Parameter::grad.
  void backward(Var root, double seed = 1.0);

  // internals used by ops
  struct Node
  {
    Matrix own;
    const Matrix * external = nullptr;
    Matrix grad;
    bool requires_grad = false;
    Parameter * param = nullptr;
    std::function<void()> backward;
  };
  const Matrix & value(int id) const
  {
    const Node & n = nodes_[id];
    return n.external ? *n.external : n.own;
  }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, allocated (zeroed) on first use.
  Matrix & grad(int id);
  Var push(Matrix value, bool requires_grad);
  void set_backward(Var v, std::function<void()> fn);

private:
  bool record_;
  std::vector<Node> nodes_;
};

/// Sparse attention pattern in CSR form: query q attends to keys
/// key[offsets[q] .. offsets[q+1]), edge e carries relation row e.
struct EdgeList
{
  std::vector<int> offsets{0};
  std::vector<int> key;

  int num_queries() const { return static_cast<int>(offsets.size()) - 1; }
  int num_edges() const { return static_cast<int>(key.size()); }
};

// Ops. Shapes in comments are rows x cols.
Var linear(Var x, Var weight, Var bias);  // [n,i] x [i,o] + [1,o]
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var add_n(const std::vector<Var> & terms);
Var scale(Var a, double s);
Var gelu(Var a);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
/// Row r = table[index[r]], or zeros when index[r] < 0.
Var gather_rows(Var table, const std::vector<int> & index, int dim);
/// Column-wise max over row groups [offsets[g], offsets[g+1]).
Var segment_max(Var x, const std::vector<int> & offsets);
Var concat_rows(Var a, Var b);
/// out(:, j) = a(:, perm[j]).
Var permute_cols(Var a, const std::vector<int> & perm);
/// Multi-head attention over an explicit edge list. `relation` (E x d, may be
/// an invalid Var with id < 0) is added to both key and value of each edge.
/// Queries without edges output zeros.
Var relation_attention(Var q, Var k, Var v, Var relation, const EdgeList & edges, int heads);
/// Sum over rows with target >= 0 of cross-entropy(logits row, target),
/// divided by `normalizer`. Returns 1x1.
Var cross_entropy_sum(Var logits, const std::vector<int> & targets, double normalizer);

}  // namespace revsim::bmt
