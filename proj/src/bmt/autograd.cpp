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

#include "revsim/bmt/autograd.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace revsim::bmt
{

const Matrix & Var::value() const { return tape->value(id); }

Var Tape::push(Matrix value, bool requires_grad)
{
  Node n;
  n.own = std::move(value);
  n.requires_grad = requires_grad && record_;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix value) { return push(std::move(value), false); }

Var Tape::parameter(Parameter & p)
{
  Node n;
  n.external = &p.value;
  n.requires_grad = record_ && p.trainable;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Matrix & Tape::grad(int id)
{
  Node & n = nodes_[id];
  if (n.grad.size() == 0) {
    const Matrix & v = value(id);
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::set_backward(Var v, std::function<void()> fn)
{
  if (record_ && nodes_[v.id].requires_grad) {
    nodes_[v.id].backward = std::move(fn);
  }
}

void Tape::backward(Var root, double seed)
{
  if (!record_) {
    throw std::logic_error("backward on a non-recording tape");
  }
  if (value(root.id).size() != 1) {
    throw std::invalid_argument("backward root must be a scalar");
  }
  grad(root.id)(0, 0) += seed;
  for (int i = root.id; i >= 0; --i) {
    Node & n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      n.backward();
    } else if (n.param) {
      if (n.param->grad.size() == 0) {
        n.param->grad = Matrix::Zero(n.param->value.rows(), n.param->value.cols());
      }
      n.param->grad += n.grad;
    }
  }
}

namespace
{

bool any_grad(std::initializer_list<Var> vars)
{
  for (const Var & v : vars) {
    if (v.id >= 0 && v.tape->requires_grad(v.id)) return true;
  }
  return false;
}

bool needs(const Var & v) { return v.id >= 0 && v.tape->requires_grad(v.id); }

}  // namespace

Var linear(Var x, Var weight, Var bias)
{
  Tape * tape = x.tape;
  const Matrix & xv = x.value();
  const Matrix & wv = weight.value();
  if (xv.cols() != wv.rows()) {
    throw std::invalid_argument("linear: shape mismatch");
  }
  Matrix y = xv * wv;
  if (bias.id >= 0) y.rowwise() += bias.value().row(0);
  Var out = tape->push(std::move(y), any_grad({x, weight, bias}));
  tape->set_backward(out, [tape, x, weight, bias, out]() {
    const Matrix & g = tape->grad(out.id);
    if (needs(x)) tape->grad(x.id).noalias() += g * tape->value(weight.id).transpose();
    if (needs(weight)) tape->grad(weight.id).noalias() += tape->value(x.id).transpose() * g;
    if (needs(bias)) tape->grad(bias.id).row(0) += g.colwise().sum();
  });
  return out;
}

Var matmul(Var a, Var b)
{
  Tape * tape = a.tape;
  Matrix y = a.value() * b.value();
  Var out = tape->push(std::move(y), any_grad({a, b}));
  tape->set_backward(out, [tape, a, b, out]() {
    const Matrix & g = tape->grad(out.id);
    if (needs(a)) tape->grad(a.id).noalias() += g * tape->value(b.id).transpose();
    if (needs(b)) tape->grad(b.id).noalias() += tape->value(a.id).transpose() * g;
  });
  return out;
}

Var add(Var a, Var b)
{
  Tape * tape = a.tape;
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("add: shape mismatch");
  }
  Matrix y = a.value() + b.value();
  Var out = tape->push(std::move(y), any_grad({a, b}));
  tape->set_backward(out, [tape, a, b, out]() {
    const Matrix & g = tape->grad(out.id);
    if (needs(a)) tape->grad(a.id) += g;
    if (needs(b)) tape->grad(b.id) += g;
  });
  return out;
}

Var add_n(const std::vector<Var> & terms)
{
  if (terms.empty()) throw std::invalid_argument("add_n: no terms");
  Tape * tape = terms.front().tape;
  Matrix y = terms.front().value();
  bool rg = needs(terms.front());
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (terms[i].rows() != y.rows() || terms[i].cols() != y.cols()) {
      throw std::invalid_argument("add_n: shape mismatch");
    }
    y += terms[i].value();
    rg = rg || needs(terms[i]);
  }
  Var out = tape->push(std::move(y), rg);
  tape->set_backward(out, [tape, terms, out]() {
    const Matrix & g = tape->grad(out.id);
    for (const Var & t : terms) {
      if (needs(t)) tape->grad(t.id) += g;
    }
  });
  return out;
}

Var scale(Var a, double s)
{
  Tape * tape = a.tape;
  Matrix y = a.value() * s;
  Var out = tape->push(std::move(y), any_grad({a}));
  tape->set_backward(out, [tape, a, out, s]() { tape->grad(a.id) += s * tape->grad(out.id); });
  return out;
}

Var gelu(Var a)
{
  Tape * tape = a.tape;
  const Matrix & x = a.value();
  Matrix y(x.rows(), x.cols());
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    y.data()[i] = 0.5 * v * (1.0 + std::erf(v * inv_sqrt2));
  }
  Var out = tape->push(std::move(y), any_grad({a}));
  tape->set_backward(out, [tape, a, out, inv_sqrt2]() {
    const Matrix & g = tape->grad(out.id);
    const Matrix & xv = tape->value(a.id);
    Matrix & ga = tape->grad(a.id);
    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);
    for (Eigen::Index i = 0; i < xv.size(); ++i) {
      const double v = xv.data()[i];
      const double d = 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt2pi * std::exp(-0.5 * v * v);
      ga.data()[i] += g.data()[i] * d;
    }
  });
  return out;
}

Var layer_norm(Var x, Var gain, Var bias, double eps)
{
  Tape * tape = x.tape;
  const Matrix & xv = x.value();
  const Eigen::Index n = xv.rows();
  const Eigen::Index d = xv.cols();
  Matrix xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix y = xhat;
  y.array().rowwise() *= gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);
  Var out = tape->push(std::move(y), any_grad({x, gain, bias}));
  tape->set_backward(out, [tape, x, gain, bias, out, xhat, inv_std]() {
    const Matrix & g = tape->grad(out.id);
    if (needs(gain)) tape->grad(gain.id).row(0) += (g.array() * xhat.array()).colwise().sum().matrix();
    if (needs(bias)) tape->grad(bias.id).row(0) += g.colwise().sum();
    if (needs(x)) {
      Matrix & gx = tape->grad(x.id);
      const auto & gam = tape->value(gain.id);
      const double inv_d = 1.0 / static_cast<double>(xhat.cols());
      for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
        const Eigen::RowVectorXd dxhat = g.row(r).array() * gam.row(0).array();
        const double m1 = dxhat.sum() * inv_d;
        const double m2 = dxhat.dot(xhat.row(r)) * inv_d;
        gx.row(r).array() += inv_std(r) * (dxhat.array() - m1 - xhat.row(r).array() * m2);
      }
    }
  });
  return out;
}

Var gather_rows(Var table, const std::vector<int> & index, int dim)
{
  Tape * tape = table.tape;
  const Matrix & tv = table.value();
  if (tv.cols() != dim) throw std::invalid_argument("gather_rows: dim mismatch");
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(index.size()), dim);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= 0) {
      if (index[r] >= tv.rows()) throw std::out_of_range("gather_rows: index out of range");
      y.row(static_cast<Eigen::Index>(r)) = tv.row(index[r]);
    }
  }
  Var out = tape->push(std::move(y), any_grad({table}));
  tape->set_backward(out, [tape, table, out, index]() {
    const Matrix & g = tape->grad(out.id);
    Matrix & gt = tape->grad(table.id);
    for (std::size_t r = 0; r < index.size(); ++r) {
      if (index[r] >= 0) gt.row(index[r]) += g.row(static_cast<Eigen::Index>(r));
    }
  });
  return out;
}

Var segment_max(Var x, const std::vector<int> & offsets)
{
  Tape * tape = x.tape;
  const Matrix & xv = x.value();
  const Eigen::Index groups = static_cast<Eigen::Index>(offsets.size()) - 1;
  const Eigen::Index d = xv.cols();
  Matrix y(groups, d);
  std::vector<int> arg(static_cast<std::size_t>(groups * d), -1);
  for (Eigen::Index gi = 0; gi < groups; ++gi) {
    if (offsets[gi + 1] <= offsets[gi]) throw std::invalid_argument("segment_max: empty group");
    for (Eigen::Index c = 0; c < d; ++c) {
      int best = offsets[gi];
      for (int r = offsets[gi] + 1; r < offsets[gi + 1]; ++r) {
        if (xv(r, c) > xv(best, c)) best = r;
      }
      y(gi, c) = xv(best, c);
      arg[static_cast<std::size_t>(gi * d + c)] = best;
    }
  }
  Var out = tape->push(std::move(y), any_grad({x}));
  tape->set_backward(out, [tape, x, out, arg, d]() {
    const Matrix & g = tape->grad(out.id);
    Matrix & gx = tape->grad(x.id);
    for (Eigen::Index gi = 0; gi < g.rows(); ++gi) {
      for (Eigen::Index c = 0; c < d; ++c) {
        gx(arg[static_cast<std::size_t>(gi * d + c)], c) += g(gi, c);
      }
    }
  });
  return out;
}

Var concat_rows(Var a, Var b)
{
  Tape * tape = a.tape;
  if (a.cols() != b.cols()) throw std::invalid_argument("concat_rows: column mismatch");
  const Eigen::Index na = a.rows();
  Matrix y(na + b.rows(), a.cols());
  y.topRows(na) = a.value();
  y.bottomRows(b.rows()) = b.value();
  Var out = tape->push(std::move(y), any_grad({a, b}));
  tape->set_backward(out, [tape, a, b, out, na]() {
    const Matrix & g = tape->grad(out.id);
    if (needs(a)) tape->grad(a.id) += g.topRows(na);
    if (needs(b)) tape->grad(b.id) += g.bottomRows(g.rows() - na);
  });
  return out;
}

Var permute_cols(Var a, const std::vector<int> & perm)
{
  Tape * tape = a.tape;
  const Matrix & av = a.value();
  if (static_cast<Eigen::Index>(perm.size()) != av.cols()) {
    throw std::invalid_argument("permute_cols: size mismatch");
  }
  Matrix y(av.rows(), av.cols());
  for (std::size_t j = 0; j < perm.size(); ++j) y.col(static_cast<Eigen::Index>(j)) = av.col(perm[j]);
  Var out = tape->push(std::move(y), any_grad({a}));
  tape->set_backward(out, [tape, a, out, perm]() {
    const Matrix & g = tape->grad(out.id);
    Matrix & ga = tape->grad(a.id);
    for (std::size_t j = 0; j < perm.size(); ++j) ga.col(perm[j]) += g.col(static_cast<Eigen::Index>(j));
  });
  return out;
}

Var relation_attention(Var q, Var k, Var v, Var relation, const EdgeList & edges, int heads)
{
  Tape * tape = q.tape;
  const Matrix & qv = q.value();
  const Matrix & kv = k.value();
  const Matrix & vv = v.value();
  const bool has_rel = relation.id >= 0;
  const int nq = static_cast<int>(qv.rows());
  const int d = static_cast<int>(qv.cols());
  if (edges.num_queries() != nq || kv.cols() != d || vv.cols() != d || kv.rows() != vv.rows()) {
    throw std::invalid_argument("relation_attention: shape mismatch");
  }
  if (has_rel && (relation.rows() != edges.num_edges() || relation.cols() != d)) {
    throw std::invalid_argument("relation_attention: relation shape mismatch");
  }
  if (d % heads != 0) throw std::invalid_argument("relation_attention: heads must divide dim");
  const int dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const int ne = edges.num_edges();

  Matrix y = Matrix::Zero(nq, d);
  Matrix alpha(ne, heads);
  std::vector<double> scores;
  const double * rel = has_rel ? relation.value().data() : nullptr;
  for (int qi = 0; qi < nq; ++qi) {
    const int e0 = edges.offsets[qi];
    const int e1 = edges.offsets[qi + 1];
    if (e1 == e0) continue;
    scores.resize(static_cast<std::size_t>(e1 - e0));
    for (int h = 0; h < heads; ++h) {
      const double * qrow = qv.data() + static_cast<std::ptrdiff_t>(qi) * d + h * dh;
      double mx = -std::numeric_limits<double>::infinity();
      for (int e = e0; e < e1; ++e) {
        const double * krow = kv.data() + static_cast<std::ptrdiff_t>(edges.key[e]) * d + h * dh;
        double s = 0.0;
        if (rel) {
          const double * rrow = rel + static_cast<std::ptrdiff_t>(e) * d + h * dh;
          for (int c = 0; c < dh; ++c) s += qrow[c] * (krow[c] + rrow[c]);
        } else {
          for (int c = 0; c < dh; ++c) s += qrow[c] * krow[c];
        }
        s *= inv_sqrt;
        scores[e - e0] = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      for (int e = e0; e < e1; ++e) {
        const double w = std::exp(scores[e - e0] - mx);
        scores[e - e0] = w;
        z += w;
      }
      double * yrow = y.data() + static_cast<std::ptrdiff_t>(qi) * d + h * dh;
      for (int e = e0; e < e1; ++e) {
        const double a = scores[e - e0] / z;
        alpha(e, h) = a;
        const double * vrow = vv.data() + static_cast<std::ptrdiff_t>(edges.key[e]) * d + h * dh;
        if (rel) {
          const double * rrow = rel + static_cast<std::ptrdiff_t>(e) * d + h * dh;
          for (int c = 0; c < dh; ++c) yrow[c] += a * (vrow[c] + rrow[c]);
        } else {
          for (int c = 0; c < dh; ++c) yrow[c] += a * vrow[c];
        }
      }
    }
  }

  Var out = tape->push(std::move(y), any_grad({q, k, v, relation}));
  tape->set_backward(out, [tape, q, k, v, relation, out, edges, heads, dh, inv_sqrt, alpha]() {
    const Matrix & g = tape->grad(out.id);
    const Matrix & qv = tape->value(q.id);
    const Matrix & kv = tape->value(k.id);
    const Matrix & vv = tape->value(v.id);
    const bool has_rel = relation.id >= 0;
    const double * rel = has_rel ? tape->value(relation.id).data() : nullptr;
    double * gq = needs(q) ? tape->grad(q.id).data() : nullptr;
    double * gk = needs(k) ? tape->grad(k.id).data() : nullptr;
    double * gv = needs(v) ? tape->grad(v.id).data() : nullptr;
    double * gr = needs(relation) ? tape->grad(relation.id).data() : nullptr;
    const int d = static_cast<int>(qv.cols());
    std::vector<double> dalpha;
    for (int qi = 0; qi < edges.num_queries(); ++qi) {
      const int e0 = edges.offsets[qi];
      const int e1 = edges.offsets[qi + 1];
      if (e1 == e0) continue;
      dalpha.resize(static_cast<std::size_t>(e1 - e0));
      for (int h = 0; h < heads; ++h) {
        const std::ptrdiff_t qoff = static_cast<std::ptrdiff_t>(qi) * d + h * dh;
        const double * grow = g.data() + qoff;
        const double * qrow = qv.data() + qoff;
        double weighted = 0.0;
        for (int e = e0; e < e1; ++e) {
          const std::ptrdiff_t koff = static_cast<std::ptrdiff_t>(edges.key[e]) * d + h * dh;
          const std::ptrdiff_t roff = static_cast<std::ptrdiff_t>(e) * d + h * dh;
          const double a = alpha(e, h);
          double da = 0.0;
          for (int c = 0; c < dh; ++c) {
            const double val = vv.data()[koff + c] + (rel ? rel[roff + c] : 0.0);
            da += grow[c] * val;
            if (gv) gv[koff + c] += a * grow[c];
            if (gr) gr[roff + c] += a * grow[c];
          }
          dalpha[e - e0] = da;
          weighted += a * da;
        }
        for (int e = e0; e < e1; ++e) {
          const std::ptrdiff_t koff = static_cast<std::ptrdiff_t>(edges.key[e]) * d + h * dh;
          const std::ptrdiff_t roff = static_cast<std::ptrdiff_t>(e) * d + h * dh;
          const double ds = alpha(e, h) * (dalpha[e - e0] - weighted) * inv_sqrt;
          for (int c = 0; c < dh; ++c) {
            const double key = kv.data()[koff + c] + (rel ? rel[roff + c] : 0.0);
            if (gq) gq[qoff + c] += ds * key;
            if (gk) gk[koff + c] += ds * qrow[c];
            if (gr) gr[roff + c] += ds * qrow[c];
          }
        }
      }
    }
  });
  return out;
}

Var cross_entropy_sum(Var logits, const std::vector<int> & targets, double normalizer)
{
  Tape * tape = logits.tape;
  const Matrix & lv = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != lv.rows()) {
    throw std::invalid_argument("cross_entropy_sum: target count mismatch");
  }
  double total = 0.0;
  Matrix probs = Matrix::Zero(lv.rows(), lv.cols());
  for (Eigen::Index r = 0; r < lv.rows(); ++r) {
    const int t = targets[static_cast<std::size_t>(r)];
    if (t < 0) continue;
    if (t >= lv.cols()) throw std::out_of_range("cross_entropy_sum: target out of range");
    const double mx = lv.row(r).maxCoeff();
    const Eigen::RowVectorXd ex = (lv.row(r).array() - mx).exp();
    const double z = ex.sum();
    probs.row(r) = ex / z;
    total += -(lv(r, t) - mx - std::log(z));
  }
  Matrix y(1, 1);
  y(0, 0) = total / normalizer;
  Var out = tape->push(std::move(y), any_grad({logits}));
  tape->set_backward(out, [tape, logits, out, targets, normalizer, probs]() {
    const double g = tape->grad(out.id)(0, 0) / normalizer;
    Matrix & gl = tape->grad(logits.id);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      const int t = targets[static_cast<std::size_t>(r)];
      if (t < 0) continue;
      gl.row(r) += g * probs.row(r);
      gl(r, t) -= g;
    }
  });
  return out;
}

}  // namespace revsim::bmt
