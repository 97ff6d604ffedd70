// Copyright 2026 The vqat Authors.
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

#include "vqat/autograd.hpp"

#include <cmath>
#include <numbers>

namespace vqat::ad {

Parameter& ParameterSet::add(std::string name, Matrix value) {
  if (index_.count(name)) throw std::logic_error("duplicate parameter " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = std::move(value);
  p->zero_grad();
  index_.emplace(p->name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterSet::get(const std::string& name) {
  auto* p = find(name);
  if (!p) throw std::out_of_range("no parameter named " + name);
  return *p;
}

const Parameter& ParameterSet::get(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->get(name);
}

Parameter* ParameterSet::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

size_t ParameterSet::scalar_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p->value.size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& p : params_) out.add(p->name, p->value);
  return out;
}

void ParameterSet::assign(const ParameterSet& other) {
  for (auto& p : params_) {
    const Parameter& src = other.get(p->name);
    if (src.value.rows() != p->value.rows() || src.value.cols() != p->value.cols()) {
      throw std::logic_error("shape mismatch assigning " + p->name);
    }
    p->value = src.value;
  }
}

// ---------------------------------------------------------------------------

Var Graph::push(Matrix value, bool requires_grad, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_ && requires_grad;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

bool Graph::any_requires_grad(std::initializer_list<Var> vars) const {
  for (Var v : vars) {
    if (requires_grad(v)) return true;
  }
  return false;
}

void Graph::accumulate(Var v, const Matrix& delta) {
  Node& n = nodes_[static_cast<size_t>(v.id)];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = delta;
  } else {
    n.grad += delta;
  }
}

Var Graph::constant(Matrix m) { return push(std::move(m), false, nullptr); }

Var Graph::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{it->second};
  Var v = push(p.value, true, nullptr);
  nodes_[static_cast<size_t>(v.id)].param = &p;
  param_nodes_.emplace(&p, v.id);
  return v;
}

Var Graph::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw std::logic_error("matmul: inner dims differ");
  Matrix out = value(a) * value(b);
  return push(std::move(out), any_requires_grad({a, b}), [a, b](Graph& g, int self) {
    const Matrix& go = g.grad_of(self);
    if (g.requires_grad(a)) g.accumulate(a, go * g.value(b).transpose());
    if (g.requires_grad(b)) g.accumulate(b, g.value(a).transpose() * go);
  });
}

Var Graph::matmul_nt(Var a, Var b) {
  if (value(a).cols() != value(b).cols()) throw std::logic_error("matmul_nt: inner dims differ");
  Matrix out = value(a) * value(b).transpose();
  return push(std::move(out), any_requires_grad({a, b}), [a, b](Graph& g, int self) {
    const Matrix& go = g.grad_of(self);
    if (g.requires_grad(a)) g.accumulate(a, go * g.value(b));
    if (g.requires_grad(b)) g.accumulate(b, go.transpose() * g.value(a));
  });
}

Var Graph::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::logic_error("add: shape mismatch");
  }
  Matrix out = value(a) + value(b);
  return push(std::move(out), any_requires_grad({a, b}), [a, b](Graph& g, int self) {
    g.accumulate(a, g.grad_of(self));
    g.accumulate(b, g.grad_of(self));
  });
}

Var Graph::sub(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::logic_error("sub: shape mismatch");
  }
  Matrix out = value(a) - value(b);
  return push(std::move(out), any_requires_grad({a, b}), [a, b](Graph& g, int self) {
    g.accumulate(a, g.grad_of(self));
    if (g.requires_grad(b)) g.accumulate(b, -g.grad_of(self));
  });
}

Var Graph::add_row(Var a, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
    throw std::logic_error("add_row: bias shape mismatch");
  }
  Matrix out = value(a);
  out.rowwise() += value(row).row(0);
  return push(std::move(out), any_requires_grad({a, row}), [a, row](Graph& g, int self) {
    const Matrix& go = g.grad_of(self);
    g.accumulate(a, go);
    if (g.requires_grad(row)) g.accumulate(row, go.colwise().sum());
  });
}

Var Graph::scale(Var a, double s) {
  Matrix out = value(a) * s;
  return push(std::move(out), requires_grad(a), [a, s](Graph& g, int self) {
    g.accumulate(a, g.grad_of(self) * s);
  });
}

Var Graph::mul_const(Var a, const Matrix& m) {
  Matrix out = value(a).cwiseProduct(m);
  return push(std::move(out), requires_grad(a), [a, m](Graph& g, int self) {
    g.accumulate(a, g.grad_of(self).cwiseProduct(m));
  });
}

Var Graph::gelu(Var a) {
  const Matrix& x = value(a);
  Matrix out = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); });
  return push(std::move(out), requires_grad(a), [a](Graph& g, int self) {
    const Matrix& x = g.value(a);
    const Matrix deriv = x.unaryExpr([](double v) {
      const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
      const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + v * pdf;
    });
    g.accumulate(a, g.grad_of(self).cwiseProduct(deriv));
  });
}

Var Graph::layer_norm(Var a, Var gain, Var bias, double eps) {
  const Matrix& x = value(a);
  const Eigen::Index n = x.cols();
  if (value(gain).cols() != n || value(bias).cols() != n) {
    throw std::logic_error("layer_norm: gain/bias width mismatch");
  }
  Matrix xhat(x.rows(), n);
  Vector inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.row(r).array() - mu) * inv_std(r);
  }
  Matrix out = xhat;
  out.array().rowwise() *= value(gain).row(0).array();
  out.rowwise() += value(bias).row(0);
  return push(std::move(out), any_requires_grad({a, gain, bias}),
              [a, gain, bias, xhat, inv_std](Graph& g, int self) {
                const Matrix& go = g.grad_of(self);
                if (g.requires_grad(gain)) {
                  g.accumulate(gain, go.cwiseProduct(xhat).colwise().sum());
                }
                if (g.requires_grad(bias)) g.accumulate(bias, go.colwise().sum());
                if (!g.requires_grad(a)) return;
                Matrix dxhat = go;
                dxhat.array().rowwise() *= g.value(gain).row(0).array();
                const double n = static_cast<double>(dxhat.cols());
                Matrix dx(dxhat.rows(), dxhat.cols());
                for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                  const double s1 = dxhat.row(r).sum();
                  const double s2 = dxhat.row(r).dot(xhat.row(r));
                  dx.row(r) = (inv_std(r) / n) *
                              (n * dxhat.row(r).array() - s1 - xhat.row(r).array() * s2);
                }
                g.accumulate(a, dx);
              });
}

Var Graph::masked_softmax(Var scores, std::span<const uint8_t> key_mask) {
  const Matrix& s = value(scores);
  if (static_cast<Eigen::Index>(key_mask.size()) != s.cols()) {
    throw std::logic_error("masked_softmax: mask width mismatch");
  }
  Matrix p = Matrix::Zero(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (key_mask[static_cast<size_t>(c)]) mx = std::max(mx, s(r, c));
    }
    if (!std::isfinite(mx)) continue;
    double z = 0.0;
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      if (key_mask[static_cast<size_t>(c)]) {
        p(r, c) = std::exp(s(r, c) - mx);
        z += p(r, c);
      }
    }
    p.row(r) /= z;
  }
  return push(p, requires_grad(scores), [scores, p](Graph& g, int self) {
    const Matrix& go = g.grad_of(self);
    Matrix ds = p.cwiseProduct(go);
    const Vector dots = ds.rowwise().sum();
    ds -= p.cwiseProduct(dots.replicate(1, p.cols()));
    g.accumulate(scores, ds);
  });
}

Var Graph::dropout(Var a, double p, Rng* rng) {
  if (!rng || p <= 0.0) return a;
  const Matrix& x = value(a);
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng->uniform() < p ? 0.0 : keep_scale;
  }
  return mul_const(a, mask);
}

Var Graph::gather_rows(Var table, std::span<const int> ids) {
  const Matrix& t = value(table);
  Matrix out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) throw std::out_of_range("gather_rows: id out of range");
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return push(std::move(out), requires_grad(table), [table, idx](Graph& g, int self) {
    const Matrix& go = g.grad_of(self);
    Matrix dt = Matrix::Zero(g.value(table).rows(), g.value(table).cols());
    for (size_t i = 0; i < idx.size(); ++i) dt.row(idx[i]) += go.row(static_cast<Eigen::Index>(i));
    g.accumulate(table, dt);
  });
}

Var Graph::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::logic_error("concat_rows: nothing to concatenate");
  Eigen::Index rows = 0;
  const Eigen::Index cols = value(parts[0]).cols();
  bool rg = false;
  for (Var v : parts) {
    if (value(v).cols() != cols) throw std::logic_error("concat_rows: width mismatch");
    rows += value(v).rows();
    rg = rg || requires_grad(v);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var v : parts) {
    out.middleRows(at, value(v).rows()) = value(v);
    at += value(v).rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), rg, [ps](Graph& g, int self) {
    const Matrix& go = g.grad_of(self);
    Eigen::Index at = 0;
    for (Var v : ps) {
      const Eigen::Index r = g.value(v).rows();
      if (g.requires_grad(v)) g.accumulate(v, go.middleRows(at, r));
      at += r;
    }
  });
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::logic_error("concat_cols: nothing to concatenate");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var v : parts) {
    if (value(v).rows() != rows) throw std::logic_error("concat_cols: height mismatch");
    cols += value(v).cols();
    rg = rg || requires_grad(v);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var v : parts) {
    out.middleCols(at, value(v).cols()) = value(v);
    at += value(v).cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), rg, [ps](Graph& g, int self) {
    const Matrix& go = g.grad_of(self);
    Eigen::Index at = 0;
    for (Var v : ps) {
      const Eigen::Index c = g.value(v).cols();
      if (g.requires_grad(v)) g.accumulate(v, go.middleCols(at, c));
      at += c;
    }
  });
}

Var Graph::slice_rows(Var a, Eigen::Index start, Eigen::Index n) {
  if (start < 0 || start + n > value(a).rows()) throw std::out_of_range("slice_rows");
  Matrix out = value(a).middleRows(start, n);
  return push(std::move(out), requires_grad(a), [a, start, n](Graph& g, int self) {
    Matrix d = Matrix::Zero(g.value(a).rows(), g.value(a).cols());
    d.middleRows(start, n) = g.grad_of(self);
    g.accumulate(a, d);
  });
}

Var Graph::slice_cols(Var a, Eigen::Index start, Eigen::Index n) {
  if (start < 0 || start + n > value(a).cols()) throw std::out_of_range("slice_cols");
  Matrix out = value(a).middleCols(start, n);
  return push(std::move(out), requires_grad(a), [a, start, n](Graph& g, int self) {
    Matrix d = Matrix::Zero(g.value(a).rows(), g.value(a).cols());
    d.middleCols(start, n) = g.grad_of(self);
    g.accumulate(a, d);
  });
}

Var Graph::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), requires_grad(a), [a](Graph& g, int self) {
    const double go = g.grad_of(self)(0, 0);
    g.accumulate(a, Matrix::Constant(g.value(a).rows(), g.value(a).cols(), go));
  });
}

Var Graph::custom(std::span<const Var> inputs, Matrix value,
                  std::function<void(Graph&, const Matrix&)> backward) {
  bool rg = false;
  for (Var v : inputs) rg = rg || requires_grad(v);
  return push(std::move(value), rg, [fn = std::move(backward)](Graph& g, int self) {
    fn(g, g.grad_of(self));
  });
}

void Graph::backward(Var root) {
  if (value(root).size() != 1) throw std::logic_error("backward: root must be scalar");
  Node& r = nodes_[static_cast<size_t>(root.id)];
  if (!r.requires_grad) return;
  r.grad = Matrix::Ones(1, 1);
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) n.param->grad += n.grad;
  }
}

}  // namespace vqat::ad
