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

#include "crossalign/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crossalign/error.hpp"

namespace crossalign {

const Tensor2D& Var::value() const {
  if (tape_ == nullptr) throw ContractError("use of an unbound Var");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Tensor2D& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("scalar() on a non-scalar node of shape " + v.shape_string());
  }
  return v(0, 0);
}

Tensor2D Gradients::of(const Var& var) const {
  if (var.id() < grads_.size() && !grads_[var.id()].empty()) return grads_[var.id()];
  return Tensor2D(var.rows(), var.cols());
}

Var Tape::constant(Tensor2D value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor2D value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor2D value, std::initializer_list<Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError("operand recorded on a different tape");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::vector<Tensor2D>& grads, std::size_t id, const Tensor2D& delta) {
  Tensor2D& slot = grads[id];
  if (slot.empty()) {
    slot = delta;
    return;
  }
  require_same_shape(slot, delta, "gradient accumulation");
  auto dst = slot.values();
  auto src = delta.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Gradients Tape::backward(const Var& loss) const {
  if (&loss.tape() != this) throw ContractError("loss recorded on a different tape");
  const Tensor2D& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + lv.shape_string());
  }
  std::vector<Tensor2D> grads(nodes_.size());
  grads[loss.id()] = Tensor2D(1, 1, 1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.backward || grads[i].empty()) continue;
    node.backward(grads[i], grads);
  }
  return Gradients(std::move(grads));
}

namespace ad {
namespace {

Tensor2D map(const Tensor2D& x, auto fn) {
  Tensor2D out = x;
  for (double& v : out.values()) v = fn(v);
  return out;
}

/// grad_out * f'(x), elementwise.
Tensor2D chain(const Tensor2D& grad_out, const Tensor2D& x, auto dfn) {
  Tensor2D out(x.rows(), x.cols());
  auto g = grad_out.values();
  auto xv = x.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = g[i] * dfn(xv[i]);
  return out;
}

}  // namespace

Var affine(const Var& x, const Var& w, const Var& b) {
  Tape& t = x.tape();
  const std::size_t xi = x.id(), wi = w.id(), bi = b.id();
  return t.record(kernels::affine(x.value(), w.value(), b.value()), {x, w, b},
                  [&t, xi, wi, bi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    if (t.requires_grad(xi)) {
                      Tape::accumulate(grads, xi, kernels::matmul_bt(g, t.value(wi)));
                    }
                    if (t.requires_grad(wi)) {
                      Tape::accumulate(grads, wi, kernels::matmul_at(t.value(xi), g));
                    }
                    if (t.requires_grad(bi)) {
                      Tensor2D gb(1, g.cols());
                      for (std::size_t r = 0; r < g.rows(); ++r) {
                        for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
                      }
                      Tape::accumulate(grads, bi, gb);
                    }
                  });
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = a.tape();
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(kernels::matmul(a.value(), b.value()), {a, b},
                  [&t, ai, bi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    if (t.requires_grad(ai)) {
                      Tape::accumulate(grads, ai, kernels::matmul_bt(g, t.value(bi)));
                    }
                    if (t.requires_grad(bi)) {
                      Tape::accumulate(grads, bi, kernels::matmul_at(t.value(ai), g));
                    }
                  });
}

Var matmul_bt(const Var& a, const Var& b) {
  Tape& t = a.tape();
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(kernels::matmul_bt(a.value(), b.value()), {a, b},
                  [&t, ai, bi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    // out = A B^T: dA = G B, dB = G^T A.
                    if (t.requires_grad(ai)) {
                      Tape::accumulate(grads, ai, kernels::matmul(g, t.value(bi)));
                    }
                    if (t.requires_grad(bi)) {
                      Tape::accumulate(grads, bi, kernels::matmul_at(g, t.value(ai)));
                    }
                  });
}

Var relu(const Var& x) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  return t.record(kernels::relu(x.value()), {x},
                  [&t, xi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    Tape::accumulate(grads, xi, chain(g, t.value(xi), [](double v) {
                                       return v > 0.0 ? 1.0 : 0.0;
                                     }));
                  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  Tape& t = a.tape();
  const std::size_t ai = a.id(), bi = b.id();
  Tensor2D out = a.value();
  auto bv = b.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return t.record(std::move(out), {a, b},
                  [&t, ai, bi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    if (t.requires_grad(ai)) Tape::accumulate(grads, ai, g);
                    if (t.requires_grad(bi)) Tape::accumulate(grads, bi, g);
                  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tape& t = a.tape();
  const std::size_t ai = a.id(), bi = b.id();
  Tensor2D out = a.value();
  auto bv = b.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return t.record(std::move(out), {a, b},
                  [&t, ai, bi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    if (t.requires_grad(ai)) Tape::accumulate(grads, ai, g);
                    if (t.requires_grad(bi)) Tape::accumulate(grads, bi, map(g, [](double v) {
                                                                return -v;
                                                              }));
                  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tape& t = a.tape();
  const std::size_t ai = a.id(), bi = b.id();
  Tensor2D out = a.value();
  auto bv = b.value().values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return t.record(std::move(out), {a, b},
                  [&t, ai, bi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    auto times = [&g](const Tensor2D& other) {
                      Tensor2D r = g;
                      auto rv = r.values();
                      auto ov = other.values();
                      for (std::size_t i = 0; i < rv.size(); ++i) rv[i] *= ov[i];
                      return r;
                    };
                    if (t.requires_grad(ai)) Tape::accumulate(grads, ai, times(t.value(bi)));
                    if (t.requires_grad(bi)) Tape::accumulate(grads, bi, times(t.value(ai)));
                  });
}

Var scale(const Var& x, double factor) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  return t.record(map(x.value(), [factor](double v) { return v * factor; }), {x},
                  [xi, factor](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    Tape::accumulate(grads, xi, map(g, [factor](double v) { return v * factor; }));
                  });
}

Var add_scalar(const Var& x, double offset) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  return t.record(map(x.value(), [offset](double v) { return v + offset; }), {x},
                  [xi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    Tape::accumulate(grads, xi, g);
                  });
}

Var exp(const Var& x) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  return t.record(map(x.value(), [](double v) { return std::exp(v); }), {x},
                  [&t, xi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    Tape::accumulate(grads, xi, chain(g, t.value(xi), [](double v) {
                                       return std::exp(v);
                                     }));
                  });
}

Var sqrt(const Var& x) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  return t.record(map(x.value(), [](double v) { return std::sqrt(v); }), {x},
                  [&t, xi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    Tape::accumulate(grads, xi, chain(g, t.value(xi), [](double v) {
                                       return v > 0.0 ? 0.5 / std::sqrt(v) : 0.0;
                                     }));
                  });
}

Var abs(const Var& x) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  return t.record(map(x.value(), [](double v) { return std::fabs(v); }), {x},
                  [&t, xi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    Tape::accumulate(grads, xi, chain(g, t.value(xi), [](double v) {
                                       return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                                     }));
                  });
}

Var clamp(const Var& x, double lo, double hi) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  return t.record(map(x.value(), [lo, hi](double v) { return std::clamp(v, lo, hi); }), {x},
                  [&t, xi, lo, hi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    Tape::accumulate(grads, xi, chain(g, t.value(xi), [lo, hi](double v) {
                                       return (v >= lo && v <= hi) ? 1.0 : 0.0;
                                     }));
                  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t count) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  const std::size_t total = x.cols();
  return t.record(kernels::slice_cols(x.value(), begin, count), {x},
                  [xi, begin, count, total](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    Tensor2D d(g.rows(), total);
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      for (std::size_t c = 0; c < count; ++c) d(r, begin + c) = g(r, c);
                    }
                    Tape::accumulate(grads, xi, d);
                  });
}

Var gather_rows(const Var& x, std::vector<std::size_t> rows) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  const std::size_t source_rows = x.rows();
  Tensor2D out = kernels::gather_rows(x.value(), rows);
  return t.record(std::move(out), {x},
                  [xi, source_rows, rows = std::move(rows)](const Tensor2D& g,
                                                            std::vector<Tensor2D>& grads) {
                    Tensor2D d(source_rows, g.cols());
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                      auto dst = d.row(rows[i]);
                      auto src = g.row(i);
                      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                    }
                    Tape::accumulate(grads, xi, d);
                  });
}

Var l2_normalize_rows(const Var& x) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  return t.record(kernels::l2_normalize_rows(x.value()), {x},
                  [&t, xi](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    // dx = (g - y (y . g)) / |x|
                    const Tensor2D& xv = t.value(xi);
                    Tensor2D d(g.rows(), g.cols());
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      double norm_sq = 0.0;
                      for (double v : xv.row(r)) norm_sq += v * v;
                      const double norm = std::sqrt(norm_sq);
                      double dot = 0.0;
                      for (std::size_t c = 0; c < g.cols(); ++c) dot += xv(r, c) / norm * g(r, c);
                      for (std::size_t c = 0; c < g.cols(); ++c) {
                        d(r, c) = (g(r, c) - xv(r, c) / norm * dot) / norm;
                      }
                    }
                    Tape::accumulate(grads, xi, d);
                  });
}

Var row_sum(const Var& x) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  const Tensor2D& xv = x.value();
  Tensor2D out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double acc = 0.0;
    for (double v : xv.row(r)) acc += v;
    out(r, 0) = acc;
  }
  const std::size_t cols = xv.cols();
  return t.record(std::move(out), {x},
                  [xi, cols](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    Tensor2D d(g.rows(), cols);
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      for (double& v : d.row(r)) v = g(r, 0);
                    }
                    Tape::accumulate(grads, xi, d);
                  });
}

Var sum(const Var& x) {
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  const std::size_t rows = x.rows(), cols = x.cols();
  return t.record(Tensor2D(1, 1, acc), {x},
                  [xi, rows, cols](const Tensor2D& g, std::vector<Tensor2D>& grads) {
                    Tape::accumulate(grads, xi, Tensor2D(rows, cols, g(0, 0)));
                  });
}

Var weighted_sum(const Var& x, Tensor2D weights) {
  require_same_shape(x.value(), weights, "weighted_sum");
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  double acc = 0.0;
  auto xv = x.value().values();
  auto wv = weights.values();
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i] * wv[i];
  return t.record(Tensor2D(1, 1, acc), {x},
                  [xi, weights = std::move(weights)](const Tensor2D& g,
                                                     std::vector<Tensor2D>& grads) {
                    Tape::accumulate(grads, xi, map(weights, [s = g(0, 0)](double w) {
                                       return w * s;
                                     }));
                  });
}

Var masked_logsumexp_rows(const Var& x, Tensor2D mask) {
  require_same_shape(x.value(), mask, "masked_logsumexp_rows");
  Tape& t = x.tape();
  const std::size_t xi = x.id();
  const Tensor2D& xv = x.value();
  // Softmax weights over the unmasked entries, kept for the backward pass.
  Tensor2D weights(xv.rows(), xv.cols());
  Tensor2D out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      if (mask(r, c) != 0.0) peak = std::max(peak, xv(r, c));
    }
    if (peak == -std::numeric_limits<double>::infinity()) {
      throw ContractError("masked_logsumexp_rows: row " + std::to_string(r) +
                          " has no unmasked entries");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      if (mask(r, c) != 0.0) {
        weights(r, c) = std::exp(xv(r, c) - peak);
        total += weights(r, c);
      }
    }
    for (double& w : weights.row(r)) w /= total;
    out(r, 0) = peak + std::log(total);
  }
  return t.record(std::move(out), {x},
                  [xi, weights = std::move(weights)](const Tensor2D& g,
                                                     std::vector<Tensor2D>& grads) {
                    Tensor2D d = weights;
                    for (std::size_t r = 0; r < d.rows(); ++r) {
                      for (double& v : d.row(r)) v *= g(r, 0);
                    }
                    Tape::accumulate(grads, xi, d);
                  });
}

Var reparameterize(const Var& mu, const Var& log_var, Tensor2D noise) {
  require_same_shape(mu.value(), log_var.value(), "reparameterize");
  require_same_shape(mu.value(), noise, "reparameterize noise");
  Tape& t = mu.tape();
  const std::size_t mi = mu.id(), li = log_var.id();
  Tensor2D out = mu.value();
  const Tensor2D& lv = log_var.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] += std::exp(0.5 * lv.values()[i]) * noise.values()[i];
  }
  return t.record(std::move(out), {mu, log_var},
                  [&t, mi, li, noise = std::move(noise)](const Tensor2D& g,
                                                         std::vector<Tensor2D>& grads) {
                    if (t.requires_grad(mi)) Tape::accumulate(grads, mi, g);
                    if (t.requires_grad(li)) {
                      const Tensor2D& lv = t.value(li);
                      Tensor2D d(g.rows(), g.cols());
                      for (std::size_t i = 0; i < d.size(); ++i) {
                        d.values()[i] = g.values()[i] * 0.5 * std::exp(0.5 * lv.values()[i]) *
                                        noise.values()[i];
                      }
                      Tape::accumulate(grads, li, d);
                    }
                  });
}

}  // namespace ad
}  // namespace crossalign
