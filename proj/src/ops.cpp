// Copyright 2026 The adapter3d Authors. All Rights Reserved.
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

#include "adapter3d/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "adapter3d/errors.hpp"

namespace adapter3d::ad {

namespace {

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                      shape_string(b.shape()));
  }
}

void require_rank(const Var& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw ConfigError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                      shape_string(a.shape()));
  }
}

void require_scalar(const Var& a, const char* op) {
  if (a.size() != 1) throw ConfigError(std::string(op) + ": expected a scalar");
}

std::vector<double> copy_values(const Var& a) { return {a.value().begin(), a.value().end()}; }

template <class Fwd, class Deriv>
Var unary(const Var& a, Fwd fwd, Deriv deriv) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a[i]);
  return make_result(a.shape(), std::move(out), {a}, [deriv](Node& self) {
    Node& x = input(self, 0);
    auto& g = x.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(x.value[i], self.value[i]);
  });
}

double softplus_value(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& x = input(self, k);
      if (!x.requires_grad) continue;
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& x = input(self, k);
      if (!x.requires_grad) continue;
      const double sign = k == 0 ? 1.0 : -1.0;
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& x = input(self, 0);
    Node& y = input(self, 1);
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y.value[i];
    }
    if (y.requires_grad) {
      auto& g = y.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x.value[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; });
}

Var add_scalar(const Var& a, double value) {
  return unary(a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Var square(const Var& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(a, [slope](double x) { return x >= 0 ? x : slope * x; },
               [slope](double x, double) { return x >= 0 ? 1.0 : slope; });
}

Var softplus(const Var& a) {
  return unary(a, softplus_value, [](double x, double) { return sigmoid(x); });
}

Var sum(const Var& a) {
  double acc = 0.0;
  for (double v : a.value()) acc += v;
  return make_result({}, {acc}, {a}, [](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Var mean(const Var& a) {
  if (a.size() == 0) throw ConfigError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var dot(const Var& a, const Var& b) {
  if (a.size() != b.size()) throw ConfigError("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return make_result({}, {acc}, {a, b}, [](Node& self) {
    Node& x = input(self, 0);
    Node& y = input(self, 1);
    const double g0 = self.grad[0];
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * y.value[i];
    }
    if (y.requires_grad) {
      auto& g = y.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * x.value[i];
    }
  });
}

Var l2_norm(const Var& a) {
  double acc = 0.0;
  for (double v : a.value()) acc += v * v;
  const double norm = std::sqrt(acc);
  return make_result({}, {norm}, {a}, [norm](Node& self) {
    if (norm == 0.0) return;
    Node& x = input(self, 0);
    auto& g = x.ensure_grad();
    const double s = self.grad[0] / norm;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * x.value[i];
  });
}

Var maximum(const Var& a, const Var& b) {
  require_scalar(a, "maximum");
  require_scalar(b, "maximum");
  const bool pick_a = a[0] >= b[0];
  return make_result({}, {pick_a ? a[0] : b[0]}, {a, b}, [pick_a](Node& self) {
    Node& x = input(self, pick_a ? 0 : 1);
    if (x.requires_grad) x.ensure_grad()[0] += self.grad[0];
  });
}

Var divide(const Var& a, const Var& b) {
  require_scalar(a, "divide");
  require_scalar(b, "divide");
  const double q = a[0] / b[0];
  return make_result({}, {q}, {a, b}, [](Node& self) {
    Node& x = input(self, 0);
    Node& y = input(self, 1);
    const double den = y.value[0];
    if (x.requires_grad) x.ensure_grad()[0] += self.grad[0] / den;
    if (y.requires_grad) y.ensure_grad()[0] -= self.grad[0] * x.value[0] / (den * den);
  });
}

Var reshape(const Var& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ConfigError("reshape " + shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  return make_result(std::move(shape), copy_values(a), {a}, [](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigError("concat of nothing");
  Shape shape = parts[0].shape();
  if (shape.empty()) throw ConfigError("concat of scalars");
  std::size_t rows = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    if (p.rank() != shape.size() ||
        !std::equal(shape.begin() + 1, shape.end(), p.shape().begin() + 1)) {
      throw ConfigError("concat: trailing shape mismatch");
    }
    rows += p.dim(0);
    out.insert(out.end(), p.value().begin(), p.value().end());
  }
  shape[0] = rows;
  return make_result(std::move(shape), std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (auto& in : self.inputs) {
      if (in->requires_grad) {
        auto& g = in->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offset + i];
      }
      offset += in->value.size();
    }
  });
}

Var slice(const Var& a, std::size_t begin, std::size_t end) {
  if (a.rank() == 0 || begin > end || end > a.dim(0)) throw ConfigError("slice out of range");
  const std::size_t inner = a.size() / a.dim(0);
  Shape shape = a.shape();
  shape[0] = end - begin;
  std::vector<double> out(a.value().begin() + static_cast<std::ptrdiff_t>(begin * inner),
                          a.value().begin() + static_cast<std::ptrdiff_t>(end * inner));
  const std::size_t offset = begin * inner;
  return make_result(std::move(shape), std::move(out), {a}, [offset](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
  });
}

Var transpose(const Var& a) {
  require_rank(a, 2, "transpose");
  const std::size_t n = a.dim(0), m = a.dim(1);
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j * n + i] = a[i * m + j];
  return make_result({m, n}, std::move(out), {a}, [n, m](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[j * n + i];
  });
}

Var gather(const Var& a, std::vector<std::size_t> index, Shape shape) {
  if (numel(shape) != index.size()) throw ConfigError("gather: shape does not match index count");
  std::vector<double> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= a.size()) throw ConfigError("gather: index out of range");
    out[i] = a[index[i]];
  }
  auto idx = std::make_shared<std::vector<std::size_t>>(std::move(index));
  return make_result(std::move(shape), std::move(out), {a}, [idx](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (std::size_t i = 0; i < idx->size(); ++i) g[(*idx)[i]] += self.grad[i];
  });
}

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) {
    throw ConfigError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  std::vector<double> out(n * m);
  kernels::matmul(a.value(), b.value(), out, n, k, m);
  return make_result({n, m}, std::move(out), {a, b}, [n, k, m](Node& self) {
    Node& x = input(self, 0);
    Node& y = input(self, 1);
    if (x.requires_grad) kernels::matmul_grad_a(self.grad, y.value, x.ensure_grad(), n, k, m);
    if (y.requires_grad) kernels::matmul_grad_b(x.value, self.grad, y.ensure_grad(), n, k, m);
  });
}

Var add_row_bias(const Var& a, const Var& bias) {
  require_rank(a, 2, "add_row_bias");
  const std::size_t n = a.dim(0), m = a.dim(1);
  if (bias.size() != m) throw ConfigError("add_row_bias: bias size mismatch");
  std::vector<double> out = copy_values(a);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += bias[j];
  return make_result(a.shape(), std::move(out), {a, bias}, [n, m](Node& self) {
    Node& x = input(self, 0);
    Node& b = input(self, 1);
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (b.requires_grad) {
      auto& g = b.ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
    }
  });
}

Var add_channel_bias(const Var& a, const Var& bias) {
  require_rank(a, 3, "add_channel_bias");
  const std::size_t c = a.dim(0), plane = a.dim(1) * a.dim(2);
  if (bias.size() != c) throw ConfigError("add_channel_bias: bias size mismatch");
  std::vector<double> out = copy_values(a);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < plane; ++i) out[ch * plane + i] += bias[ch];
  return make_result(a.shape(), std::move(out), {a, bias}, [c, plane](Node& self) {
    Node& x = input(self, 0);
    Node& b = input(self, 1);
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (b.requires_grad) {
      auto& g = b.ensure_grad();
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < plane; ++i) g[ch] += self.grad[ch * plane + i];
    }
  });
}

Var normalize(const Var& a) {
  double acc = 0.0;
  for (double v : a.value()) acc += v * v;
  const double norm = std::sqrt(acc);
  if (norm == 0.0) throw DegenerateError("normalize: zero vector");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] / norm;
  return make_result(a.shape(), std::move(out), {a}, [norm](Node& self) {
    // d(x/|x|) = (g - y (y.g)) / |x|
    double yg = 0.0;
    for (std::size_t i = 0; i < self.grad.size(); ++i) yg += self.value[i] * self.grad[i];
    auto& g = input(self, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += (self.grad[i] - self.value[i] * yg) / norm;
  });
}

Var normalize_rows(const Var& a) {
  require_rank(a, 2, "normalize_rows");
  const std::size_t n = a.dim(0), d = a.dim(1);
  std::vector<double> out(a.size());
  auto norms = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += a[i * d + j] * a[i * d + j];
    const double norm = std::sqrt(acc);
    if (norm == 0.0) throw DegenerateError("normalize_rows: row " + std::to_string(i) + " is zero");
    (*norms)[i] = norm;
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = a[i * d + j] / norm;
  }
  return make_result(a.shape(), std::move(out), {a}, [n, d, norms](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double* y = self.value.data() + i * d;
      const double* gy = self.grad.data() + i * d;
      double yg = 0.0;
      for (std::size_t j = 0; j < d; ++j) yg += y[j] * gy[j];
      for (std::size_t j = 0; j < d; ++j) g[i * d + j] += (gy[j] - y[j] * yg) / (*norms)[i];
    }
  });
}

Var min_over_cols(const Var& a) {
  require_rank(a, 2, "min_over_cols");
  const std::size_t n = a.dim(0), m = a.dim(1);
  if (m == 0) throw ConfigError("min_over_cols: empty rows");
  std::vector<double> out(n);
  auto arg = std::make_shared<std::vector<std::size_t>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m; ++j)
      if (a[i * m + j] < a[i * m + best]) best = j;
    (*arg)[i] = best;
    out[i] = a[i * m + best];
  }
  return make_result({n}, std::move(out), {a}, [m, arg](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (std::size_t i = 0; i < arg->size(); ++i) g[i * m + (*arg)[i]] += self.grad[i];
  });
}

Var min_over_rows(const Var& a) {
  require_rank(a, 2, "min_over_rows");
  const std::size_t n = a.dim(0), m = a.dim(1);
  if (n == 0) throw ConfigError("min_over_rows: empty columns");
  std::vector<double> out(m);
  auto arg = std::make_shared<std::vector<std::size_t>>(m);
  for (std::size_t j = 0; j < m; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (a[i * m + j] < a[best * m + j]) best = i;
    (*arg)[j] = best;
    out[j] = a[best * m + j];
  }
  return make_result({m}, std::move(out), {a}, [m, arg](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (std::size_t j = 0; j < m; ++j) g[(*arg)[j] * m + j] += self.grad[j];
  });
}

Var mean_of_smallest(const Var& a, std::size_t t) {
  if (t == 0) throw ConfigError("mean_of_smallest: t must be >= 1");
  const std::size_t k = a.size();
  if (k == 0) throw ConfigError("mean_of_smallest: empty input");
  const std::size_t take = std::min(t, k);
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a[x] < a[y]; });
  auto chosen = std::make_shared<std::vector<std::size_t>>(order.begin(),
                                                           order.begin() + static_cast<std::ptrdiff_t>(take));
  double acc = 0.0;
  for (auto idx : *chosen) acc += a[idx];
  const double inv = 1.0 / static_cast<double>(take);
  return make_result({}, {acc * inv}, {a}, [chosen, inv](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (auto idx : *chosen) g[idx] += self.grad[0] * inv;
  });
}

Var mean_rows(const Var& a) {
  require_rank(a, 2, "mean_rows");
  const std::size_t n = a.dim(0), d = a.dim(1);
  if (n == 0) throw ConfigError("mean_rows: no rows");
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[j] += a[i * d + j];
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= inv;
  return make_result({d}, std::move(out), {a}, [n, d, inv](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[j] * inv;
  });
}

Var conv2d(const Var& x, const Var& weight) {
  require_rank(x, 3, "conv2d");
  require_rank(weight, 4, "conv2d");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t o = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != c || weight.dim(3) != k || k % 2 == 0) {
    throw ConfigError("conv2d: weight " + shape_string(weight.shape()) + " for input " +
                      shape_string(x.shape()));
  }
  std::vector<double> out(o * h * w);
  kernels::conv2d(x.value(), weight.value(), out, c, h, w, o, k);
  return make_result({o, h, w}, std::move(out), {x, weight}, [c, h, w, o, k](Node& self) {
    Node& in = input(self, 0);
    Node& wt = input(self, 1);
    if (in.requires_grad) kernels::conv2d_grad_input(self.grad, wt.value, in.ensure_grad(), c, h, w, o, k);
    if (wt.requires_grad) kernels::conv2d_grad_weight(in.value, self.grad, wt.ensure_grad(), c, h, w, o, k);
  });
}

Var modulate(const Var& weight, const Var& style, bool demodulate) {
  require_rank(weight, 4, "modulate");
  const std::size_t o = weight.dim(0), c = weight.dim(1), kk = weight.dim(2) * weight.dim(3);
  if (style.size() != c) throw ConfigError("modulate: style size mismatch");
  constexpr double kEps = 1e-8;
  std::vector<double> out(weight.size());
  auto inv_norm = std::make_shared<std::vector<double>>(o, 1.0);
  for (std::size_t oc = 0; oc < o; ++oc) {
    double acc = 0.0;
    for (std::size_t ic = 0; ic < c; ++ic)
      for (std::size_t t = 0; t < kk; ++t) {
        const std::size_t idx = (oc * c + ic) * kk + t;
        out[idx] = weight[idx] * style[ic];
        acc += out[idx] * out[idx];
      }
    if (demodulate) {
      (*inv_norm)[oc] = 1.0 / std::sqrt(acc + kEps);
      for (std::size_t i = 0; i < c * kk; ++i) out[oc * c * kk + i] *= (*inv_norm)[oc];
    }
  }
  return make_result(weight.shape(), std::move(out), {weight, style},
                     [o, c, kk, demodulate, inv_norm](Node& self) {
    Node& wt = input(self, 0);
    Node& st = input(self, 1);
    // m = w * s (pre-demodulation); y = m * r, r = (|m|^2 + eps)^-1/2.
    // dL/dm = r (g - y (y.g) ) for demodulated rows, g otherwise.
    std::vector<double> gm(self.grad.size());
    for (std::size_t oc = 0; oc < o; ++oc) {
      const std::size_t base = oc * c * kk;
      if (demodulate) {
        const double r = (*inv_norm)[oc];
        double yg = 0.0;
        for (std::size_t i = 0; i < c * kk; ++i) yg += self.value[base + i] * self.grad[base + i];
        for (std::size_t i = 0; i < c * kk; ++i)
          gm[base + i] = r * (self.grad[base + i] - self.value[base + i] * yg);
      } else {
        for (std::size_t i = 0; i < c * kk; ++i) gm[base + i] = self.grad[base + i];
      }
    }
    if (wt.requires_grad) {
      auto& g = wt.ensure_grad();
      for (std::size_t oc = 0; oc < o; ++oc)
        for (std::size_t ic = 0; ic < c; ++ic)
          for (std::size_t t = 0; t < kk; ++t) {
            const std::size_t idx = (oc * c + ic) * kk + t;
            g[idx] += gm[idx] * st.value[ic];
          }
    }
    if (st.requires_grad) {
      auto& g = st.ensure_grad();
      for (std::size_t oc = 0; oc < o; ++oc)
        for (std::size_t ic = 0; ic < c; ++ic)
          for (std::size_t t = 0; t < kk; ++t) {
            const std::size_t idx = (oc * c + ic) * kk + t;
            g[ic] += gm[idx] * wt.value[idx];
          }
    }
  });
}

Var resize_bilinear(const Var& x, std::size_t out_h, std::size_t out_w) {
  require_rank(x, 3, "resize_bilinear");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (out_h == h && out_w == w) return x;
  std::vector<double> out(c * out_h * out_w);
  kernels::resize_bilinear(x.value(), out, c, h, w, out_h, out_w);
  return make_result({c, out_h, out_w}, std::move(out), {x}, [c, h, w, out_h, out_w](Node& self) {
    kernels::resize_bilinear_adjoint(self.grad, input(self, 0).ensure_grad(), c, h, w, out_h, out_w);
  });
}

Var channels_to_triplanes(const Var& x, std::size_t plane_channels) {
  require_rank(x, 3, "channels_to_triplanes");
  const std::size_t r = x.dim(1);
  if (x.dim(0) != 3 * plane_channels || x.dim(2) != r) {
    throw ConfigError("channels_to_triplanes: expected [3*M,R,R], got " + shape_string(x.shape()));
  }
  const std::size_t m = plane_channels;
  std::vector<double> out(x.size());
  // plane p channel ch comes from input channel p*M + ch
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t ch = 0; ch < m; ++ch)
      for (std::size_t i = 0; i < r * r; ++i) out[(p * r * r + i) * m + ch] = x[((p * m + ch) * r * r) + i];
  return make_result({3, r, r, m}, std::move(out), {x}, [r, m](Node& self) {
    auto& g = input(self, 0).ensure_grad();
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t ch = 0; ch < m; ++ch)
        for (std::size_t i = 0; i < r * r; ++i) g[((p * m + ch) * r * r) + i] += self.grad[(p * r * r + i) * m + ch];
  });
}

namespace {

kernels::PlaneView plane_view(const Var& planes) {
  if (planes.rank() != 4 || planes.dim(0) != 3 || planes.dim(1) != planes.dim(2) || planes.dim(1) < 2) {
    throw ConfigError("tri-planes must be [3,R,R,M] with R >= 2, got " + shape_string(planes.shape()));
  }
  return {planes.value(), planes.dim(1), planes.dim(3)};
}

}  // namespace

Var sample_triplanes(const Var& planes, const Var& coords) {
  const auto view = plane_view(planes);
  require_rank(coords, 2, "sample_triplanes");
  if (coords.dim(1) != 3) throw ConfigError("sample_triplanes: coords must be [N,3]");
  const std::size_t n = coords.dim(0), m = view.channels;
  std::vector<double> out(n * m);
  kernels::sample_triplanes(view, coords.value(), out);
  return make_result({n, m}, std::move(out), {planes, coords}, [](Node& self) {
    Node& pl = input(self, 0);
    Node& co = input(self, 1);
    if (!pl.requires_grad) return;
    kernels::PlaneView view{pl.value, pl.shape[1], pl.shape[3]};
    kernels::sample_triplanes_adjoint(view, co.value, self.grad, pl.ensure_grad());
  });
}

Var render_triplanes(const Var& planes, const Var& w0, const Var& b0, const Var& w1,
                     const Var& b1, const RenderRays& rays) {
  const auto view = plane_view(planes);
  require_rank(w0, 2, "render_triplanes");
  require_rank(w1, 2, "render_triplanes");
  const std::size_t in = w0.dim(0), hidden = w0.dim(1), out_dim = w1.dim(1);
  if (in != view.channels || w1.dim(0) != hidden || b0.size() != hidden || b1.size() != out_dim ||
      out_dim < 2) {
    throw ConfigError("render_triplanes: decoder shapes do not match planes");
  }
  if (rays.n_samples < 1 || rays.origins.size() != 3 * rays.count ||
      rays.directions.size() != 3 * rays.count ||
      (!rays.jitter.empty() && rays.jitter.size() != rays.count * rays.n_samples)) {
    throw ConfigError("render_triplanes: malformed ray batch");
  }
  auto rays_copy = std::make_shared<RenderRays>(rays);
  kernels::DecoderView dec{w0.value(), b0.value(), w1.value(), b1.value(), in, hidden, out_dim};
  kernels::RaySet set{rays_copy->origins, rays_copy->directions, rays_copy->count};
  kernels::SampleSpec spec{rays.t_near, rays.t_far, rays.n_samples, rays_copy->jitter};
  const std::size_t channels = kernels::render_output_channels(dec);
  std::vector<double> out(channels * rays.count);
  const bool needs_tape = planes.requires_grad() || w0.requires_grad() || b0.requires_grad() ||
                          w1.requires_grad() || b1.requires_grad();
  auto tape = needs_tape ? std::make_shared<kernels::RenderTape>() : nullptr;
  kernels::render_rays(view, dec, set, spec, out, tape.get());
  for (double v : out) {
    if (!std::isfinite(v)) throw NumericalError("render_triplanes: non-finite decoder output");
  }
  return make_result({channels, rays.count}, std::move(out), {planes, w0, b0, w1, b1},
                     [rays_copy, tape, in, hidden, out_dim](Node& self) {
    Node& pl = input(self, 0);
    Node* dec_nodes[4] = {&input(self, 1), &input(self, 2), &input(self, 3), &input(self, 4)};
    kernels::PlaneView view{pl.value, pl.shape[1], pl.shape[3]};
    kernels::DecoderView dec{dec_nodes[0]->value, dec_nodes[1]->value, dec_nodes[2]->value,
                             dec_nodes[3]->value, in, hidden, out_dim};
    kernels::RaySet set{rays_copy->origins, rays_copy->directions, rays_copy->count};
    kernels::SampleSpec spec{rays_copy->t_near, rays_copy->t_far, rays_copy->n_samples,
                             rays_copy->jitter};
    const bool any_decoder = std::any_of(std::begin(dec_nodes), std::end(dec_nodes),
                                         [](Node* n) { return n->requires_grad; });
    std::vector<double> scratch[4];
    kernels::DecoderGrads grads;
    if (any_decoder) {
      for (int i = 0; i < 4; ++i) scratch[i].assign(dec_nodes[i]->value.size(), 0.0);
      grads = {scratch[0], scratch[1], scratch[2], scratch[3]};
    }
    std::span<double> dplanes;
    if (pl.requires_grad) dplanes = pl.ensure_grad();
    kernels::render_rays_backward(view, dec, set, spec, *tape, self.grad, dplanes, grads);
    for (int i = 0; i < 4; ++i) {
      if (!dec_nodes[i]->requires_grad) continue;
      auto& g = dec_nodes[i]->ensure_grad();
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += scratch[i][j];
    }
  });
}

}  // namespace adapter3d::ad
