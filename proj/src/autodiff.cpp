#include "ccdf/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "ccdf/error.hpp"

namespace ccdf::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << " x ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

void Node::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
}

Value Value::constant(Shape shape, std::vector<double> data) {
  if (numel(shape) != data.size()) {
    throw ShapeError("constant: shape " + to_string(shape) + " needs " +
                     std::to_string(numel(shape)) + " values, got " +
                     std::to_string(data.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  return Value(std::move(node));
}

Value Value::parameter(Shape shape, std::vector<double> data) {
  Value v = constant(std::move(shape), std::move(data));
  v.node_->requires_grad = true;
  return v;
}

Value Value::zeros(Shape shape, bool requires_grad) {
  const auto n = numel(shape);
  Value v = constant(std::move(shape), std::vector<double>(n, 0.0));
  v.node_->requires_grad = requires_grad;
  return v;
}

Value Value::scalar(double v) { return constant({}, {v}); }

std::span<double> Value::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

void Value::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Value::item() const {
  if (node_->data.size() != 1) {
    throw ContractError("item() on non-scalar value of shape " +
                        to_string(node_->shape));
  }
  return node_->data[0];
}

namespace {

using NodePtr = std::shared_ptr<Node>;

Value make(const char* op, Shape shape, std::vector<double> data,
           std::vector<NodePtr> parents,
           std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = std::any_of(parents.begin(), parents.end(),
                                    [](const NodePtr& p) { return p->requires_grad; });
  node->parents = std::move(parents);
  if (node->requires_grad) node->backward = std::move(backward_fn);
  return Value(std::move(node));
}

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) +
                   " and " + to_string(b));
}

void require_rank(const char* op, const Value& v, std::size_t rank) {
  if (v.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got shape " + to_string(v.shape()));
  }
}

std::size_t resolve_axis(const char* op, int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ContractError(std::string(op) + ": axis " + std::to_string(axis) +
                        " out of range for rank " + std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

// Adds `g` into parent i's gradient if that parent wants one.
inline void accumulate(Node& self, std::size_t i, std::size_t k, double g) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return;
  p.ensure_grad();
  p.grad[k] += g;
}

template <typename Fn>
Value unary(const char* op, const Value& x, Fn&& f) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return make(op, x.shape(), std::move(out), {x.node()}, nullptr);
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double counter_uniform(const DropoutKey& key, std::uint64_t index) {
  std::uint64_t h = splitmix64(key.seed);
  h = splitmix64(h ^ key.step);
  h = splitmix64(h ^ key.stream);
  h = splitmix64(h ^ index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

Value embed(std::span<const std::int32_t> ids, const Value& table) {
  require_rank("embed", table, 2);
  const std::size_t vocab = table.shape()[0];
  const std::size_t dim = table.shape()[1];
  std::vector<double> out(ids.size() * dim);
  std::vector<std::int32_t> rows(ids.begin(), ids.end());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || static_cast<std::size_t>(rows[r]) >= vocab) {
      throw ValidationError("embed: token id " + std::to_string(rows[r]) +
                            " outside vocabulary of size " + std::to_string(vocab));
    }
    const auto src = table.data().subspan(rows[r] * dim, dim);
    std::copy(src.begin(), src.end(), out.begin() + r * dim);
  }
  const std::size_t n = rows.size();
  return make("embed", {n, dim}, std::move(out), {table.node()},
              [rows = std::move(rows), dim](Node& self) {
                Node& t = *self.parents[0];
                t.ensure_grad();
                for (std::size_t r = 0; r < rows.size(); ++r) {
                  double* dst = t.grad.data() + rows[r] * dim;
                  const double* g = self.grad.data() + r * dim;
                  for (std::size_t c = 0; c < dim; ++c) dst[c] += g[c];
                }
              });
}

Value matmul(const Value& a, const Value& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) shape_mismatch("matmul", a.shape(), b.shape());
  std::vector<double> out(m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return make("matmul", {m, n}, std::move(out), {a.node(), b.node()},
              [m, k, n](Node& self) {
                Node& pa = *self.parents[0];
                Node& pb = *self.parents[1];
                const double* G = self.grad.data();
                if (pa.requires_grad) {
                  pa.ensure_grad();
                  // dA = G * B^T
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                      double acc = 0.0;
                      const double* brow = pb.data.data() + p * n;
                      const double* grow = G + i * n;
                      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                      pa.grad[i * k + p] += acc;
                    }
                }
                if (pb.requires_grad) {
                  pb.ensure_grad();
                  // dB = A^T * G
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                      const double av = pa.data[i * k + p];
                      if (av == 0.0) continue;
                      double* dst = pb.grad.data() + p * n;
                      const double* grow = G + i * n;
                      for (std::size_t j = 0; j < n; ++j) dst[j] += av * grow[j];
                    }
                }
              });
}

Value transpose(const Value& a) {
  require_rank("transpose", a, 2);
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
  return make("transpose", {c, r}, std::move(out), {a.node()}, [r, c](Node& self) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        accumulate(self, 0, i * c + j, self.grad[j * r + i]);
  });
}

Value affine(const Value& x, const Value& weight, const Value& bias) {
  require_rank("affine", weight, 2);
  require_rank("affine", bias, 1);
  const std::size_t din = weight.shape()[0], dout = weight.shape()[1];
  if (bias.shape()[0] != dout) shape_mismatch("affine", weight.shape(), bias.shape());
  const bool vector_input = x.rank() == 1;
  if (!vector_input && x.rank() != 2) {
    throw ShapeError("affine: input must be rank 1 or 2, got " + to_string(x.shape()));
  }
  const std::size_t rows = vector_input ? 1 : x.shape()[0];
  const std::size_t cols = vector_input ? x.shape()[0] : x.shape()[1];
  if (cols != din) shape_mismatch("affine", x.shape(), weight.shape());

  std::vector<double> out(rows * dout);
  const double* X = x.data().data();
  const double* W = weight.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = out.data() + i * dout;
    std::copy(bias.data().begin(), bias.data().end(), row);
    for (std::size_t p = 0; p < din; ++p) {
      const double xv = X[i * din + p];
      if (xv == 0.0) continue;
      const double* wrow = W + p * dout;
      for (std::size_t j = 0; j < dout; ++j) row[j] += xv * wrow[j];
    }
  }
  Shape shape = vector_input ? Shape{dout} : Shape{rows, dout};
  return make("affine", std::move(shape), std::move(out),
              {x.node(), weight.node(), bias.node()},
              [rows, din, dout](Node& self) {
                Node& px = *self.parents[0];
                Node& pw = *self.parents[1];
                Node& pb = *self.parents[2];
                const double* G = self.grad.data();
                if (px.requires_grad) {
                  px.ensure_grad();
                  for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t p = 0; p < din; ++p) {
                      double acc = 0.0;
                      const double* wrow = pw.data.data() + p * dout;
                      const double* grow = G + i * dout;
                      for (std::size_t j = 0; j < dout; ++j) acc += grow[j] * wrow[j];
                      px.grad[i * din + p] += acc;
                    }
                }
                if (pw.requires_grad) {
                  pw.ensure_grad();
                  for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t p = 0; p < din; ++p) {
                      const double xv = px.data[i * din + p];
                      if (xv == 0.0) continue;
                      double* dst = pw.grad.data() + p * dout;
                      const double* grow = G + i * dout;
                      for (std::size_t j = 0; j < dout; ++j) dst[j] += xv * grow[j];
                    }
                }
                if (pb.requires_grad) {
                  pb.ensure_grad();
                  for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < dout; ++j) pb.grad[j] += G[i * dout + j];
                }
              });
}

Value add(const Value& a, const Value& b) {
  if (a.shape() != b.shape()) shape_mismatch("add", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make("add", a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      accumulate(self, 0, i, self.grad[i]);
      accumulate(self, 1, i, self.grad[i]);
    }
  });
}

Value sub(const Value& a, const Value& b) {
  if (a.shape() != b.shape()) shape_mismatch("sub", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make("sub", a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      accumulate(self, 0, i, self.grad[i]);
      accumulate(self, 1, i, -self.grad[i]);
    }
  });
}

Value mul(const Value& a, const Value& b) {
  if (a.shape() != b.shape()) shape_mismatch("mul", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make("mul", a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    const auto& da = self.parents[0]->data;
    const auto& db = self.parents[1]->data;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      accumulate(self, 0, i, self.grad[i] * db[i]);
      accumulate(self, 1, i, self.grad[i] * da[i]);
    }
  });
}

Value scale(const Value& a, double factor) {
  return make("scale", a.shape(),
              [&] {
                std::vector<double> out(a.size());
                for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
                return out;
              }(),
              {a.node()}, [factor](Node& self) {
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                  accumulate(self, 0, i, self.grad[i] * factor);
              });
}

Value add_scalar(const Value& a, double offset) {
  Value v = unary("add_scalar", a, [offset](double x) { return x + offset; });
  if (v.requires_grad()) {
    v.node()->backward = [](Node& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        accumulate(self, 0, i, self.grad[i]);
    };
  }
  return v;
}

Value tanh(const Value& x) {
  Value v = unary("tanh", x, [](double z) { return std::tanh(z); });
  if (v.requires_grad()) {
    v.node()->backward = [](Node& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double t = self.data[i];
        accumulate(self, 0, i, self.grad[i] * (1.0 - t * t));
      }
    };
  }
  return v;
}

Value log(const Value& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) {
      throw DomainError("log: entry " + std::to_string(i) + " is non-positive (" +
                        std::to_string(x[i]) + ")");
    }
  }
  Value v = unary("log", x, [](double z) { return std::log(z); });
  if (v.requires_grad()) {
    v.node()->backward = [](Node& self) {
      const auto& in = self.parents[0]->data;
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        accumulate(self, 0, i, self.grad[i] / in[i]);
    };
  }
  return v;
}

Value clamp_min(const Value& x, double lo) {
  Value v = unary("clamp_min", x, [lo](double z) { return z > lo ? z : lo; });
  if (v.requires_grad()) {
    v.node()->backward = [lo](Node& self) {
      const auto& in = self.parents[0]->data;
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (in[i] > lo) accumulate(self, 0, i, self.grad[i]);
    };
  }
  return v;
}

Value softmax(const Value& x, int axis, std::span<const std::uint8_t> mask) {
  if (x.rank() != 1 && x.rank() != 2) {
    throw ShapeError("softmax: expected rank 1 or 2, got " + to_string(x.shape()));
  }
  const std::size_t ax = resolve_axis("softmax", axis, x.rank());
  const std::size_t rows = x.rank() == 1 ? 1 : x.shape()[0];
  const std::size_t cols = x.rank() == 1 ? x.shape()[0] : x.shape()[1];
  // Iterate slices along `ax`: `slices` independent groups of `len` entries
  // separated by `stride`.
  const bool along_cols = x.rank() == 1 || ax == 1;
  const std::size_t len = along_cols ? cols : rows;
  const std::size_t slices = along_cols ? rows : cols;
  const std::size_t stride = along_cols ? 1 : cols;
  const std::size_t step = along_cols ? cols : 1;
  if (!mask.empty() && mask.size() != len) {
    throw ShapeError("softmax: mask of length " + std::to_string(mask.size()) +
                     " does not match axis length " + std::to_string(len) + " of " +
                     to_string(x.shape()));
  }
  std::vector<std::uint8_t> active(len, 1);
  if (!mask.empty()) std::copy(mask.begin(), mask.end(), active.begin());
  if (std::none_of(active.begin(), active.end(), [](auto m) { return m != 0; })) {
    throw ContractError("softmax: every position along the axis is masked");
  }

  std::vector<double> out(x.size(), 0.0);
  for (std::size_t s = 0; s < slices; ++s) {
    const std::size_t base = s * step;
    double mx = -INFINITY;
    for (std::size_t i = 0; i < len; ++i)
      if (active[i]) mx = std::max(mx, x[base + i * stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      if (!active[i]) continue;
      const double e = std::exp(x[base + i * stride] - mx);
      out[base + i * stride] = e;
      total += e;
    }
    for (std::size_t i = 0; i < len; ++i) out[base + i * stride] /= total;
  }
  return make("softmax", x.shape(), std::move(out), {x.node()},
              [slices, len, stride, step](Node& self) {
                for (std::size_t s = 0; s < slices; ++s) {
                  const std::size_t base = s * step;
                  double dot = 0.0;
                  for (std::size_t i = 0; i < len; ++i) {
                    const auto k = base + i * stride;
                    dot += self.data[k] * self.grad[k];
                  }
                  for (std::size_t i = 0; i < len; ++i) {
                    const auto k = base + i * stride;
                    accumulate(self, 0, k, self.data[k] * (self.grad[k] - dot));
                  }
                }
              });
}

Value mean_pool(const Value& x, std::span<const std::uint8_t> mask, int axis) {
  require_rank("mean_pool", x, 2);
  const std::size_t ax = resolve_axis("mean_pool", axis, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  const std::size_t len = ax == 0 ? rows : cols;
  const std::size_t width = ax == 0 ? cols : rows;
  if (!mask.empty() && mask.size() != len) {
    throw ShapeError("mean_pool: mask of length " + std::to_string(mask.size()) +
                     " does not match pooled axis of " + to_string(x.shape()));
  }
  std::vector<std::uint8_t> active(len, 1);
  if (!mask.empty()) std::copy(mask.begin(), mask.end(), active.begin());
  const auto count = static_cast<std::size_t>(
      std::count_if(active.begin(), active.end(), [](auto m) { return m != 0; }));
  if (count == 0) throw ContractError("mean_pool: no active position to pool over");
  const double inv = 1.0 / static_cast<double>(count);

  auto index = [ax, cols](std::size_t pooled, std::size_t kept) {
    return ax == 0 ? pooled * cols + kept : kept * cols + pooled;
  };
  std::vector<double> out(width, 0.0);
  for (std::size_t p = 0; p < len; ++p) {
    if (!active[p]) continue;
    for (std::size_t k = 0; k < width; ++k) out[k] += x[index(p, k)];
  }
  for (auto& v : out) v *= inv;
  return make("mean_pool", {width}, std::move(out), {x.node()},
              [active = std::move(active), len, width, inv, index](Node& self) {
                for (std::size_t p = 0; p < len; ++p) {
                  if (!active[p]) continue;
                  for (std::size_t k = 0; k < width; ++k)
                    accumulate(self, 0, index(p, k), self.grad[k] * inv);
                }
              });
}

Value mask_rows(const Value& x, std::span<const std::uint8_t> mask) {
  require_rank("mask_rows", x, 2);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (mask.size() != rows) {
    throw ShapeError("mask_rows: mask of length " + std::to_string(mask.size()) +
                     " for " + to_string(x.shape()));
  }
  std::vector<std::uint8_t> keep(mask.begin(), mask.end());
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    if (keep[r])
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x[r * cols + c];
  return make("mask_rows", x.shape(), std::move(out), {x.node()},
              [keep = std::move(keep), cols](Node& self) {
                for (std::size_t r = 0; r < keep.size(); ++r)
                  if (keep[r])
                    for (std::size_t c = 0; c < cols; ++c)
                      accumulate(self, 0, r * cols + c, self.grad[r * cols + c]);
              });
}

Value dropout(const Value& x, double p, bool training, DropoutKey key) {
  if (p < 0.0 || p >= 1.0) {
    throw ContractError("dropout: probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> factor(x.size());
  for (std::size_t i = 0; i < factor.size(); ++i)
    factor[i] = counter_uniform(key, i) < p ? 0.0 : keep_scale;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor[i];
  return make("dropout", x.shape(), std::move(out), {x.node()},
              [factor = std::move(factor)](Node& self) {
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                  if (factor[i] != 0.0) accumulate(self, 0, i, self.grad[i] * factor[i]);
              });
}

Value stop_gradient(const Value& x) {
  auto node = std::make_shared<Node>();
  node->op = "stop_gradient";
  node->shape = x.shape();
  node->data.assign(x.data().begin(), x.data().end());
  node->parents = {x.node()};
  node->stop_grad = true;
  return Value(std::move(node));
}

Value sum(const Value& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make("sum", {}, {total}, {x.node()}, [](Node& self) {
    const std::size_t n = self.parents[0]->data.size();
    for (std::size_t i = 0; i < n; ++i) accumulate(self, 0, i, self.grad[0]);
  });
}

Value select(const Value& x, std::size_t index) {
  if (index >= x.size()) {
    throw ShapeError("select: index " + std::to_string(index) + " outside " +
                     to_string(x.shape()));
  }
  return make("select", {}, {x[index]}, {x.node()}, [index](Node& self) {
    accumulate(self, 0, index, self.grad[0]);
  });
}

Value cross_entropy(const Value& logits, int label) {
  require_rank("cross_entropy", logits, 1);
  const std::size_t n = logits.size();
  if (label < 0 || static_cast<std::size_t>(label) >= n) {
    throw ValidationError("cross_entropy: label " + std::to_string(label) +
                        " outside [0, " + std::to_string(n) + ")");
  }
  double mx = -INFINITY;
  for (double v : logits.data()) mx = std::max(mx, v);
  double total = 0.0;
  for (double v : logits.data()) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  return make("cross_entropy", {}, {lse - logits[label]}, {logits.node()},
              [label, lse](Node& self) {
                const auto& z = self.parents[0]->data;
                for (std::size_t i = 0; i < z.size(); ++i) {
                  double g = std::exp(z[i] - lse);
                  if (static_cast<int>(i) == label) g -= 1.0;
                  accumulate(self, 0, i, self.grad[0] * g);
                }
              });
}

void backward(const Value& loss) {
  if (!loss) throw ContractError("backward: empty value");
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; parents of stop_grad nodes are never entered.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (!node->stop_grad && next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  for (Node* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->data.size(), 0.0);
  }
  Node* root = loss.node().get();
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->stop_grad) node->backward(*node);
  }
}

}  // namespace ccdf::ad
