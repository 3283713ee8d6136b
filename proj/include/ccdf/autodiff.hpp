#pragma once

// Reverse-mode differentiation over small dense float64 arrays.
//
// Every op returns a new Value whose node records its parents and a closure
// that pushes the node's gradient back into them. backward() walks the record
// in reverse topological order. Nodes flagged stop_grad act as leaves during
// that walk, so nothing upstream of them receives gradient through them.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ccdf::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first needed
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  const char* op = "leaf";
  bool requires_grad = false;
  bool stop_grad = false;

  bool is_leaf() const { return parents.empty(); }
  void ensure_grad();
};

class Value {
 public:
  Value() = default;
  explicit Value(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Value constant(Shape shape, std::vector<double> data);
  static Value parameter(Shape shape, std::vector<double> data);
  static Value zeros(Shape shape, bool requires_grad = false);
  static Value scalar(double v);

  explicit operator bool() const { return static_cast<bool>(node_); }

  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->data.size(); }
  std::size_t rank() const { return node_->shape.size(); }

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad();
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  bool requires_grad() const { return node_->requires_grad; }
  bool stop_grad() const { return node_->stop_grad; }
  const char* op() const { return node_->op; }

  double item() const;
  double operator[](std::size_t i) const { return node_->data[i]; }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Keys the counter-based dropout stream; the same key always yields the
// same mask.
struct DropoutKey {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t stream = 0;
};

// Forward ops. Shapes are row-major; 2-D arrays are [rows x cols].
Value embed(std::span<const std::int32_t> ids, const Value& table);
Value matmul(const Value& a, const Value& b);
Value transpose(const Value& a);
Value affine(const Value& x, const Value& weight, const Value& bias);
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value scale(const Value& a, double factor);
Value add_scalar(const Value& a, double offset);
Value tanh(const Value& x);
Value log(const Value& x);
Value clamp_min(const Value& x, double lo);
// mask (optional) has one entry per position along `axis`; masked positions
// get probability 0.
Value softmax(const Value& x, int axis = -1,
              std::span<const std::uint8_t> mask = {});
Value mean_pool(const Value& x, std::span<const std::uint8_t> mask,
                int axis = 0);
Value mask_rows(const Value& x, std::span<const std::uint8_t> mask);
Value dropout(const Value& x, double p, bool training, DropoutKey key);
Value stop_gradient(const Value& x);
Value sum(const Value& x);
Value select(const Value& x, std::size_t index);
Value cross_entropy(const Value& logits, int label);

// Accumulates d(loss)/d(leaf) into every reachable leaf that requires grad.
void backward(const Value& loss);

}  // namespace ccdf::ad
