#pragma once

// Dense 64-bit tensors and the reverse-mode tape that differentiates them.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tcas::nd {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Row-major dense array of doubles. Extents are all positive.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  /// Builds a rows×cols matrix from nested lists.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  /// Leading extent of a matrix (1 for a vector).
  std::size_t rows() const;
  /// Trailing extent.
  std::size_t cols() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  /// Same data, new extents of equal product.
  Tensor reshaped(Shape shape) const;
  bool all_finite() const;
  double item() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// A named learnable (or buffer) tensor with its accumulated gradient.
struct Param {
  Param() = default;
  Param(std::string name_, Tensor value_) : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad();
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Ordered record of ops. Nodes are appended in evaluation order, so the
/// vector itself is a topological order and backward walks it in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a Param; backward accumulates into param.grad.
  Var param(Param& param);
  /// Records an op output. Throws NumericError if value is not finite.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  /// Reverse sweep from a scalar; adds the result into every bound Param::grad.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  /// Gradient buffer of a node; only valid during backward().
  Tensor& grad(std::size_t id) { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Param* param = nullptr;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

}  // namespace tcas::nd
