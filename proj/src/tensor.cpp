#include "tcas/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tcas/error.hpp"

namespace tcas::nd {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_extents(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor needs at least one extent");
  for (auto e : shape)
    if (e == 0) throw DimensionError("zero extent in shape " + shape_str(shape));
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (data_.size() != shape_size(shape_))
    throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_str(shape_));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) { return Tensor({values.size()}, std::vector<double>(values)); }

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const { return rank() == 1 ? 1 : shape_.front(); }

std::size_t Tensor::cols() const { return shape_.back(); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != size())
    throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("item() on tensor of shape " + shape_str(shape_));
  return data_.front();
}

void Param::zero_grad() { grad = Tensor(value.shape()); }

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite constant");
  nodes_.push_back(Node{std::move(value), {}, nullptr, {}, {}, false});
  return {this, nodes_.size() - 1};
}

Var Tape::param(Param& p) {
  nodes_.push_back(Node{p.value, {}, &p, {}, {}, true});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError("op produced a non-finite value");
  bool needs = false;
  for (auto in : inputs) needs = needs || nodes_.at(in).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, nullptr, std::move(inputs), needs ? std::move(backward) : BackwardFn{}, needs});
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw UsageError("loss belongs to another tape");
  if (loss.value().size() != 1) throw UsageError("backward() needs a scalar loss, got " + shape_str(loss.shape()));
  const std::size_t root = loss.id();
  for (std::size_t i = 0; i <= root; ++i)
    nodes_[i].grad = nodes_[i].requires_grad ? Tensor(nodes_[i].value.shape()) : Tensor{};
  if (!nodes_[root].requires_grad) return;
  nodes_[root].grad[0] = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad) continue;
    if (node.backward) node.backward(*this, i);
    if (node.param) {
      if (node.param->grad.shape() != node.value.shape()) node.param->grad = Tensor(node.value.shape());
      auto dst = node.param->grad.data();
      auto src = node.grad.data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
}

}  // namespace tcas::nd
