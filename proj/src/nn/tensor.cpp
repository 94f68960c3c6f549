#include "smoothrace/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "smoothrace/error.hpp"

namespace smoothrace::nn {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> dims, Real fill)
    : shape(std::move(dims)), values(shape_product(shape), fill) {}

std::span<Real> Tensor::row(std::size_t i) {
  const std::size_t stride = values.size() / shape.at(0);
  return std::span<Real>(values).subspan(i * stride, stride);
}

std::span<const Real> Tensor::row(std::size_t i) const {
  const std::size_t stride = values.size() / shape.at(0);
  return std::span<const Real>(values).subspan(i * stride, stride);
}

void Tensor::fill(Real v) { std::fill(values.begin(), values.end(), v); }

void Tensor::check_finite(const std::string& where) const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw NumericError("non-finite value at index " + std::to_string(i) + " in " + where);
}

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
  if (a.shape != b.shape)
    throw ShapeError(what + ": shape " + shape_string(a.shape) + " vs " + shape_string(b.shape));
}

}  // namespace smoothrace::nn
