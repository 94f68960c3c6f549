#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "smoothrace/real.hpp"

namespace smoothrace::nn {

/// Dense row-major array of Real with an explicit shape.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<Real> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, Real fill = Real(0));

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  bool empty() const { return values.empty(); }

  Real* data() { return values.data(); }
  const Real* data() const { return values.data(); }
  std::span<Real> span() { return values; }
  std::span<const Real> span() const { return values; }

  Real& operator[](std::size_t i) { return values[i]; }
  Real operator[](std::size_t i) const { return values[i]; }

  /// Row i of a tensor viewed as [dim(0), size/dim(0)].
  std::span<Real> row(std::size_t i);
  std::span<const Real> row(std::size_t i) const;

  void fill(Real v);
  /// Throws NumericError naming `where` if any value is NaN or infinite.
  void check_finite(const std::string& where) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);
void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what);

}  // namespace smoothrace::nn
