#pragma once

// Dense double-precision vectors and matrices with the handful of kernels the
// network needs. Everything that touches raw arrays lives here.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace clann {

using Rng = std::mt19937_64;

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit Vector(std::vector<double> values) : values_(std::move(values)) {}
  Vector(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> values_;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  // Throws ValidationError unless values.size() == rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  std::string shape() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Inverted dropout: kept units carry 1/keep_probability, dropped units 0.
struct DropoutMask {
  double keep_probability = 1.0;
  Vector scale;

  std::size_t dim() const { return scale.dim(); }
};

Vector matvec(const Matrix& m, const Vector& v);
// mᵀ·v, used to push gradients back through a linear layer.
Vector matvec_transposed(const Matrix& m, const Vector& v);
// acc += scale · left ⊗ right
void add_outer(Matrix& acc, const Vector& left, const Vector& right, double scale = 1.0);

Vector concat(const Vector& a, const Vector& b);
std::pair<Vector, Vector> split(const Vector& v, std::size_t at);

Vector relu(const Vector& v);
// upstream ⊙ 1[pre_activation > 0]; the derivative at exactly 0 is taken as 0.
Vector relu_backward(const Vector& pre_activation, const Vector& upstream);

double sigmoid(double x);
// ln(1 + e^x) without overflow.
double softplus(double x);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& v);
Vector hadamard(const Vector& a, const Vector& b);
Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator*(double s, const Vector& v);

Matrix glorot_uniform_init(std::size_t rows, std::size_t cols, Rng& rng);
Matrix glorot_uniform_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

DropoutMask sample_dropout_mask(std::size_t dim, double keep_probability, Rng& rng);
DropoutMask identity_mask(std::size_t dim);
Vector apply_mask(const Vector& v, const DropoutMask& mask);

bool all_finite(std::span<const double> values);

}  // namespace clann
