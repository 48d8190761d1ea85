#include "clann/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "clann/error.hpp"

namespace clann {

namespace {

std::string vec_shape(const Vector& v) { return "vector[" + std::to_string(v.dim()) + "]"; }

void require_same_dim(const char* op, const Vector& a, const Vector& b) {
  if (a.dim() != b.dim()) {
    throw ValidationError(std::string(op) + ": dimension mismatch " + vec_shape(a) + " vs " +
                          vec_shape(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), values_(std::move(row_major)) {
  if (values_.size() != rows_ * cols_) {
    throw ValidationError("matrix " + shape() + " given " + std::to_string(values_.size()) +
                          " values");
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(n_rows * n_cols);
  for (const auto& r : rows) {
    if (r.size() != n_cols) throw ValidationError("ragged matrix literal");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Matrix(n_rows, n_cols, std::move(values));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape() const {
  return "matrix[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols() != v.dim()) {
    throw ValidationError("matvec: dimension mismatch " + m.shape() + " vs " + vec_shape(v));
  }
  Vector out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

Vector matvec_transposed(const Matrix& m, const Vector& v) {
  if (m.rows() != v.dim()) {
    throw ValidationError("matvec_transposed: dimension mismatch " + m.shape() + " vs " +
                          vec_shape(v));
  }
  Vector out(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    const double scale = v[r];
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c] * scale;
  }
  return out;
}

void add_outer(Matrix& acc, const Vector& left, const Vector& right, double scale) {
  if (acc.rows() != left.dim() || acc.cols() != right.dim()) {
    throw ValidationError("add_outer: " + acc.shape() + " vs " + vec_shape(left) + " x " +
                          vec_shape(right));
  }
  for (std::size_t r = 0; r < acc.rows(); ++r) {
    const double lr = scale * left[r];
    auto row = acc.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += lr * right[c];
  }
}

Vector concat(const Vector& a, const Vector& b) {
  std::vector<double> out;
  out.reserve(a.dim() + b.dim());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return Vector(std::move(out));
}

std::pair<Vector, Vector> split(const Vector& v, std::size_t at) {
  if (at > v.dim()) {
    throw ValidationError("split: position " + std::to_string(at) + " beyond " + vec_shape(v));
  }
  const auto& values = v.values();
  return {Vector(std::vector<double>(values.begin(), values.begin() + at)),
          Vector(std::vector<double>(values.begin() + at, values.end()))};
}

Vector relu(const Vector& v) {
  Vector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return out;
}

Vector relu_backward(const Vector& pre_activation, const Vector& upstream) {
  require_same_dim("relu_backward", pre_activation, upstream);
  Vector out(upstream.dim());
  for (std::size_t i = 0; i < upstream.dim(); ++i) {
    out[i] = pre_activation[i] > 0.0 ? upstream[i] : 0.0;
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double dot(const Vector& a, const Vector& b) {
  require_same_dim("dot", a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const Vector& v) { return std::sqrt(dot(v, v)); }

Vector hadamard(const Vector& a, const Vector& b) {
  require_same_dim("hadamard", a, b);
  Vector out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vector operator+(const Vector& a, const Vector& b) {
  require_same_dim("add", a, b);
  Vector out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector operator-(const Vector& a, const Vector& b) {
  require_same_dim("subtract", a, b);
  Vector out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector operator*(double s, const Vector& v) {
  Vector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = s * v[i];
  return out;
}

Matrix glorot_uniform_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw ValidationError("glorot_uniform_init: empty shape");
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& x : m.span()) {
    // The distribution is half-open; reject the closed end so samples stay strictly inside.
    do {
      x = dist(rng);
    } while (x <= -limit);
  }
  return m;
}

Matrix glorot_uniform_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  return glorot_uniform_init(rows, cols, rng);
}

DropoutMask sample_dropout_mask(std::size_t dim, double keep_probability, Rng& rng) {
  if (!(keep_probability > 0.0 && keep_probability <= 1.0)) {
    throw ValidationError("dropout keep probability must be in (0, 1]");
  }
  if (keep_probability == 1.0) return identity_mask(dim);
  DropoutMask mask{keep_probability, Vector(dim)};
  std::bernoulli_distribution keep(keep_probability);
  const double kept = 1.0 / keep_probability;
  for (std::size_t i = 0; i < dim; ++i) mask.scale[i] = keep(rng) ? kept : 0.0;
  return mask;
}

DropoutMask identity_mask(std::size_t dim) { return DropoutMask{1.0, Vector(dim, 1.0)}; }

Vector apply_mask(const Vector& v, const DropoutMask& mask) { return hadamard(v, mask.scale); }

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace clann
