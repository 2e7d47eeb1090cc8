#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tall {

// Dense row-major matrix of doubles. All model state and batched activations
// use this one type; biases are 1 x n.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

  std::span<double> row_span(int r) { return {row(r), static_cast<std::size_t>(cols)}; }
  std::span<const double> row_span(int r) const { return {row(r), static_cast<std::size_t>(cols)}; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  bool all_finite() const;
};

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B  (a: k x m, b: k x n -> m x n); the backward dW = X^T dY shape
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// C = A * B^T  (a: m x k, b: n x k -> m x n); the backward dX = dY W^T shape
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Y = X W + b with b broadcast over rows. b must be 1 x W.cols.
Matrix affine_forward(const Matrix& x, const Matrix& w, const Matrix& b);
// Given cached x and upstream dY, accumulates dW += x^T dY, db += colsum(dY)
// and returns dX = dY W^T.
Matrix affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy,
                       Matrix& dw, Matrix& db);

void tanh_inplace(Matrix& m);
// dA = dH .* (1 - H.^2) where H is the activated output
Matrix tanh_backward(const Matrix& h, const Matrix& dh);

// Stable row-wise softmax / log-softmax (max subtraction).
void softmax_rows(Matrix& m);
void log_softmax_rows(Matrix& m);
std::vector<double> log_softmax(std::span<const double> logits);
std::vector<double> softmax(std::span<const double> logits);

void add_scaled(Matrix& dst, const Matrix& src, double scale);

}  // namespace tall
