#include "tall/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "tall/errors.hpp"
#include "tall/parallel.hpp"

namespace tall {

namespace {

void check_inner(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": inner dimensions " +
                         std::to_string(a) + " vs " + std::to_string(b));
  }
}

// Panel width for the k dimension; keeps a B panel resident in L1/L2 while
// streaming rows of A.
constexpr int kPanel = 64;

}  // namespace

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols, b.rows, "matmul");
  Matrix c(a.rows, b.cols);
  const int n = b.cols;
  parallel_for(static_cast<std::size_t>(a.rows), [&](std::size_t lo, std::size_t hi) {
    for (int k0 = 0; k0 < a.cols; k0 += kPanel) {
      const int k1 = std::min(a.cols, k0 + kPanel);
      for (std::size_t i = lo; i < hi; ++i) {
        const double* arow = a.row(static_cast<int>(i));
        double* crow = c.row(static_cast<int>(i));
        for (int k = k0; k < k1; ++k) {
          const double aik = arow[k];
          const double* brow = b.row(k);
          for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
      }
    }
  }, 8);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows, b.rows, "matmul_tn");
  Matrix c(a.cols, b.cols);
  const int n = b.cols;
  // c[i,j] = sum_k a[k,i] b[k,j]; accumulate one outer product per k row.
  for (int k = 0; k < a.rows; ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (int i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = c.row(i);
      for (int j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols, b.cols, "matmul_nt");
  Matrix c(a.rows, b.rows);
  parallel_for(static_cast<std::size_t>(a.rows), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double* arow = a.row(static_cast<int>(i));
      double* crow = c.row(static_cast<int>(i));
      for (int j = 0; j < b.rows; ++j) {
        const double* brow = b.row(j);
        double s = 0.0;
        for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
        crow[j] = s;
      }
    }
  }, 8);
  return c;
}

Matrix affine_forward(const Matrix& x, const Matrix& w, const Matrix& b) {
  if (b.rows != 1 || b.cols != w.cols) {
    throw DimensionError("affine_forward: bias must be 1 x " + std::to_string(w.cols));
  }
  Matrix y = matmul(x, w);
  for (int i = 0; i < y.rows; ++i) {
    double* yrow = y.row(i);
    const double* brow = b.row(0);
    for (int j = 0; j < y.cols; ++j) yrow[j] += brow[j];
  }
  return y;
}

Matrix affine_backward(const Matrix& x, const Matrix& w, const Matrix& dy,
                       Matrix& dw, Matrix& db) {
  Matrix dwt = matmul_tn(x, dy);
  add_scaled(dw, dwt, 1.0);
  for (int i = 0; i < dy.rows; ++i) {
    const double* dyrow = dy.row(i);
    double* dbrow = db.row(0);
    for (int j = 0; j < dy.cols; ++j) dbrow[j] += dyrow[j];
  }
  return matmul_nt(dy, w);
}

void tanh_inplace(Matrix& m) {
  for (double& v : m.data) v = std::tanh(v);
}

Matrix tanh_backward(const Matrix& h, const Matrix& dh) {
  Matrix da(h.rows, h.cols);
  for (std::size_t i = 0; i < h.size(); ++i) {
    da.data[i] = dh.data[i] * (1.0 - h.data[i] * h.data[i]);
  }
  return da;
}

namespace {

void log_softmax_row(double* x, int n) {
  double m = x[0];
  for (int j = 1; j < n; ++j) m = std::max(m, x[j]);
  double sum = 0.0;
  for (int j = 0; j < n; ++j) sum += std::exp(x[j] - m);
  const double lse = m + std::log(sum);
  for (int j = 0; j < n; ++j) x[j] -= lse;
}

}  // namespace

void log_softmax_rows(Matrix& m) {
  parallel_for(static_cast<std::size_t>(m.rows), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) log_softmax_row(m.row(static_cast<int>(i)), m.cols);
  }, 32);
}

void softmax_rows(Matrix& m) {
  log_softmax_rows(m);
  for (double& v : m.data) v = std::exp(v);
}

std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (!out.empty()) log_softmax_row(out.data(), static_cast<int>(out.size()));
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

void add_scaled(Matrix& dst, const Matrix& src, double scale) {
  if (!dst.same_shape(src)) throw DimensionError("add_scaled: shape mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += scale * src.data[i];
}

}  // namespace tall
