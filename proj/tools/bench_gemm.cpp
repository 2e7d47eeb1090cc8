// Micro-benchmark for the dense kernels the trainer spends its time in.
#include <chrono>
#include <cstdio>

#include "tall/matrix.hpp"
#include "tall/rng.hpp"

using namespace tall;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

void bench(int n, int k, int m, int reps) {
  Rng rng(7);
  const Matrix a = random_matrix(n, k, rng);
  const Matrix b = random_matrix(k, m, rng);
  Matrix c;
  // warm-up
  c = matmul(a, b);
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) c = matmul(a, b);
  const auto t1 = std::chrono::steady_clock::now();
  const double secs = std::chrono::duration<double>(t1 - t0).count();
  const double flops = 2.0 * n * k * m * reps;
  std::printf("matmul %4d x %4d x %4d: %7.3f ms/iter, %6.2f Gflop/s\n", n, k, m,
              secs / reps * 1e3, flops / secs / 1e9);
}

}  // namespace

int main() {
  bench(64, 200, 100, 200);
  bench(64, 100, 200, 200);
  bench(128, 600, 200, 100);
  bench(256, 512, 512, 20);
  bench(512, 512, 512, 10);
  return 0;
}
