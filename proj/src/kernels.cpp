#include "streamadapt/kernels.hpp"

namespace streamadapt::kernels {

namespace serial {

void matvec(const double* W, const double* x, const double* b, double* y,
            int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double* row = W + static_cast<std::size_t>(r) * cols;
    double acc = b ? b[r] : 0.0;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t(const double* W, const double* s, double* y, int rows, int cols) {
  // One output element per column; inner loop walks the column top-down so
  // the accumulation order matches the parallel variant exactly.
  for (int c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += W[static_cast<std::size_t>(r) * cols + c] * s[r];
    y[c] = acc;
  }
}

void outer_acc(double* G, const double* u, const double* v, double a,
               int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    double* row = G + static_cast<std::size_t>(r) * cols;
    const double ur = a * u[r];
    for (int c = 0; c < cols; ++c) row[c] += ur * v[c];
  }
}

}  // namespace serial

namespace par {

void matvec(const double* W, const double* x, const double* b, double* y,
            int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const double* row = W + static_cast<std::size_t>(r) * cols;
    double acc = b ? b[r] : 0.0;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t(const double* W, const double* s, double* y, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += W[static_cast<std::size_t>(r) * cols + c] * s[r];
    y[c] = acc;
  }
}

void outer_acc(double* G, const double* u, const double* v, double a,
               int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    double* row = G + static_cast<std::size_t>(r) * cols;
    const double ur = a * u[r];
    for (int c = 0; c < cols; ++c) row[c] += ur * v[c];
  }
}

}  // namespace par

namespace {
inline bool big(int rows, int cols) {
  return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) >= kParallelThreshold;
}
}  // namespace

void matvec(const double* W, const double* x, const double* b, double* y,
            int rows, int cols) {
  if (big(rows, cols)) par::matvec(W, x, b, y, rows, cols);
  else serial::matvec(W, x, b, y, rows, cols);
}

void matvec_t(const double* W, const double* s, double* y, int rows, int cols) {
  if (big(rows, cols)) par::matvec_t(W, s, y, rows, cols);
  else serial::matvec_t(W, s, y, rows, cols);
}

void outer_acc(double* G, const double* u, const double* v, double a,
               int rows, int cols) {
  if (big(rows, cols)) par::outer_acc(G, u, v, a, rows, cols);
  else serial::outer_acc(G, u, v, a, rows, cols);
}

}  // namespace streamadapt::kernels
