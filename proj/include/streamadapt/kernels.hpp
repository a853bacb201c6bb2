// Dense kernels behind the model's forward/backward passes. Each kernel has
// a serial reference implementation and an OpenMP variant that parallelizes
// over disjoint output rows only, so both produce bit-identical results:
// every output element is accumulated in the same order either way. The
// dispatch entry points switch on problem size.
#pragma once

#include <cstddef>

namespace streamadapt::kernels {

namespace serial {
// y = W x (+ b); W is row-major rows x cols. b may be null.
void matvec(const double* W, const double* x, const double* b, double* y,
            int rows, int cols);
// y = W^T s; y has cols entries.
void matvec_t(const double* W, const double* s, double* y, int rows, int cols);
// G += a * (u outer v); G is rows x cols.
void outer_acc(double* G, const double* u, const double* v, double a,
               int rows, int cols);
}  // namespace serial

namespace par {
void matvec(const double* W, const double* x, const double* b, double* y,
            int rows, int cols);
void matvec_t(const double* W, const double* s, double* y, int rows, int cols);
void outer_acc(double* G, const double* u, const double* v, double a,
               int rows, int cols);
}  // namespace par

// Problems below this element count run the serial path; the switch never
// changes results, only scheduling.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

void matvec(const double* W, const double* x, const double* b, double* y,
            int rows, int cols);
void matvec_t(const double* W, const double* s, double* y, int rows, int cols);
void outer_acc(double* G, const double* u, const double* v, double a,
               int rows, int cols);

}  // namespace streamadapt::kernels
