#pragma once

// Dense-layer kernels. Matrices are row-major: x is n x in, w is in x out,
// y and dy are n x out. Bias spans may be empty (layer without bias).
//
// `serial` is the reference implementation. The default (OpenMP) versions
// partition output rows across threads but keep every element's
// accumulation order, so both produce bitwise-identical results.

#include <cstddef>
#include <span>

namespace gramevo::kernels {

struct Shape {
    std::size_t rows = 0;     // batch size
    std::size_t inputs = 0;
    std::size_t outputs = 0;
};

/// y = x * w + b
void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> b, std::span<double> y,
                   Shape s);

/// dw = x^T dy, db = column sums of dy, dx = dy w^T (dx may be empty).
void dense_backward(std::span<const double> x, std::span<const double> w, std::span<const double> dy,
                    std::span<double> dx, std::span<double> dw, std::span<double> db, Shape s);

namespace serial {

void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> b, std::span<double> y,
                   Shape s);

void dense_backward(std::span<const double> x, std::span<const double> w, std::span<const double> dy,
                    std::span<double> dx, std::span<double> dw, std::span<double> db, Shape s);

}  // namespace serial

/// Work (multiply-adds) below which the parallel kernels stay on one thread.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

}  // namespace gramevo::kernels
