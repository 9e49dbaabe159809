#include "gramevo/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace gramevo::kernels {

namespace {

inline void forward_row(const double* x, const double* w, std::span<const double> b, double* y, const Shape& s) {
    if (b.empty())
        std::fill(y, y + s.outputs, 0.0);
    else
        std::copy(b.begin(), b.end(), y);
    for (std::size_t k = 0; k < s.inputs; ++k) {
        const double xk = x[k];
        const double* wk = w + k * s.outputs;
        for (std::size_t o = 0; o < s.outputs; ++o) y[o] += xk * wk[o];
    }
}

inline void weight_grad_row(std::size_t k, const double* x, const double* dy, double* dw, const Shape& s) {
    double* row = dw + k * s.outputs;
    std::fill(row, row + s.outputs, 0.0);
    for (std::size_t i = 0; i < s.rows; ++i) {
        const double xik = x[i * s.inputs + k];
        const double* dyi = dy + i * s.outputs;
        for (std::size_t o = 0; o < s.outputs; ++o) row[o] += xik * dyi[o];
    }
}

inline void input_grad_row(std::size_t i, const double* w, const double* dy, double* dx, const Shape& s) {
    const double* dyi = dy + i * s.outputs;
    for (std::size_t k = 0; k < s.inputs; ++k) {
        const double* wk = w + k * s.outputs;
        double acc = 0;
        for (std::size_t o = 0; o < s.outputs; ++o) acc += dyi[o] * wk[o];
        dx[i * s.inputs + k] = acc;
    }
}

inline void bias_grad(const double* dy, std::span<double> db, const Shape& s) {
    std::fill(db.begin(), db.end(), 0.0);
    for (std::size_t i = 0; i < s.rows; ++i)
        for (std::size_t o = 0; o < s.outputs; ++o) db[o] += dy[i * s.outputs + o];
}

inline bool go_parallel(const Shape& s) { return s.rows * s.inputs * s.outputs >= kParallelThreshold; }

}  // namespace

namespace serial {

void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> b, std::span<double> y,
                   Shape s) {
    for (std::size_t i = 0; i < s.rows; ++i) forward_row(x.data() + i * s.inputs, w.data(), b, y.data() + i * s.outputs, s);
}

void dense_backward(std::span<const double> x, std::span<const double> w, std::span<const double> dy,
                    std::span<double> dx, std::span<double> dw, std::span<double> db, Shape s) {
    for (std::size_t k = 0; k < s.inputs; ++k) weight_grad_row(k, x.data(), dy.data(), dw.data(), s);
    if (!db.empty()) bias_grad(dy.data(), db, s);
    if (!dx.empty())
        for (std::size_t i = 0; i < s.rows; ++i) input_grad_row(i, w.data(), dy.data(), dx.data(), s);
}

}  // namespace serial

void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> b, std::span<double> y,
                   Shape s) {
    const auto rows = static_cast<std::int64_t>(s.rows);
#pragma omp parallel for schedule(static) if (go_parallel(s))
    for (std::int64_t i = 0; i < rows; ++i) {
        const auto r = static_cast<std::size_t>(i);
        forward_row(x.data() + r * s.inputs, w.data(), b, y.data() + r * s.outputs, s);
    }
}

void dense_backward(std::span<const double> x, std::span<const double> w, std::span<const double> dy,
                    std::span<double> dx, std::span<double> dw, std::span<double> db, Shape s) {
    const auto inputs = static_cast<std::int64_t>(s.inputs);
    const auto rows = static_cast<std::int64_t>(s.rows);
    const bool parallel = go_parallel(s);
#pragma omp parallel if (parallel)
    {
#pragma omp for schedule(static)
        for (std::int64_t k = 0; k < inputs; ++k) weight_grad_row(static_cast<std::size_t>(k), x.data(), dy.data(), dw.data(), s);
        if (!dx.empty()) {
#pragma omp for schedule(static)
            for (std::int64_t i = 0; i < rows; ++i) input_grad_row(static_cast<std::size_t>(i), w.data(), dy.data(), dx.data(), s);
        }
    }
    if (!db.empty()) bias_grad(dy.data(), db, s);
}

}  // namespace gramevo::kernels
