#include <limits>

#include "planex/simd/kernels.hpp"

namespace planex::simd {

namespace {

std::size_t min_width_window_scalar(const double* x, std::size_t n, std::size_t k) {
    double best_width = std::numeric_limits<double>::infinity();
    std::size_t best_start = 0;
    for (std::size_t i = 0; i + k <= n; ++i) {
        const double width = x[i + k - 1] - x[i];
        if (width < best_width) {
            best_width = width;
            best_start = i;
        }
    }
    return best_start;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

CentralMoments central_moments_scalar(const double* x, std::size_t n, double mean) {
    CentralMoments m;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mean;
        m.m2 += d * d;
        m.m3 += d * d * d;
    }
    return m;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{Isa::scalar, min_width_window_scalar, dot_scalar, sum_scalar,
                                   central_moments_scalar};
    return table;
}

}  // namespace planex::simd
