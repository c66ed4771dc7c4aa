// aarch64 only; Advanced SIMD is part of the base ISA there.

#include <arm_neon.h>

#include <limits>

#include "planex/simd/kernels.hpp"

namespace planex::simd::neon {

namespace {

std::size_t min_width_window(const double* x, std::size_t n, std::size_t k) {
    const std::size_t windows = n - k + 1;
    std::size_t i = 0;

    double best_width = std::numeric_limits<double>::infinity();
    std::size_t best_start = 0;

    if (windows >= 2) {
        float64x2_t best = vdupq_n_f64(std::numeric_limits<double>::infinity());
        float64x2_t best_idx = vdupq_n_f64(0.0);
        const double init[2] = {0.0, 1.0};
        float64x2_t idx = vld1q_f64(init);
        const float64x2_t step = vdupq_n_f64(2.0);
        for (; i + 2 <= windows; i += 2) {
            const float64x2_t width = vsubq_f64(vld1q_f64(x + i + k - 1), vld1q_f64(x + i));
            const uint64x2_t lt = vcltq_f64(width, best);
            best = vbslq_f64(lt, width, best);
            best_idx = vbslq_f64(lt, idx, best_idx);
            idx = vaddq_f64(idx, step);
        }
        double widths[2];
        double starts[2];
        vst1q_f64(widths, best);
        vst1q_f64(starts, best_idx);
        best_width = widths[0];
        best_start = static_cast<std::size_t>(starts[0]);
        const auto s = static_cast<std::size_t>(starts[1]);
        if (widths[1] < best_width || (widths[1] == best_width && s < best_start)) {
            best_width = widths[1];
            best_start = s;
        }
    }
    for (; i < windows; ++i) {
        const double width = x[i + k - 1] - x[i];
        if (width < best_width) {
            best_width = width;
            best_start = i;
        }
    }
    return best_start;
}

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* x, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
        acc1 = vaddq_f64(acc1, vld1q_f64(x + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

CentralMoments central_moments(const double* x, std::size_t n, double mean) {
    const float64x2_t mu = vdupq_n_f64(mean);
    float64x2_t acc2 = vdupq_n_f64(0.0);
    float64x2_t acc3 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(x + i), mu);
        const float64x2_t d2 = vmulq_f64(d, d);
        acc2 = vaddq_f64(acc2, d2);
        acc3 = vfmaq_f64(acc3, d2, d);
    }
    CentralMoments m{vaddvq_f64(acc2), vaddvq_f64(acc3)};
    for (; i < n; ++i) {
        const double d = x[i] - mean;
        m.m2 += d * d;
        m.m3 += d * d * d;
    }
    return m;
}

}  // namespace

const KernelTable& table() {
    static const KernelTable t{Isa::neon, min_width_window, dot, sum, central_moments};
    return t;
}

}  // namespace planex::simd::neon
