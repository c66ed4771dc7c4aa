// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <limits>

#include "planex/simd/kernels.hpp"

namespace planex::simd::avx2 {

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

std::size_t min_width_window(const double* x, std::size_t n, std::size_t k) {
    const std::size_t windows = n - k + 1;
    std::size_t i = 0;

    double best_width = std::numeric_limits<double>::infinity();
    std::size_t best_start = 0;

    if (windows >= 4) {
        // Each lane keeps its own leftmost minimum (strict <); indices are
        // carried as doubles, exact below 2^53.
        __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
        __m256d best_idx = _mm256_setzero_pd();
        __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
        const __m256d step = _mm256_set1_pd(4.0);
        for (; i + 4 <= windows; i += 4) {
            const __m256d lo = _mm256_loadu_pd(x + i);
            const __m256d hi = _mm256_loadu_pd(x + i + k - 1);
            const __m256d width = _mm256_sub_pd(hi, lo);
            const __m256d lt = _mm256_cmp_pd(width, best, _CMP_LT_OQ);
            best = _mm256_blendv_pd(best, width, lt);
            best_idx = _mm256_blendv_pd(best_idx, idx, lt);
            idx = _mm256_add_pd(idx, step);
        }
        alignas(32) double widths[4];
        alignas(32) double starts[4];
        _mm256_store_pd(widths, best);
        _mm256_store_pd(starts, best_idx);
        best_width = widths[0];
        best_start = static_cast<std::size_t>(starts[0]);
        for (int lane = 1; lane < 4; ++lane) {
            const auto s = static_cast<std::size_t>(starts[lane]);
            if (widths[lane] < best_width || (widths[lane] == best_width && s < best_start)) {
                best_width = widths[lane];
                best_start = s;
            }
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
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

CentralMoments central_moments(const double* x, std::size_t n, double mean) {
    const __m256d mu = _mm256_set1_pd(mean);
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), mu);
        const __m256d d2 = _mm256_mul_pd(d, d);
        acc2 = _mm256_add_pd(acc2, d2);
        acc3 = _mm256_fmadd_pd(d2, d, acc3);
    }
    CentralMoments m{hsum(acc2), hsum(acc3)};
    for (; i < n; ++i) {
        const double d = x[i] - mean;
        m.m2 += d * d;
        m.m3 += d * d * d;
    }
    return m;
}

}  // namespace

const KernelTable& table() {
    static const KernelTable t{Isa::avx2, min_width_window, dot, sum, central_moments};
    return t;
}

}  // namespace planex::simd::avx2
