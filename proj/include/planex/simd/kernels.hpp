#pragma once

// Data-parallel inner loops used by the statistics and metric code.
//
// Every kernel has a scalar reference implementation; AVX2 (x86-64) and NEON
// (aarch64) variants are compiled when the target allows it and selected at
// runtime. PLANEX_SIMD=scalar|avx2|neon in the environment forces a variant.
//
// min_width_window is exact: all variants return the same index. The
// floating-point reductions may differ from the scalar path in the last few
// ulps because of summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace planex::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

struct CentralMoments {
    double m2 = 0.0;  // sum of squared deviations
    double m3 = 0.0;  // sum of cubed deviations
};

struct KernelTable {
    Isa isa;
    // First index i minimising sorted[i + k - 1] - sorted[i], 0 <= i <= n - k.
    std::size_t (*min_width_window)(const double* sorted, std::size_t n, std::size_t k);
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    CentralMoments (*central_moments)(const double* x, std::size_t n, double mean);
};

const KernelTable& scalar_kernels();
// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// Best available table, or the one forced through PLANEX_SIMD.
const KernelTable& active();

// Precondition for all wrappers: sizes match, 1 <= k <= size.
std::size_t min_width_window(std::span<const double> sorted, std::size_t k);
double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> x);
CentralMoments central_moments(std::span<const double> x, double mean);

}  // namespace planex::simd
