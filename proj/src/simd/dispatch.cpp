#include <cassert>
#include <cstdlib>
#include <string_view>

#include "planex/simd/kernels.hpp"

namespace planex::simd {

#if defined(PLANEX_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif
#if defined(PLANEX_HAVE_NEON)
namespace neon {
const KernelTable& table();
}
#endif

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "?";
}

const KernelTable* avx2_kernels() {
#if defined(PLANEX_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2::table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(PLANEX_HAVE_NEON)
    return &neon::table();
#else
    return nullptr;
#endif
}

namespace {

const KernelTable& select() {
    std::string_view forced;
    if (const char* env = std::getenv("PLANEX_SIMD")) forced = env;
    if (forced == "scalar") return scalar_kernels();
    if (forced == "avx2" && avx2_kernels()) return *avx2_kernels();
    if (forced == "neon" && neon_kernels()) return *neon_kernels();
    if (const auto* t = avx2_kernels()) return *t;
    if (const auto* t = neon_kernels()) return *t;
    return scalar_kernels();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = select();
    return table;
}

std::size_t min_width_window(std::span<const double> sorted, std::size_t k) {
    assert(k >= 1 && k <= sorted.size());
    return active().min_width_window(sorted.data(), sorted.size(), k);
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return active().dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

CentralMoments central_moments(std::span<const double> x, double mean) {
    return active().central_moments(x.data(), x.size(), mean);
}

}  // namespace planex::simd
