#include <cstdlib>
#include <string_view>

#include "crf/simd/kernels.hpp"

namespace crf::simd {

const KernelSet* avx2_kernel_table() noexcept;

bool cpu_supports_avx2() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelSet* avx2_kernels() noexcept {
    return cpu_supports_avx2() ? avx2_kernel_table() : nullptr;
}

const KernelSet& active() noexcept {
    static const KernelSet& chosen = []() -> const KernelSet& {
        const char* env = std::getenv("CRF_KERNELS");
        if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
        if (const KernelSet* k = avx2_kernels()) return *k;
        return scalar_kernels();
    }();
    return chosen;
}

}  // namespace crf::simd
