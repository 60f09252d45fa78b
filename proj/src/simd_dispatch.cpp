#include <cstdlib>
#include <cstring>

#include "cascade/simd.hpp"

namespace cascade::simd {

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels& active() {
    static const Kernels& k = []() -> const Kernels& {
        const char* env = std::getenv("CASCADE_LAB_SIMD");
        if (env != nullptr) {
            if (std::strcmp(env, "scalar") == 0) return scalar_kernels();
            if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return avx2_kernels();
        }
        return avx2_supported() ? avx2_kernels() : scalar_kernels();
    }();
    return k;
}

}  // namespace cascade::simd
