// AVX2+FMA variants of the hot kernels. Compiled with -mavx2 -mfma; only
// reached through the runtime dispatch in simd_dispatch.cpp.

#include <immintrin.h>

#include <cmath>

#include "cascade/simd.hpp"

namespace cascade::simd {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void v_axpy(std::size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void v_xpay(std::size_t n, const double* x, double a, const double* z, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_fmadd_pd(va, _mm256_loadu_pd(z + i), _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, v);
    }
    for (; i < n; ++i) y[i] = x[i] + a * z[i];
}

// |z| per lane for 2 interleaved complexes held in (re0,im0,re1,im1).
void v_cnorms(std::size_t nc, const double* z, __m256d& acc1, __m256d& acc2, std::size_t& i) {
    for (; i + 2 <= nc; i += 2) {
        __m256d v = _mm256_loadu_pd(z + 2 * i);       // re0 im0 re1 im1
        __m256d sq = _mm256_mul_pd(v, v);             // re0^2 im0^2 re1^2 im1^2
        __m256d sw = _mm256_permute_pd(sq, 0b0101);   // im0^2 re0^2 im1^2 re1^2
        __m256d s = _mm256_add_pd(sq, sw);            // |z0|^2 |z0|^2 |z1|^2 |z1|^2
        acc2 = _mm256_add_pd(acc2, s);
        acc1 = _mm256_add_pd(acc1, _mm256_sqrt_pd(s));
    }
}

double v_cnorm1(std::size_t nc, const double* z) {
    __m256d a1 = _mm256_setzero_pd(), a2 = _mm256_setzero_pd();
    std::size_t i = 0;
    v_cnorms(nc, z, a1, a2, i);
    double s = 0.5 * hsum(a1);  // each |z| counted twice per vector
    for (; i < nc; ++i) {
        const double re = z[2 * i], im = z[2 * i + 1];
        s += std::sqrt(re * re + im * im);
    }
    return s;
}

double v_cnorm2sq(std::size_t nc, const double* z) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= nc; i += 2) {
        __m256d v = _mm256_loadu_pd(z + 2 * i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double s = hsum(acc);
    for (; i < nc; ++i) {
        const double re = z[2 * i], im = z[2 * i + 1];
        s += re * re + im * im;
    }
    return s;
}

double v_wnorm2sq(std::size_t nc, const double* z, const double* w) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= nc; i += 2) {
        __m256d v = _mm256_loadu_pd(z + 2 * i);
        __m256d sq = _mm256_mul_pd(v, v);
        __m256d sw = _mm256_permute_pd(sq, 0b0101);
        __m256d s = _mm256_add_pd(sq, sw);  // |z0|^2 |z0|^2 |z1|^2 |z1|^2
        __m128d wlo = _mm_loadu_pd(w + i);  // w0 w1
        __m256d wv = _mm256_set_m128d(_mm_unpackhi_pd(wlo, wlo), _mm_unpacklo_pd(wlo, wlo));
        acc = _mm256_fmadd_pd(wv, s, acc);
    }
    double s = 0.5 * hsum(acc);
    for (; i < nc; ++i) {
        const double re = z[2 * i], im = z[2 * i + 1];
        s += w[i] * (re * re + im * im);
    }
    return s;
}

void v_kerr_accum(std::size_t nc, const double* z, double* out) {
    const __m256d signs = _mm256_set_pd(-1.0, 1.0, -1.0, 1.0);  // (+ for re slot, - for im slot)
    std::size_t i = 0;
    for (; i + 2 <= nc; i += 2) {
        __m256d v = _mm256_loadu_pd(z + 2 * i);      // re0 im0 re1 im1
        __m256d sq = _mm256_mul_pd(v, v);
        __m256d sw = _mm256_permute_pd(sq, 0b0101);
        __m256d s = _mm256_add_pd(sq, sw);           // |z|^2 in both slots
        __m256d zsw = _mm256_permute_pd(v, 0b0101);  // im0 re0 im1 re1
        __m256d o = _mm256_loadu_pd(out + 2 * i);
        o = _mm256_fmadd_pd(_mm256_mul_pd(s, zsw), signs, o);  // += (s*im, -s*re)
        _mm256_storeu_pd(out + 2 * i, o);
    }
    for (; i < nc; ++i) {
        const double re = z[2 * i], im = z[2 * i + 1];
        const double s = re * re + im * im;
        out[2 * i] += s * im;
        out[2 * i + 1] -= s * re;
    }
}

double v_err_ratio_max(std::size_t n, const double* e, const double* y0, const double* y1,
                       double atol, double rtol) {
    const __m256d va = _mm256_set1_pd(atol);
    const __m256d vr = _mm256_set1_pd(rtol);
    const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffll));
    __m256d vmax = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d ay0 = _mm256_and_pd(_mm256_loadu_pd(y0 + i), absmask);
        __m256d ay1 = _mm256_and_pd(_mm256_loadu_pd(y1 + i), absmask);
        __m256d sc = _mm256_fmadd_pd(vr, _mm256_max_pd(ay0, ay1), va);
        __m256d ae = _mm256_and_pd(_mm256_loadu_pd(e + i), absmask);
        vmax = _mm256_max_pd(vmax, _mm256_div_pd(ae, sc));
    }
    double m = hmax(vmax);
    for (; i < n; ++i) {
        const double sc = atol + rtol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
        const double r = std::fabs(e[i]) / sc;
        if (r > m) m = r;
    }
    return m;
}

}  // namespace

const Kernels& avx2_kernels() {
    static const Kernels k = {v_axpy,     v_xpay,       v_cnorm1,        v_cnorm2sq,
                              v_wnorm2sq, v_kerr_accum, v_err_ratio_max, "avx2"};
    return k;
}

}  // namespace cascade::simd
