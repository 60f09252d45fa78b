#pragma once

#include <complex>
#include <cstddef>
#include <string>

// Hot vector kernels for the integrator and the norm monitors.
// Scalar reference implementations always exist; an AVX2+FMA variant is
// selected at runtime when the CPU supports it. Override with
// CASCADE_LAB_SIMD=scalar|avx2.
//
// Complex arrays are interleaved (re,im) pairs, i.e. the memory layout of
// std::complex<double>[n].

namespace cascade::simd {

struct Kernels {
    // y[i] += a * x[i], n doubles
    void (*axpy)(std::size_t n, double a, const double* x, double* y);
    // y[i] = x[i] + a * z[i], n doubles
    void (*xpay)(std::size_t n, const double* x, double a, const double* z, double* y);
    // sum_i sqrt(re_i^2 + im_i^2), nc complex numbers
    double (*cnorm1)(std::size_t nc, const double* z);
    // sum_i (re_i^2 + im_i^2)
    double (*cnorm2sq)(std::size_t nc, const double* z);
    // sum_i w_i * (re_i^2 + im_i^2)
    double (*wnorm2sq)(std::size_t nc, const double* z, const double* w);
    // out_i += -i * |z_i|^2 * z_i  (cubic self-phase term)
    void (*kerr_accum)(std::size_t nc, const double* z, double* out);
    // max_i |e_i| / (atol + rtol * max(|y0_i|, |y1_i|)), n doubles
    double (*err_ratio_max)(std::size_t n, const double* e, const double* y0, const double* y1,
                            double atol, double rtol);
    const char* name;
};

const Kernels& scalar_kernels();
bool avx2_supported();
const Kernels& avx2_kernels();  // valid only if avx2_supported()

// Active table (resolved once per process).
const Kernels& active();

// Convenience wrappers on std::complex storage.
inline double cnorm1(std::size_t nc, const std::complex<double>* z) {
    return active().cnorm1(nc, reinterpret_cast<const double*>(z));
}
inline double cnorm2sq(std::size_t nc, const std::complex<double>* z) {
    return active().cnorm2sq(nc, reinterpret_cast<const double*>(z));
}
inline double wnorm2sq(std::size_t nc, const std::complex<double>* z, const double* w) {
    return active().wnorm2sq(nc, reinterpret_cast<const double*>(z), w);
}
inline void kerr_accum(std::size_t nc, const std::complex<double>* z, std::complex<double>* out) {
    active().kerr_accum(nc, reinterpret_cast<const double*>(z), reinterpret_cast<double*>(out));
}

}  // namespace cascade::simd
