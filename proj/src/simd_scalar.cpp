#include <cmath>

#include "cascade/simd.hpp"

namespace cascade::simd {
namespace {

void s_axpy(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_xpay(std::size_t n, const double* x, double a, const double* z, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * z[i];
}

double s_cnorm1(std::size_t nc, const double* z) {
    double s = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
        const double re = z[2 * i], im = z[2 * i + 1];
        s += std::sqrt(re * re + im * im);
    }
    return s;
}

double s_cnorm2sq(std::size_t nc, const double* z) {
    double s = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
        const double re = z[2 * i], im = z[2 * i + 1];
        s += re * re + im * im;
    }
    return s;
}

double s_wnorm2sq(std::size_t nc, const double* z, const double* w) {
    double s = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
        const double re = z[2 * i], im = z[2 * i + 1];
        s += w[i] * (re * re + im * im);
    }
    return s;
}

void s_kerr_accum(std::size_t nc, const double* z, double* out) {
    for (std::size_t i = 0; i < nc; ++i) {
        const double re = z[2 * i], im = z[2 * i + 1];
        const double s = re * re + im * im;
        out[2 * i] += s * im;
        out[2 * i + 1] -= s * re;
    }
}

double s_err_ratio_max(std::size_t n, const double* e, const double* y0, const double* y1,
                       double atol, double rtol) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = atol + rtol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
        const double r = std::fabs(e[i]) / sc;
        if (r > m) m = r;
    }
    return m;
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {s_axpy,       s_xpay,       s_cnorm1,         s_cnorm2sq,
                              s_wnorm2sq,   s_kerr_accum, s_err_ratio_max,  "scalar"};
    return k;
}

}  // namespace cascade::simd
