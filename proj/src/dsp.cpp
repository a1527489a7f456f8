#include "hivesig/dsp.hpp"

#include <cmath>
#include <stdexcept>

namespace hivesig::dsp {

FftPlan::FftPlan(int n) : n_(n) {
    if (!is_pow2(n)) throw std::invalid_argument("FftPlan: length must be a power of two");
    rev_.resize(n);
    int log2n = 0;
    while ((1 << log2n) < n) ++log2n;
    for (int i = 0; i < n; ++i) {
        uint32_t r = 0;
        for (int b = 0; b < log2n; ++b)
            if (i & (1 << b)) r |= 1u << (log2n - 1 - b);
        rev_[i] = r;
    }
    tw_.resize(n / 2);
    for (int k = 0; k < n / 2; ++k)
        tw_[k] = std::polar(1.0, -2.0 * kPi * k / n);
}

void FftPlan::forward(cplx* a) const {
    const int n = n_;
    for (int i = 0; i < n; ++i) {
        const uint32_t j = rev_[i];
        if (static_cast<uint32_t>(i) < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len >> 1;
        const int stride = n / len;
        for (int base = 0; base < n; base += len) {
            for (int k = 0; k < half; ++k) {
                const cplx w = tw_[k * stride];
                const cplx u = a[base + k];
                const cplx v = a[base + k + half] * w;
                a[base + k] = u + v;
                a[base + k + half] = u - v;
            }
        }
    }
}

void FftPlan::inverse(cplx* a) const {
    const int n = n_;
    for (int i = 0; i < n; ++i) a[i] = std::conj(a[i]);
    forward(a);
    const double inv = 1.0 / n;
    for (int i = 0; i < n; ++i) a[i] = std::conj(a[i]) * inv;
}

std::vector<cplx> fft(std::vector<cplx> a) {
    FftPlan plan(static_cast<int>(a.size()));
    plan.forward(a.data());
    return a;
}

std::vector<cplx> ifft(std::vector<cplx> a) {
    FftPlan plan(static_cast<int>(a.size()));
    plan.inverse(a.data());
    return a;
}

cplx dft_bin(const double* x, int64_t n, double freq_per_sample) {
    // Recurrence-free direct sum; n stays small where this is used.
    cplx acc(0.0, 0.0);
    const double w = -2.0 * kPi * freq_per_sample;
    for (int64_t t = 0; t < n; ++t)
        acc += x[t] * cplx(std::cos(w * t), std::sin(w * t));
    return acc;
}

std::vector<double> make_window(Window w, int n) {
    std::vector<double> out(n, 1.0);
    if (w == Window::hann) {
        for (int i = 0; i < n; ++i)
            out[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
    }
    return out;
}

}  // namespace hivesig::dsp
