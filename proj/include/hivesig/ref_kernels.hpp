#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

// Straight-line reference implementations: no FFT tricks, no blocking, no
// threads. Slow on purpose; everything here is the ground truth the fast
// paths are tested against.
namespace hivesig::refk {

// O(n^2) discrete Fourier transform.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x);

// Direct-form FIR: y[n] = sum_k h[k] x[n-k], output trimmed to len(x).
std::vector<double> fir_direct(const std::vector<float>& x, const std::vector<double>& h);

// Quadruple-loop 2-D convolution (cross-correlation, as in the fast path).
// x: [n, c_in, h, w] planar, k: [c_out, c_in, kh, kw], y: [n, c_out, ho, wo].
template <typename T>
void conv2d(const T* x, int n, int c_in, int h, int w, const T* k, int c_out, int kh, int kw,
            int stride, int pad, const T* bias, T* y) {
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (w + 2 * pad - kw) / stride + 1;
    for (int b = 0; b < n; ++b)
        for (int co = 0; co < c_out; ++co)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    T acc = bias ? bias[co] : T(0);
                    for (int ci = 0; ci < c_in; ++ci)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = oy * stride - pad + ky;
                                const int ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                acc += x[((static_cast<int64_t>(b) * c_in + ci) * h + iy) * w + ix] *
                                       k[((static_cast<int64_t>(co) * c_in + ci) * kh + ky) * kw + kx];
                            }
                    y[((static_cast<int64_t>(b) * c_out + co) * ho + oy) * wo + ox] = acc;
                }
}

template <typename T>
void dense(const T* x, int n, int in_dim, const T* w, int out_dim, const T* bias, T* y) {
    for (int b = 0; b < n; ++b)
        for (int o = 0; o < out_dim; ++o) {
            T acc = bias ? bias[o] : T(0);
            for (int i = 0; i < in_dim; ++i)
                acc += x[static_cast<int64_t>(b) * in_dim + i] *
                       w[static_cast<int64_t>(o) * in_dim + i];
            y[static_cast<int64_t>(b) * out_dim + o] = acc;
        }
}

// 2-D max pooling; window k, stride k. Ties go to the first element scanned.
template <typename T>
void maxpool(const T* x, int n, int c, int h, int w, int k, T* y) {
    const int ho = h / k, wo = w / k;
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    T best = -std::numeric_limits<T>::infinity();
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx)
                            best = std::max(best,
                                            x[((static_cast<int64_t>(b) * c + ch) * h + oy * k + ky) *
                                                  w +
                                              ox * k + kx]);
                    y[((static_cast<int64_t>(b) * c + ch) * ho + oy) * wo + ox] = best;
                }
}

}  // namespace hivesig::refk
