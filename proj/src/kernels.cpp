#include "hivesig/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hivesig/errors.hpp"
#include "hivesig/rng.hpp"

namespace hivesig::kernels {

namespace {

void expect(bool ok, const char* what) {
    if (!ok) throw ShapeMismatch(what);
}

int div_ceil(int a, int b) { return a > 0 ? (a + b - 1) / b : a / b; }
int div_floor(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                    int pad, Tensor<T>& y) {
    expect(x.shape.size() == 4 && w.shape.size() == 4, "conv2d: rank");
    const int n = x.dim(0), ci_n = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int co_n = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    expect(w.dim(1) == ci_n, "conv2d: channel counts disagree");
    expect(b.numel() == co_n, "conv2d: bias length");
    expect(h + 2 * pad >= kh && wd + 2 * pad >= kw, "conv2d: kernel exceeds padded input");
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wd + 2 * pad - kw) / stride + 1;
    y = Tensor<T>({n, co_n, ho, wo});

#pragma omp parallel for collapse(2) schedule(static)
    for (int bi = 0; bi < n; ++bi)
        for (int co = 0; co < co_n; ++co) {
            T* yp = y.data.data() + (static_cast<int64_t>(bi) * co_n + co) * ho * wo;
            const T bias = b.data[co];
            for (int i = 0; i < ho * wo; ++i) yp[i] = bias;
            for (int ci = 0; ci < ci_n; ++ci) {
                const T* xp = x.data.data() + (static_cast<int64_t>(bi) * ci_n + ci) * h * wd;
                const T* wp = w.data.data() + (static_cast<int64_t>(co) * ci_n + ci) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    const int oy0 = std::max(0, div_ceil(pad - ky, stride));
                    const int oy1 = std::min(ho, div_floor(h - 1 + pad - ky, stride) + 1);
                    for (int kx = 0; kx < kw; ++kx) {
                        const T wv = wp[ky * kw + kx];
                        const int ox0 = std::max(0, div_ceil(pad - kx, stride));
                        const int ox1 = std::min(wo, div_floor(wd - 1 + pad - kx, stride) + 1);
                        for (int oy = oy0; oy < oy1; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            T* yrow = yp + static_cast<int64_t>(oy) * wo;
                            const T* xrow = xp + static_cast<int64_t>(iy) * wd - pad + kx;
                            for (int ox = ox0; ox < ox1; ++ox)
                                yrow[ox] += wv * xrow[static_cast<int64_t>(ox) * stride];
                        }
                    }
                }
            }
        }
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad,
                     const Tensor<T>& gy, Tensor<T>& gx, Tensor<T>& gw, Tensor<T>& gb) {
    const int n = x.dim(0), ci_n = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int co_n = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int ho = gy.dim(2), wo = gy.dim(3);
    expect(gy.dim(0) == n && gy.dim(1) == co_n, "conv2d backward: gradient shape");

    gx = Tensor<T>(x.shape);
    gw = Tensor<T>(w.shape);
    gb = Tensor<T>({co_n});

#pragma omp parallel for collapse(2) schedule(static)
    for (int bi = 0; bi < n; ++bi)
        for (int ci = 0; ci < ci_n; ++ci) {
            T* gxp = gx.data.data() + (static_cast<int64_t>(bi) * ci_n + ci) * h * wd;
            for (int co = 0; co < co_n; ++co) {
                const T* gyp = gy.data.data() + (static_cast<int64_t>(bi) * co_n + co) * ho * wo;
                const T* wp = w.data.data() + (static_cast<int64_t>(co) * ci_n + ci) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    const int oy0 = std::max(0, div_ceil(pad - ky, stride));
                    const int oy1 = std::min(ho, div_floor(h - 1 + pad - ky, stride) + 1);
                    for (int kx = 0; kx < kw; ++kx) {
                        const T wv = wp[ky * kw + kx];
                        const int ox0 = std::max(0, div_ceil(pad - kx, stride));
                        const int ox1 = std::min(wo, div_floor(wd - 1 + pad - kx, stride) + 1);
                        for (int oy = oy0; oy < oy1; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            const T* gyrow = gyp + static_cast<int64_t>(oy) * wo;
                            T* gxrow = gxp + static_cast<int64_t>(iy) * wd - pad + kx;
                            for (int ox = ox0; ox < ox1; ++ox)
                                gxrow[static_cast<int64_t>(ox) * stride] += wv * gyrow[ox];
                        }
                    }
                }
            }
        }

#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < co_n; ++co)
        for (int ci = 0; ci < ci_n; ++ci) {
            T* acc = gw.data.data() + (static_cast<int64_t>(co) * ci_n + ci) * kh * kw;
            for (int bi = 0; bi < n; ++bi) {
                const T* xp = x.data.data() + (static_cast<int64_t>(bi) * ci_n + ci) * h * wd;
                const T* gyp = gy.data.data() + (static_cast<int64_t>(bi) * co_n + co) * ho * wo;
                for (int ky = 0; ky < kh; ++ky) {
                    const int oy0 = std::max(0, div_ceil(pad - ky, stride));
                    const int oy1 = std::min(ho, div_floor(h - 1 + pad - ky, stride) + 1);
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ox0 = std::max(0, div_ceil(pad - kx, stride));
                        const int ox1 = std::min(wo, div_floor(wd - 1 + pad - kx, stride) + 1);
                        T s = 0;
                        for (int oy = oy0; oy < oy1; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            const T* gyrow = gyp + static_cast<int64_t>(oy) * wo;
                            const T* xrow = xp + static_cast<int64_t>(iy) * wd - pad + kx;
                            for (int ox = ox0; ox < ox1; ++ox)
                                s += gyrow[ox] * xrow[static_cast<int64_t>(ox) * stride];
                        }
                        acc[ky * kw + kx] += s;
                    }
                }
            }
        }

#pragma omp parallel for schedule(static)
    for (int co = 0; co < co_n; ++co) {
        T s = 0;
        for (int bi = 0; bi < n; ++bi) {
            const T* gyp = gy.data.data() + (static_cast<int64_t>(bi) * co_n + co) * ho * wo;
            for (int i = 0; i < ho * wo; ++i) s += gyp[i];
        }
        gb.data[co] = s;
    }
}

template <typename T>
void dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, Tensor<T>& y) {
    expect(x.shape.size() == 2 && w.shape.size() == 2, "dense: rank");
    const int n = x.dim(0), in = x.dim(1), out = w.dim(0);
    expect(w.dim(1) == in, "dense: input width disagrees with weight");
    expect(b.numel() == out, "dense: bias length");
    y = Tensor<T>({n, out});
#pragma omp parallel for schedule(static)
    for (int bi = 0; bi < n; ++bi) {
        const T* xp = x.data.data() + static_cast<int64_t>(bi) * in;
        T* yp = y.data.data() + static_cast<int64_t>(bi) * out;
        for (int o = 0; o < out; ++o) {
            const T* wp = w.data.data() + static_cast<int64_t>(o) * in;
            T s = b.data[o];
            for (int i = 0; i < in; ++i) s += wp[i] * xp[i];
            yp[o] = s;
        }
    }
}

template <typename T>
void dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy, Tensor<T>& gx,
                    Tensor<T>& gw, Tensor<T>& gb) {
    const int n = x.dim(0), in = x.dim(1), out = w.dim(0);
    expect(gy.dim(0) == n && gy.dim(1) == out, "dense backward: gradient shape");
    gx = Tensor<T>(x.shape);
    gw = Tensor<T>(w.shape);
    gb = Tensor<T>({out});

#pragma omp parallel for schedule(static)
    for (int bi = 0; bi < n; ++bi) {
        const T* gyp = gy.data.data() + static_cast<int64_t>(bi) * out;
        T* gxp = gx.data.data() + static_cast<int64_t>(bi) * in;
        for (int o = 0; o < out; ++o) {
            const T g = gyp[o];
            const T* wp = w.data.data() + static_cast<int64_t>(o) * in;
            for (int i = 0; i < in; ++i) gxp[i] += g * wp[i];
        }
    }
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out; ++o) {
        T* gwp = gw.data.data() + static_cast<int64_t>(o) * in;
        T s = 0;
        for (int bi = 0; bi < n; ++bi) {
            const T g = gy.data[static_cast<int64_t>(bi) * out + o];
            s += g;
            const T* xp = x.data.data() + static_cast<int64_t>(bi) * in;
            for (int i = 0; i < in; ++i) gwp[i] += g * xp[i];
        }
        gb.data[o] = s;
    }
}

template <typename T>
void maxpool_forward(const Tensor<T>& x, int k, Tensor<T>& y, std::vector<int64_t>& argmax) {
    expect(x.shape.size() == 4, "maxpool: rank");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    expect(h % k == 0 && w % k == 0, "maxpool: size not divisible by window");
    const int ho = h / k, wo = w / k;
    y = Tensor<T>({n, c, ho, wo});
    argmax.assign(y.numel(), 0);

#pragma omp parallel for collapse(2) schedule(static)
    for (int bi = 0; bi < n; ++bi)
        for (int ch = 0; ch < c; ++ch) {
            const int64_t xbase = (static_cast<int64_t>(bi) * c + ch) * h * w;
            const int64_t ybase = (static_cast<int64_t>(bi) * c + ch) * ho * wo;
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    T best = -std::numeric_limits<T>::infinity();
                    int64_t best_at = 0;
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int64_t at = xbase + static_cast<int64_t>(oy * k + ky) * w +
                                               ox * k + kx;
                            if (x.data[at] > best) {
                                best = x.data[at];
                                best_at = at;
                            }
                        }
                    y.data[ybase + static_cast<int64_t>(oy) * wo + ox] = best;
                    argmax[ybase + static_cast<int64_t>(oy) * wo + ox] = best_at;
                }
        }
}

template <typename T>
void maxpool_backward(const Tensor<T>& gy, const std::vector<int64_t>& argmax, Tensor<T>& gx) {
    // gx must arrive pre-shaped; windows are disjoint so writes never collide
    std::fill(gx.data.begin(), gx.data.end(), T(0));
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < gy.numel(); ++i) gx.data[argmax[i]] += gy.data[i];
}

template <typename T>
void batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       std::vector<T>& running_mean, std::vector<T>& running_var, bool training,
                       T momentum, T eps, Tensor<T>& y, Tensor<T>& x_hat,
                       std::vector<T>& inv_std) {
    expect(x.shape.size() == 4, "batchnorm: rank");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    expect(gamma.numel() == c && beta.numel() == c, "batchnorm: parameter length");
    expect(static_cast<int>(running_mean.size()) == c &&
               static_cast<int>(running_var.size()) == c,
           "batchnorm: running stats length");
    const int64_t plane = static_cast<int64_t>(h) * w;
    const int64_t m = static_cast<int64_t>(n) * plane;

    y = Tensor<T>(x.shape);
    if (training) {
        x_hat = Tensor<T>(x.shape);
        inv_std.assign(c, T(0));
    }

#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        T mean, istd;
        if (training) {
            T s = 0;
            for (int bi = 0; bi < n; ++bi) {
                const T* xp = x.data.data() + (static_cast<int64_t>(bi) * c + ch) * plane;
                for (int64_t i = 0; i < plane; ++i) s += xp[i];
            }
            mean = s / static_cast<T>(m);
            T v = 0;
            for (int bi = 0; bi < n; ++bi) {
                const T* xp = x.data.data() + (static_cast<int64_t>(bi) * c + ch) * plane;
                for (int64_t i = 0; i < plane; ++i) {
                    const T d = xp[i] - mean;
                    v += d * d;
                }
            }
            const T var = v / static_cast<T>(m);
            running_mean[ch] = (T(1) - momentum) * running_mean[ch] + momentum * mean;
            running_var[ch] = (T(1) - momentum) * running_var[ch] + momentum * var;
            istd = T(1) / std::sqrt(var + eps);
            inv_std[ch] = istd;
        } else {
            mean = running_mean[ch];
            istd = T(1) / std::sqrt(running_var[ch] + eps);
        }
        const T g = gamma.data[ch], bta = beta.data[ch];
        for (int bi = 0; bi < n; ++bi) {
            const int64_t base = (static_cast<int64_t>(bi) * c + ch) * plane;
            for (int64_t i = 0; i < plane; ++i) {
                const T xh = (x.data[base + i] - mean) * istd;
                if (training) x_hat.data[base + i] = xh;
                y.data[base + i] = g * xh + bta;
            }
        }
    }
}

template <typename T>
void batchnorm_backward(const Tensor<T>& gamma, const Tensor<T>& x_hat,
                        const std::vector<T>& inv_std, const Tensor<T>& gy, Tensor<T>& gx,
                        Tensor<T>& ggamma, Tensor<T>& gbeta) {
    const int n = gy.dim(0), c = gy.dim(1), h = gy.dim(2), w = gy.dim(3);
    const int64_t plane = static_cast<int64_t>(h) * w;
    const int64_t m = static_cast<int64_t>(n) * plane;
    gx = Tensor<T>(gy.shape);
    ggamma = Tensor<T>({c});
    gbeta = Tensor<T>({c});

#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        T s1 = 0, s2 = 0;  // sum(gy), sum(gy * x_hat)
        for (int bi = 0; bi < n; ++bi) {
            const int64_t base = (static_cast<int64_t>(bi) * c + ch) * plane;
            for (int64_t i = 0; i < plane; ++i) {
                s1 += gy.data[base + i];
                s2 += gy.data[base + i] * x_hat.data[base + i];
            }
        }
        gbeta.data[ch] = s1;
        ggamma.data[ch] = s2;
        const T scale = gamma.data[ch] * inv_std[ch];
        const T mean_g = s1 / static_cast<T>(m);
        const T mean_gx = s2 / static_cast<T>(m);
        for (int bi = 0; bi < n; ++bi) {
            const int64_t base = (static_cast<int64_t>(bi) * c + ch) * plane;
            for (int64_t i = 0; i < plane; ++i)
                gx.data[base + i] =
                    scale * (gy.data[base + i] - mean_g - x_hat.data[base + i] * mean_gx);
        }
    }
}

template <typename T>
void relu_forward(const Tensor<T>& x, Tensor<T>& y) {
    y = Tensor<T>(x.shape);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < x.numel(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
}

template <typename T>
void relu_backward(const Tensor<T>& x, const Tensor<T>& gy, Tensor<T>& gx) {
    gx = Tensor<T>(x.shape);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < x.numel(); ++i) gx.data[i] = x.data[i] > T(0) ? gy.data[i] : T(0);
}

template <typename T>
void dropout_forward(const Tensor<T>& x, double p, uint64_t seed, bool training, Tensor<T>& y) {
    if (p < 0.0 || p >= 1.0) throw InvalidProbability("dropout probability must be in [0,1)");
    y = Tensor<T>(x.shape);
    if (!training || p == 0.0) {
        y.data = x.data;
        return;
    }
    const T scale = T(1.0 / (1.0 - p));
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < x.numel(); ++i)
        y.data[i] = uniform_at(seed, static_cast<uint64_t>(i)) >= p ? x.data[i] * scale : T(0);
}

template <typename T>
void dropout_backward(const Tensor<T>& gy, double p, uint64_t seed, Tensor<T>& gx) {
    gx = Tensor<T>(gy.shape);
    if (p == 0.0) {
        gx.data = gy.data;
        return;
    }
    const T scale = T(1.0 / (1.0 - p));
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < gy.numel(); ++i)
        gx.data[i] = uniform_at(seed, static_cast<uint64_t>(i)) >= p ? gy.data[i] * scale : T(0);
}

template <typename T>
void softmax(const Tensor<T>& logits, Tensor<T>& probs) {
    expect(logits.shape.size() == 2 && logits.dim(1) > 0, "softmax: need [N,K]");
    const int n = logits.dim(0), k = logits.dim(1);
    probs = Tensor<T>(logits.shape);
    for (int bi = 0; bi < n; ++bi) {
        const T* z = logits.data.data() + static_cast<int64_t>(bi) * k;
        T* p = probs.data.data() + static_cast<int64_t>(bi) * k;
        T mx = z[0];
        for (int i = 1; i < k; ++i) mx = std::max(mx, z[i]);
        T sum = 0;
        for (int i = 0; i < k; ++i) {
            p[i] = std::exp(z[i] - mx);
            sum += p[i];
        }
        for (int i = 0; i < k; ++i) p[i] /= sum;
    }
}

template <typename T>
T cross_entropy(const Tensor<T>& probs, const Tensor<T>& target) {
    expect(probs.shape == target.shape, "cross_entropy: shape");
    const int n = probs.dim(0), k = probs.dim(1);
    const T floor = T(1e-12);
    T total = 0;
    for (int bi = 0; bi < n; ++bi) {
        const T* p = probs.data.data() + static_cast<int64_t>(bi) * k;
        const T* t = target.data.data() + static_cast<int64_t>(bi) * k;
        T loss = 0;
        for (int i = 0; i < k; ++i) loss -= t[i] * std::log(std::max(p[i], floor));
        total += loss;
    }
    return total / static_cast<T>(n);
}

template <typename T>
void softmax_xent_backward(const Tensor<T>& probs, const Tensor<T>& target, Tensor<T>& glogits) {
    expect(probs.shape == target.shape, "cross_entropy backward: shape");
    const int n = probs.dim(0);
    glogits = Tensor<T>(probs.shape);
    const T inv_n = T(1) / static_cast<T>(n);
    for (int64_t i = 0; i < probs.numel(); ++i)
        glogits.data[i] = (probs.data[i] - target.data[i]) * inv_n;
}

#define HIVESIG_INSTANTIATE(T)                                                                   \
    template void conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int,   \
                                    int, Tensor<T>&);                                            \
    template void conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, int, int,               \
                                     const Tensor<T>&, Tensor<T>&, Tensor<T>&, Tensor<T>&);      \
    template void dense_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                   Tensor<T>&);                                                  \
    template void dense_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                    Tensor<T>&, Tensor<T>&, Tensor<T>&);                         \
    template void maxpool_forward<T>(const Tensor<T>&, int, Tensor<T>&, std::vector<int64_t>&);  \
    template void maxpool_backward<T>(const Tensor<T>&, const std::vector<int64_t>&,             \
                                      Tensor<T>&);                                               \
    template void batchnorm_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                       std::vector<T>&, std::vector<T>&, bool, T, T, Tensor<T>&, \
                                       Tensor<T>&, std::vector<T>&);                             \
    template void batchnorm_backward<T>(const Tensor<T>&, const Tensor<T>&,                      \
                                        const std::vector<T>&, const Tensor<T>&, Tensor<T>&,     \
                                        Tensor<T>&, Tensor<T>&);                                 \
    template void relu_forward<T>(const Tensor<T>&, Tensor<T>&);                                 \
    template void relu_backward<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&);              \
    template void dropout_forward<T>(const Tensor<T>&, double, uint64_t, bool, Tensor<T>&);      \
    template void dropout_backward<T>(const Tensor<T>&, double, uint64_t, Tensor<T>&);           \
    template void softmax<T>(const Tensor<T>&, Tensor<T>&);                                      \
    template T cross_entropy<T>(const Tensor<T>&, const Tensor<T>&);                             \
    template void softmax_xent_backward<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&);

HIVESIG_INSTANTIATE(float)
HIVESIG_INSTANTIATE(double)
#undef HIVESIG_INSTANTIATE

}  // namespace hivesig::kernels
