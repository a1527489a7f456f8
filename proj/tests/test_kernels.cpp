#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "doctest.h"
#include "hivesig/errors.hpp"
#include "hivesig/kernels.hpp"
#include "hivesig/ref_kernels.hpp"
#include "hivesig/rng.hpp"
#include "hivesig/tensor.hpp"

using hivesig::Rng;
using hivesig::Tensor;
namespace K = hivesig::kernels;
namespace refk = hivesig::refk;

namespace {

template <typename T>
Tensor<T> rand_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<T>(lo + (hi - lo) * rng.uniform());
    return t;
}

template <typename T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return worst;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("conv2d matches the serial reference") {
    Rng rng(0xc0111dull);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(2));
        const int ci = 1 + static_cast<int>(rng.below(3));
        const int co = 1 + static_cast<int>(rng.below(3));
        const int k = 1 + static_cast<int>(rng.below(3));
        const int stride = 1 + static_cast<int>(rng.below(2));
        const int pad = static_cast<int>(rng.below(2));
        const int h = k + static_cast<int>(rng.below(5));
        const int w = k + static_cast<int>(rng.below(5));

        auto x = rand_tensor<double>({n, ci, h, w}, rng);
        auto wt = rand_tensor<double>({co, ci, k, k}, rng);
        auto b = rand_tensor<double>({co}, rng);

        Tensor<double> y;
        K::conv2d_forward(x, wt, b, stride, pad, y);

        std::vector<double> want(y.data.size());
        refk::conv2d(x.data.data(), n, ci, h, w, wt.data.data(), co, k, k, stride, pad,
                     b.data.data(), want.data());
        CHECK(max_abs_diff(y.data, want) < 1e-12);

        // float path against the double reference, looser
        Tensor<float> yf;
        K::conv2d_forward(x.cast<float>(), wt.cast<float>(), b.cast<float>(), stride, pad, yf);
        for (size_t i = 0; i < want.size(); ++i)
            CHECK(std::fabs(yf.data[i] - want[i]) < 1e-4 * (1.0 + std::fabs(want[i])));
    }
}

TEST_CASE("conv2d analytic case") {
    // 3x3 ones through a 2x2 ones kernel, no padding: every output is 4 + bias
    Tensor<float> x({1, 1, 3, 3}, std::vector<float>(9, 1.0f));
    Tensor<float> w({1, 1, 2, 2}, std::vector<float>(4, 1.0f));
    Tensor<float> b({1}, {0.5f});
    Tensor<float> y;
    K::conv2d_forward(x, w, b, 1, 0, y);
    CHECK(y.shape == std::vector<int>{1, 1, 2, 2});
    for (float v : y.data) CHECK(v == doctest::Approx(4.5f));
}

TEST_CASE("conv2d rejects mismatched channels") {
    Tensor<float> x({1, 2, 4, 4});
    Tensor<float> w({1, 3, 3, 3});
    Tensor<float> b({1});
    Tensor<float> y;
    CHECK_THROWS_AS(K::conv2d_forward(x, w, b, 1, 1, y), hivesig::ShapeMismatch);
}

TEST_CASE("dense matches the serial reference") {
    Rng rng(0xdeull);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const int in = 1 + static_cast<int>(rng.below(16));
        const int out = 1 + static_cast<int>(rng.below(8));
        auto x = rand_tensor<double>({n, in}, rng);
        auto w = rand_tensor<double>({out, in}, rng);
        auto b = rand_tensor<double>({out}, rng);
        Tensor<double> y;
        K::dense_forward(x, w, b, y);
        std::vector<double> want(y.data.size());
        refk::dense(x.data.data(), n, in, w.data.data(), out, b.data.data(), want.data());
        CHECK(max_abs_diff(y.data, want) < 1e-12);
    }
}

TEST_CASE("maxpool matches the serial reference and breaks ties first") {
    Rng rng(0x9001ull);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(2));
        const int c = 1 + static_cast<int>(rng.below(3));
        const int k = 2 + static_cast<int>(rng.below(2));
        const int h = k * (1 + static_cast<int>(rng.below(3)));
        const int w = k * (1 + static_cast<int>(rng.below(3)));
        auto x = rand_tensor<double>({n, c, h, w}, rng);
        Tensor<double> y;
        std::vector<int64_t> am;
        K::maxpool_forward(x, k, y, am);
        std::vector<double> want(y.data.size());
        refk::maxpool(x.data.data(), n, c, h, w, k, want.data());
        CHECK(max_abs_diff(y.data, want) == 0.0);
    }

    // all-equal window: the winner is the first element in scan order
    Tensor<float> flat({1, 1, 2, 2}, {7.0f, 7.0f, 7.0f, 7.0f});
    Tensor<float> y;
    std::vector<int64_t> am;
    K::maxpool_forward(flat, 2, y, am);
    CHECK(y.data[0] == 7.0f);
    CHECK(am[0] == 0);
}

TEST_CASE("maxpool backward routes gradient to the argmax") {
    Tensor<float> x({1, 1, 2, 2}, {1.0f, 9.0f, 3.0f, 2.0f});
    Tensor<float> y;
    std::vector<int64_t> am;
    K::maxpool_forward(x, 2, y, am);
    CHECK(y.data[0] == 9.0f);

    Tensor<float> gy({1, 1, 1, 1}, {5.0f});
    Tensor<float> gx(x.shape);
    K::maxpool_backward(gy, am, gx);
    CHECK(gx.data == std::vector<float>{0.0f, 5.0f, 0.0f, 0.0f});
}

TEST_CASE("batchnorm training normalizes and tracks running stats") {
    Rng rng(0xb4ull);
    const int n = 4, c = 3, h = 5, w = 5;
    auto x = rand_tensor<double>({n, c, h, w}, rng, -2.0, 3.0);
    Tensor<double> gamma({c}, {1.0, 1.0, 1.0});
    Tensor<double> beta({c}, {0.0, 0.0, 0.0});
    std::vector<double> rm(c, 0.0), rv(c, 1.0);
    const std::vector<double> rm0 = rm, rv0 = rv;

    Tensor<double> y, xh;
    std::vector<double> istd;
    K::batchnorm_forward(x, gamma, beta, rm, rv, true, 0.1, 1e-5, y, xh, istd);

    const int64_t m = static_cast<int64_t>(n) * h * w;
    for (int ch = 0; ch < c; ++ch) {
        double mean = 0.0, var = 0.0, bmean = 0.0, bvar = 0.0;
        for (int bi = 0; bi < n; ++bi)
            for (int i = 0; i < h * w; ++i) {
                mean += y.data[(static_cast<int64_t>(bi) * c + ch) * h * w + i];
                bmean += x.data[(static_cast<int64_t>(bi) * c + ch) * h * w + i];
            }
        mean /= static_cast<double>(m);
        bmean /= static_cast<double>(m);
        for (int bi = 0; bi < n; ++bi)
            for (int i = 0; i < h * w; ++i) {
                const double dy = y.data[(static_cast<int64_t>(bi) * c + ch) * h * w + i] - mean;
                const double dx = x.data[(static_cast<int64_t>(bi) * c + ch) * h * w + i] - bmean;
                var += dy * dy;
                bvar += dx * dx;
            }
        var /= static_cast<double>(m);
        bvar /= static_cast<double>(m);

        CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(var == doctest::Approx(bvar / (bvar + 1e-5)).epsilon(1e-9));  // eps shrinks it
        CHECK(rm[ch] == doctest::Approx(0.9 * rm0[ch] + 0.1 * bmean));
        CHECK(rv[ch] == doctest::Approx(0.9 * rv0[ch] + 0.1 * bvar));
    }

    // eval mode applies the running stats per sample
    std::vector<double> rm_frozen = rm, rv_frozen = rv;
    Tensor<double> ye, xh2;
    std::vector<double> istd2;
    K::batchnorm_forward(x, gamma, beta, rm_frozen, rv_frozen, false, 0.1, 1e-5, ye, xh2, istd2);
    CHECK(rm_frozen == rm);
    CHECK(rv_frozen == rv);
    for (int ch = 0; ch < c; ++ch) {
        const double is = 1.0 / std::sqrt(rv[ch] + 1e-5);
        const int64_t at = static_cast<int64_t>(ch) * h * w + 7;
        CHECK(ye.data[at] == doctest::Approx((x.data[at] - rm[ch]) * is));
    }
}

TEST_CASE("batchnorm applies gamma and beta") {
    Tensor<double> x({2, 1, 1, 2}, {1.0, 2.0, 3.0, 4.0});
    Tensor<double> gamma({1}, {2.0});
    Tensor<double> beta({1}, {10.0});
    std::vector<double> rm(1, 0.0), rv(1, 1.0), istd;
    Tensor<double> y, xh;
    K::batchnorm_forward(x, gamma, beta, rm, rv, true, 0.1, 1e-5, y, xh, istd);
    double mean = 0.0;
    for (double v : y.data) mean += v;
    CHECK(mean / 4.0 == doctest::Approx(10.0));  // beta shifts the centered output
    for (size_t i = 0; i < 4; ++i) CHECK(y.data[i] == doctest::Approx(2.0 * xh.data[i] + 10.0));
}

TEST_CASE("relu clamps and gates") {
    Tensor<float> x({1, 4}, {-1.0f, 0.0f, 2.0f, -0.5f});
    Tensor<float> y, gx;
    K::relu_forward(x, y);
    CHECK(y.data == std::vector<float>{0.0f, 0.0f, 2.0f, 0.0f});
    Tensor<float> gy({1, 4}, {1.0f, 1.0f, 1.0f, 1.0f});
    K::relu_backward(x, gy, gx);
    CHECK(gx.data == std::vector<float>{0.0f, 0.0f, 1.0f, 0.0f});
}

TEST_CASE("dropout keeps rate, scales, and reuses its mask backward") {
    const int64_t n = 20000;
    Tensor<float> x({1, static_cast<int>(n)}, std::vector<float>(n, 1.0f));
    const double p = 0.3;
    Tensor<float> y;
    K::dropout_forward(x, p, 42, true, y);

    int64_t dropped = 0;
    for (float v : y.data) {
        if (v == 0.0f)
            ++dropped;
        else
            CHECK(v == doctest::Approx(1.0f / 0.7f));
    }
    CHECK(std::fabs(static_cast<double>(dropped) / n - p) < 0.03);

    Tensor<float> gy({1, static_cast<int>(n)}, std::vector<float>(n, 1.0f));
    Tensor<float> gx;
    K::dropout_backward(gy, p, 42, gx);
    for (int64_t i = 0; i < n; ++i) CHECK((gx.data[i] == 0.0f) == (y.data[i] == 0.0f));

    Tensor<float> same;
    K::dropout_forward(x, p, 42, true, same);
    CHECK(same.data == y.data);  // mask is a pure function of (seed, index)

    Tensor<float> eval;
    K::dropout_forward(x, p, 42, false, eval);
    CHECK(eval.data == x.data);
    Tensor<float> off;
    K::dropout_forward(x, 0.0, 42, true, off);
    CHECK(off.data == x.data);
}

TEST_CASE("dropout rejects bad probabilities") {
    Tensor<float> x({1, 1}, {1.0f});
    Tensor<float> y;
    CHECK_THROWS_AS(K::dropout_forward(x, 1.0, 0, true, y), hivesig::InvalidProbability);
    CHECK_THROWS_AS(K::dropout_forward(x, -0.1, 0, true, y), hivesig::InvalidProbability);
}

TEST_CASE("softmax is a probability vector") {
    Rng rng(0x50f7ull);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const int k = 2 + static_cast<int>(rng.below(6));
        auto z = rand_tensor<double>({n, k}, rng, -30.0, 30.0);
        Tensor<double> p;
        K::softmax(z, p);
        for (int bi = 0; bi < n; ++bi) {
            double sum = 0.0;
            for (int i = 0; i < k; ++i) {
                CHECK(p.data[bi * k + i] > 0.0);
                CHECK(p.data[bi * k + i] < 1.0 + 1e-12);
                sum += p.data[bi * k + i];
            }
            CHECK(std::fabs(sum - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("softmax analytic values and shift invariance") {
    Tensor<double> z({1, 4}, {std::log(2.0), 0.0, 0.0, 0.0});
    Tensor<double> p;
    K::softmax(z, p);
    CHECK(p.data[0] == doctest::Approx(0.4).epsilon(1e-12));
    for (int i = 1; i < 4; ++i) CHECK(p.data[i] == doctest::Approx(0.2).epsilon(1e-12));

    Tensor<double> uniform({1, 4}, {3.0, 3.0, 3.0, 3.0});
    K::softmax(uniform, p);
    for (double v : p.data) CHECK(v == doctest::Approx(0.25));

    Tensor<double> shifted({1, 4}, {std::log(2.0) + 1000.0, 1000.0, 1000.0, 1000.0});
    K::softmax(shifted, p);
    CHECK(p.data[0] == doctest::Approx(0.4).epsilon(1e-12));  // max-shift keeps it finite
}

TEST_CASE("cross entropy analytic values") {
    Tensor<double> uniform({1, 4}, {0.25, 0.25, 0.25, 0.25});
    Tensor<double> onehot({1, 4}, {0.0, 1.0, 0.0, 0.0});
    CHECK(K::cross_entropy(uniform, onehot) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    Tensor<double> perfect({1, 4}, {0.0, 1.0, 0.0, 0.0});
    CHECK(K::cross_entropy(perfect, onehot) == doctest::Approx(0.0));

    // zero probability hits the floor instead of -inf
    Tensor<double> zero({1, 2}, {0.0, 1.0});
    Tensor<double> t({1, 2}, {1.0, 0.0});
    CHECK(K::cross_entropy(zero, t) == doctest::Approx(-std::log(1e-12)));

    // batch mean
    Tensor<double> two({2, 2}, {0.5, 0.5, 0.25, 0.75});
    Tensor<double> t2({2, 2}, {1.0, 0.0, 0.0, 1.0});
    CHECK(K::cross_entropy(two, t2) ==
          doctest::Approx(0.5 * (-std::log(0.5) - std::log(0.75))));
}

TEST_CASE("fused softmax/cross-entropy gradient is (p - t)/N") {
    Rng rng(0x9eadull);
    auto z = rand_tensor<double>({3, 5}, rng, -4.0, 4.0);
    Tensor<double> p, g;
    K::softmax(z, p);
    Tensor<double> t({3, 5});
    for (int bi = 0; bi < 3; ++bi) t.data[bi * 5 + static_cast<int>(rng.below(5))] = 1.0;
    K::softmax_xent_backward(p, t, g);
    for (int64_t i = 0; i < g.numel(); ++i)
        CHECK(g.data[i] == doctest::Approx((p.data[i] - t.data[i]) / 3.0).epsilon(1e-12));
}

#ifdef _OPENMP
TEST_CASE("results are bitwise identical across thread counts") {
    Rng rng(0x7427ull);
    auto x = rand_tensor<float>({2, 3, 12, 12}, rng);
    auto w = rand_tensor<float>({4, 3, 3, 3}, rng);
    auto b = rand_tensor<float>({4}, rng);
    Tensor<float> gamma({4}), beta({4});
    for (auto& v : gamma.data) v = 1.0f;

    const int before = omp_get_max_threads();
    std::vector<std::vector<float>> conv_runs, bn_runs, gw_runs;
    for (int threads : {1, 3}) {
        omp_set_num_threads(threads);
        Tensor<float> y;
        K::conv2d_forward(x, w, b, 1, 1, y);
        conv_runs.push_back(y.data);

        std::vector<float> rm(4, 0.0f), rv(4, 1.0f), istd;
        Tensor<float> yn, xh;
        K::batchnorm_forward(y, gamma, beta, rm, rv, true, 0.1f, 1e-5f, yn, xh, istd);
        bn_runs.push_back(yn.data);

        Tensor<float> gy = yn, gx, gw, gb;
        K::conv2d_backward(x, w, 1, 1, gy, gx, gw, gb);
        gw_runs.push_back(gw.data);
    }
    omp_set_num_threads(before);

    CHECK(conv_runs[0] == conv_runs[1]);
    CHECK(bn_runs[0] == bn_runs[1]);
    CHECK(gw_runs[0] == gw_runs[1]);
}
#endif

}  // TEST_SUITE
