#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "hivesig/dsp.hpp"
#include "hivesig/ref_kernels.hpp"
#include "hivesig/rng.hpp"

using hivesig::dsp::cplx;
using hivesig::dsp::kPi;

namespace {

std::vector<cplx> random_signal(int n, uint64_t seed) {
    hivesig::Rng rng(seed);
    std::vector<cplx> x(n);
    for (auto& v : x) v = cplx(rng.uniform() * 2.0 - 1.0, rng.uniform() * 2.0 - 1.0);
    return x;
}

}  // namespace

TEST_SUITE("dsp") {

TEST_CASE("fft agrees with the quadratic transform") {
    for (int n : {8, 64, 512}) {
        const auto x = random_signal(n, 0xD5Fu + n);
        const auto fast = hivesig::dsp::fft(x);
        const auto slow = hivesig::refk::naive_dft(x);
        double worst = 0.0;
        for (int k = 0; k < n; ++k) worst = std::max(worst, std::abs(fast[k] - slow[k]));
        CHECK(worst < 1e-9 * n);
    }
}

TEST_CASE("inverse transform returns the input") {
    const auto x = random_signal(256, 42);
    const auto back = hivesig::dsp::ifft(hivesig::dsp::fft(x));
    double worst = 0.0;
    for (size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(back[i] - x[i]));
    CHECK(worst < 1e-12);
}

TEST_CASE("energy is conserved across the transform") {
    const int n = 1024;
    const auto x = random_signal(n, 7);
    const auto f = hivesig::dsp::fft(x);
    double et = 0.0, ef = 0.0;
    for (const auto& v : x) et += std::norm(v);
    for (const auto& v : f) ef += std::norm(v);
    CHECK(std::abs(et - ef / n) < 1e-9 * et);
}

TEST_CASE("a pure tone lands in its bin") {
    const int n = 256, k0 = 19;
    std::vector<cplx> x(n);
    for (int t = 0; t < n; ++t) x[t] = cplx(std::cos(2.0 * kPi * k0 * t / n), 0.0);
    const auto f = hivesig::dsp::fft(x);
    CHECK(std::abs(f[k0]) == doctest::Approx(n / 2.0).epsilon(1e-9));
    CHECK(std::abs(f[n - k0]) == doctest::Approx(n / 2.0).epsilon(1e-9));
    for (int k = 0; k < n; ++k)
        if (k != k0 && k != n - k0) CHECK(std::abs(f[k]) < 1e-8);
}

TEST_CASE("single-bin probe matches the full transform") {
    const int n = 200;  // not a power of two; dft_bin has no such restriction
    hivesig::Rng rng(99);
    std::vector<double> x(n);
    std::vector<cplx> xc(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.uniform() * 2.0 - 1.0;
        xc[i] = cplx(x[i], 0.0);
    }
    const auto full = hivesig::refk::naive_dft(xc);
    for (int k : {0, 1, 17, 100, 199}) {
        const cplx probe = hivesig::dsp::dft_bin(x.data(), n, static_cast<double>(k) / n);
        CHECK(std::abs(probe - full[k]) < 1e-9 * n);
    }
}

TEST_CASE("plan rejects non power-of-two lengths") {
    CHECK_THROWS_AS(hivesig::dsp::FftPlan(48), std::invalid_argument);
    CHECK_NOTHROW(hivesig::dsp::FftPlan(64));
}

TEST_CASE("hann window shape") {
    const int n = 64;
    const auto w = hivesig::dsp::make_window(hivesig::dsp::Window::hann, n);
    CHECK(w[0] == doctest::Approx(0.0));
    CHECK(w[n / 2] == doctest::Approx(1.0));
    // periodic form: w[i] == w[n-i] for interior points
    for (int i = 1; i < n; ++i) CHECK(w[i] == doctest::Approx(w[n - i]));
    double sum = 0.0;
    for (double v : w) sum += v;
    CHECK(sum == doctest::Approx(n / 2.0));  // mean of 0.5 - 0.5 cos over a full period

    const auto r = hivesig::dsp::make_window(hivesig::dsp::Window::rectangular, n);
    for (double v : r) CHECK(v == 1.0);
}

TEST_CASE("deterministic rng streams") {
    hivesig::Rng a(123), b(123), c(124);
    for (int i = 0; i < 100; ++i) {
        const uint64_t va = a.next();
        CHECK(va == b.next());
        CHECK(va != c.next());
    }

    // uniform_at is a pure function of (seed, index)
    CHECK(hivesig::uniform_at(5, 10) == hivesig::uniform_at(5, 10));
    CHECK(hivesig::uniform_at(5, 10) != hivesig::uniform_at(5, 11));
    CHECK(hivesig::uniform_at(6, 10) != hivesig::uniform_at(5, 10));

    // rough distribution sanity for normal(): mean near 0, sd near 1
    hivesig::Rng g(2024);
    double s = 0.0, s2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double v = g.normal();
        s += v;
        s2 += v * v;
    }
    CHECK(std::abs(s / n) < 0.03);
    CHECK(std::abs(s2 / n - 1.0) < 0.05);

    // below(n) stays in range and hits every residue
    hivesig::Rng d(9);
    std::vector<int> seen(7, 0);
    for (int i = 0; i < 700; ++i) ++seen[d.below(7)];
    for (int cnt : seen) CHECK(cnt > 0);
}

}  // TEST_SUITE
