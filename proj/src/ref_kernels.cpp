#include "hivesig/ref_kernels.hpp"

#include <cmath>

namespace hivesig::refk {

std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
    const size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    const double w0 = -2.0 * 3.14159265358979323846 / static_cast<double>(n);
    for (size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (size_t t = 0; t < n; ++t) {
            const double a = w0 * static_cast<double>(k) * static_cast<double>(t);
            acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
        }
        out[k] = acc;
    }
    return out;
}

std::vector<double> fir_direct(const std::vector<float>& x, const std::vector<double>& h) {
    const int64_t n = static_cast<int64_t>(x.size());
    const int64_t m = static_cast<int64_t>(h.size());
    std::vector<double> y(n, 0.0);
    for (int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const int64_t kmax = std::min(m - 1, i);
        for (int64_t k = 0; k <= kmax; ++k) acc += h[k] * x[i - k];
        y[i] = acc;
    }
    return y;
}

}  // namespace hivesig::refk
