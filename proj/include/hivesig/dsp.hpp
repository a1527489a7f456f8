#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace hivesig::dsp {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Radix-2 in-place FFT with precomputed twiddles and bit-reversal table.
// Reuse one plan when transforming many blocks of the same length.
class FftPlan {
public:
    explicit FftPlan(int n);

    int size() const { return n_; }
    void forward(cplx* a) const;
    void inverse(cplx* a) const;  // includes the 1/n scale

private:
    int n_;
    std::vector<uint32_t> rev_;
    std::vector<cplx> tw_;  // exp(-2*pi*i*k/n), k < n/2
};

std::vector<cplx> fft(std::vector<cplx> a);
std::vector<cplx> ifft(std::vector<cplx> a);

// Single-bin DFT of a real signal at an arbitrary normalized frequency
// (cycles per sample).
cplx dft_bin(const double* x, int64_t n, double freq_per_sample);

enum class Window { hann, rectangular };

// Periodic variants, length n.
std::vector<double> make_window(Window w, int n);

}  // namespace hivesig::dsp
