#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "hivesig/audio.hpp"
#include "hivesig/dsp.hpp"

namespace hivesig::tfrepr {

// Dense row-major matrix; rows index frequency (row 0 = lowest), columns
// index time frames.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

struct CplxMatrix {
    int rows = 0;  // frequency bins
    int cols = 0;  // frames
    std::vector<std::complex<double>> data;
    std::complex<double>& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    std::complex<double> at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

struct StftConfig {
    int n_fft = 1024;
    int hop = 512;
    dsp::Window window = dsp::Window::hann;
    double log_floor = 1e-10;
};

struct MelBank {
    int n_mels = 64;
    int bins = 0;             // spectrum bins the bank applies to (n_fft/2+1)
    std::vector<double> weights;  // n_mels x bins, row-major, non-negative
    double f_min = 0.0;
    double f_max = 0.0;
    double weight(int mel, int bin) const { return weights[static_cast<size_t>(mel) * bins + bin]; }
};

struct SmoothingConfig {
    int time_window = 5;  // frames, odd
    int freq_window = 5;  // bins, odd
};

struct GammatoneConfig {
    int n_channels = 32;
    double f_min = 20.0;
    int order = 4;
    double bandwidth_scale = 1.019;  // multiplies ERB(fc)
    double phase = 0.0;
    double win_time = 0.025;
    double hop_time = 0.010;
    double log_floor = 1e-10;
};

enum class TFKind : uint8_t { spectrogram = 0, mel = 1, smoothed = 2, cochleagram = 3 };

const char* kind_name(TFKind k);
TFKind kind_from_name(const std::string& name);

struct TFImage {
    Matrix matrix;
    TFKind kind = TFKind::spectrogram;
    int raster_size = 0;
    int channels = 0;
    std::vector<float> raster;  // planar, channels x size x size, values in [0,1]
};

// Windowed, hopped DFT. Output has n_fft/2+1 rows and
// 1 + floor((len - n_fft)/hop) columns.
CplxMatrix stft(const audio::AudioClip& clip, const StftConfig& cfg);

int stft_frames(int64_t samples, const StftConfig& cfg);

// log(max(|X|^2, floor))
TFImage spectrogram(const audio::AudioClip& clip, const StftConfig& cfg);

MelBank build_mel_bank(int n_mels, int n_fft, int sample_rate, double f_min, double f_max);

TFImage mel_spectrogram(const audio::AudioClip& clip, const StftConfig& cfg, const MelBank& bank);

TFImage smoothed_spectrogram(const audio::AudioClip& clip, const StftConfig& cfg,
                             const SmoothingConfig& smooth);

// Moving average along time then frequency; border windows shrink to the
// valid neighbor count.
Matrix smooth_matrix(const Matrix& m, const SmoothingConfig& cfg);

// Glasberg-Moore equivalent rectangular bandwidth at frequency f (Hz).
double erb_bandwidth(double f_hz);

// Channel center frequencies, ERB-rate spaced from f_min to sample_rate/2,
// lowest first.
std::vector<double> erb_center_frequencies(const GammatoneConfig& cfg, int sample_rate);

// The bandpass impulse response A * t^(order-1) * exp(-2*pi*B*t) * cos(2*pi*fc*t + phase).
double gammatone_ir(const GammatoneConfig& cfg, double fc_hz, double amplitude, double t_seconds);

// Sampled impulse response, truncated where the envelope has decayed and
// scaled for unit magnitude response at fc.
std::vector<double> gammatone_fir(const GammatoneConfig& cfg, double fc_hz, int sample_rate);

TFImage cochleagram(const audio::AudioClip& clip, const GammatoneConfig& cfg);

// Fixed nine-stop colormap (dark violet to yellow) over [0,1]; rgb gets
// three components in [0,1].
void colormap(float v, float* rgb);

// Bilinear resize to size x size, then per-image min-max normalization to
// [0,1]. A flat matrix maps to all zeros. channels=3 applies a fixed
// colormap; channels=1 keeps the normalized plane.
std::vector<float> rasterize(const Matrix& m, int size, int channels);

// Attach a raster to the image in place.
void rasterize(TFImage& img, int size, int channels);

// Flat binary matrix container: "TFR1", u32 rows, u32 cols, u8 kind, then
// row-major little-endian f32.
void write_tfr(const std::string& path, const Matrix& m, TFKind kind);
struct TfrFile {
    Matrix matrix;
    TFKind kind;
};
TfrFile read_tfr(const std::string& path);

}  // namespace hivesig::tfrepr
