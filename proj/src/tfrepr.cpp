#include "hivesig/tfrepr.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hivesig/errors.hpp"

namespace hivesig::tfrepr {

const char* kind_name(TFKind k) {
    switch (k) {
        case TFKind::spectrogram: return "spectrogram";
        case TFKind::mel: return "mel";
        case TFKind::smoothed: return "smoothed";
        case TFKind::cochleagram: return "cochleagram";
    }
    return "?";
}

TFKind kind_from_name(const std::string& name) {
    if (name == "spectrogram") return TFKind::spectrogram;
    if (name == "mel") return TFKind::mel;
    if (name == "smoothed") return TFKind::smoothed;
    if (name == "cochleagram") return TFKind::cochleagram;
    throw UsageError("unknown representation: " + name);
}

int stft_frames(int64_t samples, const StftConfig& cfg) {
    if (samples < cfg.n_fft) return 0;
    return static_cast<int>(1 + (samples - cfg.n_fft) / cfg.hop);
}

CplxMatrix stft(const audio::AudioClip& clip, const StftConfig& cfg) {
    if (!dsp::is_pow2(cfg.n_fft)) throw UsageError("n_fft must be a power of two");
    if (cfg.hop <= 0 || cfg.hop > cfg.n_fft) throw UsageError("hop must be in (0, n_fft]");
    const int64_t len = static_cast<int64_t>(clip.samples.size());
    if (len < cfg.n_fft) throw TooShort("clip shorter than one frame");

    const int frames = stft_frames(len, cfg);
    const int bins = cfg.n_fft / 2 + 1;
    const std::vector<double> win = dsp::make_window(cfg.window, cfg.n_fft);
    dsp::FftPlan plan(cfg.n_fft);

    CplxMatrix out;
    out.rows = bins;
    out.cols = frames;
    out.data.resize(static_cast<size_t>(bins) * frames);

#pragma omp parallel
    {
        std::vector<dsp::cplx> buf(cfg.n_fft);
#pragma omp for schedule(static)
        for (int r = 0; r < frames; ++r) {
            const float* seg = clip.samples.data() + static_cast<int64_t>(r) * cfg.hop;
            for (int i = 0; i < cfg.n_fft; ++i) buf[i] = dsp::cplx(seg[i] * win[i], 0.0);
            plan.forward(buf.data());
            for (int k = 0; k < bins; ++k) out.at(k, r) = buf[k];
        }
    }
    return out;
}

namespace {

Matrix log_power(const CplxMatrix& x, double floor_eps) {
    Matrix m(x.rows, x.cols);
    for (size_t i = 0; i < x.data.size(); ++i)
        m.data[i] = std::log(std::max(std::norm(x.data[i]), floor_eps));
    return m;
}

}  // namespace

TFImage spectrogram(const audio::AudioClip& clip, const StftConfig& cfg) {
    TFImage img;
    img.kind = TFKind::spectrogram;
    img.matrix = log_power(stft(clip, cfg), cfg.log_floor);
    return img;
}

namespace {

double hz_to_mel(double f) { return 1127.0 * std::log(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::exp(m / 1127.0) - 1.0); }

}  // namespace

MelBank build_mel_bank(int n_mels, int n_fft, int sample_rate, double f_min, double f_max) {
    if (n_mels < 1) throw UsageError("mel bank needs at least one filter");
    if (f_max <= 0.0) f_max = sample_rate / 2.0;
    MelBank bank;
    bank.n_mels = n_mels;
    bank.bins = n_fft / 2 + 1;
    bank.f_min = f_min;
    bank.f_max = f_max;
    bank.weights.assign(static_cast<size_t>(n_mels) * bank.bins, 0.0);

    // n_mels triangles over n_mels+2 edge frequencies, equally spaced in mel.
    std::vector<double> edges(n_mels + 2);
    const double m_lo = hz_to_mel(f_min);
    const double m_hi = hz_to_mel(f_max);
    for (int i = 0; i < n_mels + 2; ++i)
        edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (n_mels + 1));

    const double hz_per_bin = static_cast<double>(sample_rate) / n_fft;
    for (int m = 0; m < n_mels; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (int k = 0; k < bank.bins; ++k) {
            const double f = k * hz_per_bin;
            double w = 0.0;
            if (f > lo && f < mid && mid > lo)
                w = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi && hi > mid)
                w = (hi - f) / (hi - mid);
            bank.weights[static_cast<size_t>(m) * bank.bins + k] = std::max(0.0, w);
        }
    }
    return bank;
}

TFImage mel_spectrogram(const audio::AudioClip& clip, const StftConfig& cfg, const MelBank& bank) {
    const CplxMatrix x = stft(clip, cfg);
    if (bank.bins != x.rows)
        throw ShapeMismatch("mel bank covers " + std::to_string(bank.bins) + " bins, spectrum has " +
                            std::to_string(x.rows));
    TFImage img;
    img.kind = TFKind::mel;
    img.matrix = Matrix(bank.n_mels, x.cols);

#pragma omp parallel for schedule(static)
    for (int m = 0; m < bank.n_mels; ++m) {
        for (int r = 0; r < x.cols; ++r) {
            double acc = 0.0;
            for (int k = 0; k < x.rows; ++k)
                acc += bank.weight(m, k) * std::norm(x.at(k, r));
            img.matrix.at(m, r) = std::log(std::max(acc, cfg.log_floor));
        }
    }
    return img;
}

Matrix smooth_matrix(const Matrix& m, const SmoothingConfig& cfg) {
    if (cfg.time_window < 1 || cfg.freq_window < 1 || cfg.time_window % 2 == 0 ||
        cfg.freq_window % 2 == 0)
        throw UsageError("smoothing windows must be odd and >= 1");
    if (cfg.time_window > m.cols || cfg.freq_window > m.rows)
        throw TooShort("smoothing window larger than matrix");

    const int ht = cfg.time_window / 2;
    const int hf = cfg.freq_window / 2;

    Matrix tmp(m.rows, m.cols);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            const int lo = std::max(0, c - ht), hi = std::min(m.cols - 1, c + ht);
            double acc = 0.0;
            for (int t = lo; t <= hi; ++t) acc += m.at(r, t);
            tmp.at(r, c) = acc / (hi - lo + 1);
        }
    }
    Matrix out(m.rows, m.cols);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < m.cols; ++c) {
        for (int r = 0; r < m.rows; ++r) {
            const int lo = std::max(0, r - hf), hi = std::min(m.rows - 1, r + hf);
            double acc = 0.0;
            for (int f = lo; f <= hi; ++f) acc += tmp.at(f, c);
            out.at(r, c) = acc / (hi - lo + 1);
        }
    }
    return out;
}

TFImage smoothed_spectrogram(const audio::AudioClip& clip, const StftConfig& cfg,
                             const SmoothingConfig& smooth) {
    TFImage img = spectrogram(clip, cfg);
    img.kind = TFKind::smoothed;
    img.matrix = smooth_matrix(img.matrix, smooth);
    return img;
}

double erb_bandwidth(double f_hz) {
    return 24.7 * (4.37 * f_hz / 1000.0 + 1.0);
}

namespace {

double hz_to_erb_rate(double f) { return 21.4 * std::log10(4.37 * f / 1000.0 + 1.0); }
double erb_rate_to_hz(double r) { return (std::pow(10.0, r / 21.4) - 1.0) * 1000.0 / 4.37; }

}  // namespace

std::vector<double> erb_center_frequencies(const GammatoneConfig& cfg, int sample_rate) {
    const double f_max = sample_rate / 2.0;
    if (cfg.f_min <= 0.0 || cfg.f_min >= f_max)
        throw InvalidBand("f_min must lie in (0, sample_rate/2)");
    std::vector<double> centers(cfg.n_channels);
    const double lo = hz_to_erb_rate(cfg.f_min);
    const double hi = hz_to_erb_rate(f_max);
    for (int c = 0; c < cfg.n_channels; ++c) {
        const double r = cfg.n_channels == 1 ? lo : lo + (hi - lo) * c / (cfg.n_channels - 1);
        centers[c] = erb_rate_to_hz(r);
    }
    return centers;
}

double gammatone_ir(const GammatoneConfig& cfg, double fc_hz, double amplitude, double t_seconds) {
    if (t_seconds < 0.0) return 0.0;
    const double b = cfg.bandwidth_scale * erb_bandwidth(fc_hz);
    return amplitude * std::pow(t_seconds, cfg.order - 1) * std::exp(-2.0 * dsp::kPi * b * t_seconds) *
           std::cos(2.0 * dsp::kPi * fc_hz * t_seconds + cfg.phase);
}

std::vector<double> gammatone_fir(const GammatoneConfig& cfg, double fc_hz, int sample_rate) {
    const double b = cfg.bandwidth_scale * erb_bandwidth(fc_hz);
    // Envelope t^(j-1) exp(-2 pi B t) peaks at (j-1)/(2 pi B); keep taps
    // until it has fallen to 1e-4 of the peak, capped at half a second.
    const double t_peak = (cfg.order - 1) / (2.0 * dsp::kPi * b);
    auto envelope = [&](double t) {
        return std::pow(t, cfg.order - 1) * std::exp(-2.0 * dsp::kPi * b * t);
    };
    const double peak = cfg.order > 1 ? envelope(t_peak) : 1.0;
    double t_end = std::max(t_peak * 2.0, 1.0 / b);
    while (t_end < 0.5 && envelope(t_end) > 1e-4 * peak) t_end *= 1.25;
    t_end = std::min(t_end, 0.5);

    const int len = std::max(4, static_cast<int>(std::ceil(t_end * sample_rate)));
    std::vector<double> h(len);
    for (int n = 0; n < len; ++n)
        h[n] = gammatone_ir(cfg, fc_hz, 1.0, static_cast<double>(n) / sample_rate);

    const double gain = std::abs(dsp::dft_bin(h.data(), len, fc_hz / sample_rate));
    if (gain > 0.0)
        for (double& v : h) v /= gain;
    return h;
}

namespace {

// Overlap-add FIR filtering of one signal through many kernels. The block
// spectra are computed once and shared across channels.
std::vector<std::vector<double>> fir_filter_bank(const std::vector<float>& x,
                                                 const std::vector<std::vector<double>>& kernels) {
    const int64_t n = static_cast<int64_t>(x.size());
    size_t l_max = 0;
    for (const auto& k : kernels) l_max = std::max(l_max, k.size());

    int fft_n = 1024;
    while (fft_n < static_cast<int>(2 * l_max)) fft_n <<= 1;
    const int block = fft_n - static_cast<int>(l_max) + 1;
    const int64_t n_blocks = (n + block - 1) / block;
    dsp::FftPlan plan(fft_n);

    std::vector<std::vector<dsp::cplx>> block_ffts(n_blocks);
#pragma omp parallel for schedule(static)
    for (int64_t bi = 0; bi < n_blocks; ++bi) {
        std::vector<dsp::cplx> buf(fft_n, dsp::cplx(0.0, 0.0));
        const int64_t s = bi * block;
        const int64_t take = std::min<int64_t>(block, n - s);
        for (int64_t i = 0; i < take; ++i) buf[i] = dsp::cplx(x[s + i], 0.0);
        plan.forward(buf.data());
        block_ffts[bi] = std::move(buf);
    }

    std::vector<std::vector<double>> out(kernels.size());
#pragma omp parallel for schedule(dynamic)
    for (size_t c = 0; c < kernels.size(); ++c) {
        std::vector<dsp::cplx> hf(fft_n, dsp::cplx(0.0, 0.0));
        for (size_t i = 0; i < kernels[c].size(); ++i) hf[i] = dsp::cplx(kernels[c][i], 0.0);
        plan.forward(hf.data());

        std::vector<double> y(n, 0.0);
        std::vector<dsp::cplx> buf(fft_n);
        for (int64_t bi = 0; bi < n_blocks; ++bi) {
            const std::vector<dsp::cplx>& bf = block_ffts[bi];
            for (int i = 0; i < fft_n; ++i) buf[i] = bf[i] * hf[i];
            plan.inverse(buf.data());
            const int64_t s = bi * block;
            const int64_t until = std::min<int64_t>(n, s + fft_n);
            for (int64_t i = s; i < until; ++i) y[i] += buf[i - s].real();
        }
        out[c] = std::move(y);
    }
    return out;
}

}  // namespace

TFImage cochleagram(const audio::AudioClip& clip, const GammatoneConfig& cfg) {
    if (cfg.n_channels < 1) throw UsageError("need at least one channel");
    if (!(cfg.win_time > cfg.hop_time && cfg.hop_time > 0.0))
        throw UsageError("need win_time > hop_time > 0");
    const std::vector<double> centers = erb_center_frequencies(cfg, clip.sample_rate);

    const int win = std::max(1, static_cast<int>(std::lround(cfg.win_time * clip.sample_rate)));
    const int hop = std::max(1, static_cast<int>(std::lround(cfg.hop_time * clip.sample_rate)));
    const int64_t n = static_cast<int64_t>(clip.samples.size());
    if (n < win) throw TooShort("clip shorter than one integration window");
    const int frames = static_cast<int>(1 + (n - win) / hop);

    std::vector<std::vector<double>> kernels(cfg.n_channels);
    for (int c = 0; c < cfg.n_channels; ++c)
        kernels[c] = gammatone_fir(cfg, centers[c], clip.sample_rate);

    const std::vector<std::vector<double>> filtered = fir_filter_bank(clip.samples, kernels);

    TFImage img;
    img.kind = TFKind::cochleagram;
    img.matrix = Matrix(cfg.n_channels, frames);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < cfg.n_channels; ++c) {
        const std::vector<double>& y = filtered[c];
        for (int r = 0; r < frames; ++r) {
            const double* seg = y.data() + static_cast<int64_t>(r) * hop;
            double acc = 0.0;
            for (int i = 0; i < win; ++i) acc += seg[i] * seg[i];
            img.matrix.at(c, r) = std::log(std::max(acc / win, cfg.log_floor));
        }
    }
    return img;
}

namespace {

// Fixed nine-stop colormap (dark violet to yellow), linear interpolation.
constexpr float kStops[9][3] = {
    {0.267f, 0.005f, 0.329f}, {0.278f, 0.176f, 0.483f}, {0.231f, 0.322f, 0.545f},
    {0.173f, 0.447f, 0.557f}, {0.129f, 0.569f, 0.549f}, {0.153f, 0.678f, 0.506f},
    {0.369f, 0.788f, 0.384f}, {0.667f, 0.863f, 0.196f}, {0.992f, 0.906f, 0.145f},
};

}  // namespace

void colormap(float v, float* rgb) {
    const float pos = std::clamp(v, 0.0f, 1.0f) * 8.0f;
    const int i = std::min(7, static_cast<int>(pos));
    const float f = pos - i;
    for (int ch = 0; ch < 3; ++ch)
        rgb[ch] = kStops[i][ch] * (1.0f - f) + kStops[i + 1][ch] * f;
}

std::vector<float> rasterize(const Matrix& m, int size, int channels) {
    if (m.rows <= 0 || m.cols <= 0) throw EmptyMatrix("cannot rasterize an empty matrix");
    if (channels != 1 && channels != 3) throw UsageError("raster channels must be 1 or 3");

    // Bilinear resize with half-pixel centers so the identity size is exact.
    std::vector<double> plane(static_cast<size_t>(size) * size);
    const double sr = static_cast<double>(m.rows) / size;
    const double sc = static_cast<double>(m.cols) / size;
    for (int r = 0; r < size; ++r) {
        const double src_r = std::clamp((r + 0.5) * sr - 0.5, 0.0, m.rows - 1.0);
        const int r0 = static_cast<int>(src_r);
        const int r1 = std::min(m.rows - 1, r0 + 1);
        const double fr = src_r - r0;
        for (int c = 0; c < size; ++c) {
            const double src_c = std::clamp((c + 0.5) * sc - 0.5, 0.0, m.cols - 1.0);
            const int c0 = static_cast<int>(src_c);
            const int c1 = std::min(m.cols - 1, c0 + 1);
            const double fc = src_c - c0;
            const double top = m.at(r0, c0) * (1.0 - fc) + m.at(r0, c1) * fc;
            const double bot = m.at(r1, c0) * (1.0 - fc) + m.at(r1, c1) * fc;
            plane[static_cast<size_t>(r) * size + c] = top * (1.0 - fr) + bot * fr;
        }
    }

    const auto [mn_it, mx_it] = std::minmax_element(plane.begin(), plane.end());
    const double mn = *mn_it, mx = *mx_it;
    const double range = mx - mn;

    std::vector<float> out(static_cast<size_t>(channels) * size * size, 0.0f);
    for (size_t i = 0; i < plane.size(); ++i) {
        const float v = range > 0.0 ? static_cast<float>((plane[i] - mn) / range) : 0.0f;
        if (channels == 1) {
            out[i] = v;
        } else {
            float rgb[3];
            colormap(v, rgb);
            for (int ch = 0; ch < 3; ++ch)
                out[static_cast<size_t>(ch) * size * size + i] = rgb[ch];
        }
    }
    return out;
}

void rasterize(TFImage& img, int size, int channels) {
    img.raster = rasterize(img.matrix, size, channels);
    img.raster_size = size;
    img.channels = channels;
}

void write_tfr(const std::string& path, const Matrix& m, TFKind kind) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write " + path);
    out.write("TFR1", 4);
    const uint32_t rows = static_cast<uint32_t>(m.rows), cols = static_cast<uint32_t>(m.cols);
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    const uint8_t k = static_cast<uint8_t>(kind);
    out.write(reinterpret_cast<const char*>(&k), 1);
    for (double v : m.data) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
    }
    if (!out) throw IoFailure("write failed for " + path);
}

TfrFile read_tfr(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TFR1", 4) != 0)
        throw VersionMismatch(path + ": bad TFR1 magic");
    uint32_t rows = 0, cols = 0;
    uint8_t kind = 0;
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    in.read(reinterpret_cast<char*>(&kind), 1);
    if (!in || rows == 0 || cols == 0 || kind > 3)
        throw MalformedHeader(path + ": bad TFR1 header");
    TfrFile f;
    f.kind = static_cast<TFKind>(kind);
    f.matrix = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    for (double& v : f.matrix.data) {
        float fl;
        in.read(reinterpret_cast<char*>(&fl), 4);
        v = fl;
    }
    if (!in) throw MalformedHeader(path + ": truncated TFR1 payload");
    return f;
}

}  // namespace hivesig::tfrepr
