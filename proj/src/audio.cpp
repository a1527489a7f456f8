#include "hivesig/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hivesig/dsp.hpp"
#include "hivesig/errors.hpp"

namespace hivesig::audio {

namespace {

uint32_t read_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

AudioClip load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw MalformedHeader(path + ": not a RIFF/WAVE file");

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    bool have_fmt = false;
    const uint8_t* data = nullptr;
    uint32_t data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const uint8_t* hdr = bytes.data() + pos;
        const uint32_t chunk_len = read_u32(hdr + 4);
        const size_t body = pos + 8;
        if (body + chunk_len > bytes.size())
            throw MalformedHeader(path + ": truncated chunk");
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw MalformedHeader(path + ": short fmt chunk");
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr)
        throw MalformedHeader(path + ": missing fmt or data chunk");
    if (format != 1 && format != 3)
        throw UnsupportedEncoding(path + ": format tag " + std::to_string(format));
    if (channels < 1 || channels > 2)
        throw UnsupportedEncoding(path + ": " + std::to_string(channels) + " channels");
    if (format == 1 && bits != 8 && bits != 16 && bits != 24)
        throw UnsupportedEncoding(path + ": " + std::to_string(bits) + "-bit PCM");
    if (format == 3 && bits != 32)
        throw UnsupportedEncoding(path + ": " + std::to_string(bits) + "-bit float");
    if (rate == 0) throw MalformedHeader(path + ": zero sample rate");

    const uint32_t bytes_per_sample = bits / 8;
    const uint32_t frame_size = bytes_per_sample * channels;
    const uint32_t frames = frame_size ? data_len / frame_size : 0;
    if (frames == 0) throw EmptyAudio(path + ": no samples");

    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    clip.source_id = path;
    clip.samples.resize(frames);

    for (uint32_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (uint16_t ch = 0; ch < channels; ++ch) {
            const uint8_t* s = data + f * frame_size + ch * bytes_per_sample;
            double v = 0.0;
            if (format == 3) {
                float fl;
                std::memcpy(&fl, s, 4);
                v = fl;
            } else if (bits == 8) {
                v = (static_cast<int>(s[0]) - 128) / 128.0;  // 8-bit WAV is unsigned
            } else if (bits == 16) {
                v = static_cast<int16_t>(s[0] | (s[1] << 8)) / 32768.0;
            } else {  // 24
                int32_t raw = s[0] | (s[1] << 8) | (s[2] << 16);
                if (raw & 0x800000) raw |= ~0xFFFFFF;
                v = raw / 8388608.0;
            }
            acc += v;
        }
        clip.samples[f] = static_cast<float>(acc / channels);
    }
    clamp_renormalize(clip.samples);
    return clip;
}

void save_wav(const std::string& path, const AudioClip& clip) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write " + path);
    const uint32_t data_len = static_cast<uint32_t>(clip.samples.size() * 2);
    const uint32_t riff_len = 36 + data_len;
    auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    out.write("RIFF", 4);
    put_u32(riff_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(static_cast<uint32_t>(clip.sample_rate));
    put_u32(static_cast<uint32_t>(clip.sample_rate) * 2);
    put_u16(2);
    put_u16(16);
    out.write("data", 4);
    put_u32(data_len);
    for (float s : clip.samples) {
        const double c = std::clamp(static_cast<double>(s), -1.0, 1.0);
        const int16_t q = static_cast<int16_t>(std::lround(c * 32767.0));
        put_u16(static_cast<uint16_t>(q));
    }
    if (!out) throw IoFailure("write failed for " + path);
}

namespace {

// Zeroth-order modified Bessel function, for the Kaiser window.
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half / k) * (half / k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = dsp::kPi * x;
    return std::sin(px) / px;
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
    if (target_rate <= 0) throw InvalidRate("target rate must be positive");
    if (clip.sample_rate <= 0) throw InvalidRate("source rate must be positive");
    if (target_rate == clip.sample_rate) return clip;

    const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
    const int64_t in_len = static_cast<int64_t>(clip.samples.size());
    const int64_t out_len = static_cast<int64_t>(std::llround(in_len * ratio));

    AudioClip out;
    out.sample_rate = target_rate;
    out.label = clip.label;
    out.source_id = clip.source_id;
    out.samples.resize(out_len);

    // Kaiser-windowed sinc. Cutoff sits at the narrower Nyquist band; the
    // kernel widens by 1/ratio when downsampling.
    const double cutoff = 0.5 * std::min(1.0, ratio) * 0.95;
    const int zero_crossings = 24;
    const double support = zero_crossings / (2.0 * cutoff);
    const double beta = 10.0;
    const double i0_beta = bessel_i0(beta);

    const float* x = clip.samples.data();
    float* y = out.samples.data();
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < out_len; ++n) {
        const double center = n / ratio;
        const int64_t first = std::max<int64_t>(0, static_cast<int64_t>(std::ceil(center - support)));
        const int64_t last = std::min<int64_t>(in_len - 1, static_cast<int64_t>(std::floor(center + support)));
        double acc = 0.0, wsum = 0.0;
        for (int64_t m = first; m <= last; ++m) {
            const double d = m - center;
            const double t = d / support;  // in [-1, 1]
            const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - t * t))) / i0_beta;
            const double w = 2.0 * cutoff * sinc(2.0 * cutoff * d) * win;
            acc += w * x[m];
            wsum += w;
        }
        y[n] = wsum != 0.0 ? static_cast<float>(acc / wsum) : 0.0f;
    }
    clamp_renormalize(out.samples);
    return out;
}

std::vector<AudioClip> segment(const AudioClip& clip, double seconds) {
    if (seconds <= 0.0) throw InvalidFactor("segment length must be positive");
    const int64_t win = std::llround(seconds * clip.sample_rate);
    if (win <= 0) throw InvalidFactor("segment shorter than one sample");
    const int64_t n = static_cast<int64_t>(clip.samples.size()) / win;
    std::vector<AudioClip> out;
    out.reserve(n);
    for (int64_t i = 0; i < n; ++i) {
        AudioClip seg;
        seg.sample_rate = clip.sample_rate;
        seg.label = clip.label;
        seg.source_id = clip.source_id + "#" + std::to_string(i);
        seg.samples.assign(clip.samples.begin() + i * win, clip.samples.begin() + (i + 1) * win);
        out.push_back(std::move(seg));
    }
    return out;
}

namespace {

// Phase-vocoder time stretch: duration scales by `factor`, pitch unchanged.
std::vector<float> stretch_pv(const std::vector<float>& x, double factor) {
    const int64_t in_len = static_cast<int64_t>(x.size());
    const int64_t out_target = static_cast<int64_t>(std::llround(in_len * factor));
    if (out_target <= 0) return {};

    int n_fft = 2048;
    while (n_fft > 16 && n_fft > in_len) n_fft >>= 1;
    if (in_len < n_fft) {
        // Too short for spectral processing; duration change via linear read.
        std::vector<float> y(out_target);
        for (int64_t i = 0; i < out_target; ++i) {
            const double p = i / factor;
            const int64_t i0 = std::min<int64_t>(in_len - 1, static_cast<int64_t>(p));
            const int64_t i1 = std::min<int64_t>(in_len - 1, i0 + 1);
            const double f = p - i0;
            y[i] = static_cast<float>((1.0 - f) * x[i0] + f * x[i1]);
        }
        return y;
    }

    const int hop_a = n_fft / 4;
    const int hop_s = std::max<int>(1, static_cast<int>(std::lround(hop_a * factor)));
    const int64_t frames = 1 + (in_len - n_fft) / hop_a;
    const std::vector<double> win = dsp::make_window(dsp::Window::hann, n_fft);
    dsp::FftPlan plan(n_fft);

    const int bins = n_fft / 2 + 1;
    std::vector<double> prev_phase(bins, 0.0), out_phase(bins, 0.0);
    std::vector<double> acc(static_cast<size_t>(frames - 1) * hop_s + n_fft, 0.0);
    std::vector<double> norm(acc.size(), 0.0);
    std::vector<dsp::cplx> f(n_fft);

    for (int64_t t = 0; t < frames; ++t) {
        const float* seg = x.data() + t * hop_a;
        for (int i = 0; i < n_fft; ++i) f[i] = dsp::cplx(seg[i] * win[i], 0.0);
        plan.forward(f.data());

        for (int k = 0; k < bins; ++k) {
            const double mag = std::abs(f[k]);
            const double phase = std::arg(f[k]);
            const double omega = 2.0 * dsp::kPi * k / n_fft;
            if (t == 0) {
                out_phase[k] = phase;
            } else {
                double dev = phase - prev_phase[k] - omega * hop_a;
                dev -= 2.0 * dsp::kPi * std::round(dev / (2.0 * dsp::kPi));
                const double freq = omega + dev / hop_a;
                out_phase[k] += freq * hop_s;
            }
            prev_phase[k] = phase;
            f[k] = std::polar(mag, out_phase[k]);
        }
        for (int k = bins; k < n_fft; ++k) f[k] = std::conj(f[n_fft - k]);

        plan.inverse(f.data());
        double* a = acc.data() + t * hop_s;
        double* w2 = norm.data() + t * hop_s;
        for (int i = 0; i < n_fft; ++i) {
            a[i] += f[i].real() * win[i];
            w2[i] += win[i] * win[i];
        }
    }

    std::vector<float> y(out_target, 0.0f);
    const int64_t have = static_cast<int64_t>(acc.size());
    for (int64_t i = 0; i < out_target && i < have; ++i)
        y[i] = norm[i] > 1e-9 ? static_cast<float>(acc[i] / norm[i]) : 0.0f;
    return y;
}

AudioClip speed_change(const AudioClip& clip, double factor) {
    // Resample and keep the original rate label; both pitch and duration move.
    const int inner_rate = std::max(1, static_cast<int>(std::lround(clip.sample_rate / factor)));
    AudioClip shifted = resample(clip, inner_rate);
    shifted.sample_rate = clip.sample_rate;
    return shifted;
}

}  // namespace

AudioClip augment(const AudioClip& clip, const AugmentSpec& spec) {
    using Kind = AugmentSpec::Kind;
    AudioClip out = clip;
    switch (spec.kind) {
        case Kind::time_stretch: {
            if (spec.factor <= 0.0) throw InvalidFactor("stretch factor must be positive");
            if (spec.factor == 1.0) return clip;
            out.samples = stretch_pv(clip.samples, spec.factor);
            break;
        }
        case Kind::speed_change: {
            if (spec.factor <= 0.0) throw InvalidFactor("speed factor must be positive");
            if (spec.factor == 1.0) return clip;
            out = speed_change(clip, spec.factor);
            break;
        }
        case Kind::pitch_shift: {
            if (std::abs(spec.semitones) > 12.0)
                throw InvalidFactor("pitch shift beyond +/-12 semitones");
            if (spec.semitones == 0.0) return clip;
            const double f = std::pow(2.0, spec.semitones / 12.0);
            out = speed_change(clip, f);      // duration /f, frequencies *f
            out.samples = stretch_pv(out.samples, f);  // restore duration
            break;
        }
    }
    clamp_renormalize(out.samples);
    return out;
}

void clamp_renormalize(std::vector<float>& samples) {
    float peak = 0.0f;
    for (float s : samples) peak = std::max(peak, std::abs(s));
    if (peak > 1.0f) {
        const float inv = 1.0f / peak;
        for (float& s : samples) s *= inv;
    }
    for (float& s : samples) s = std::clamp(s, -1.0f, 1.0f);
}

}  // namespace hivesig::audio
