#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hivesig/audio.hpp"
#include "hivesig/dsp.hpp"
#include "hivesig/errors.hpp"

namespace fs = std::filesystem;
using namespace hivesig;

namespace {

fs::path tmp_dir() {
    const fs::path p = fs::temp_directory_path() / "hivesig_audio_tests";
    fs::create_directories(p);
    return p;
}

audio::AudioClip sine(double freq, double seconds, int rate, double amp = 0.5) {
    audio::AudioClip c;
    c.sample_rate = rate;
    const int64_t n = std::llround(seconds * rate);
    c.samples.resize(n);
    for (int64_t i = 0; i < n; ++i)
        c.samples[i] = static_cast<float>(amp * std::sin(2.0 * dsp::kPi * freq * i / rate));
    return c;
}

// Frequency of the strongest component, by scanning single-bin probes.
double dominant_freq(const audio::AudioClip& c, double lo, double hi, double step) {
    std::vector<double> x(c.samples.begin(), c.samples.end());
    double best_f = lo, best_m = -1.0;
    for (double f = lo; f <= hi; f += step) {
        const double m = std::abs(dsp::dft_bin(x.data(), x.size(), f / c.sample_rate));
        if (m > best_m) {
            best_m = m;
            best_f = f;
        }
    }
    return best_f;
}

void write_bytes(const fs::path& p, const std::vector<uint8_t>& b) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), b.size());
}

void push_u32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xFF);
}
void push_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(v & 0xFF);
    b.push_back(v >> 8);
}
void push_tag(std::vector<uint8_t>& b, const char* tag) {
    b.insert(b.end(), tag, tag + 4);
}

// Hand-rolled WAV with arbitrary format fields, for decoder tests.
std::vector<uint8_t> make_wav(uint16_t fmt, uint16_t channels, uint32_t rate, uint16_t bits,
                              const std::vector<uint8_t>& payload, bool junk_chunk = false) {
    std::vector<uint8_t> b;
    push_tag(b, "RIFF");
    push_u32(b, 0);  // patched below
    push_tag(b, "WAVE");
    push_tag(b, "fmt ");
    push_u32(b, 16);
    push_u16(b, fmt);
    push_u16(b, channels);
    push_u32(b, rate);
    push_u32(b, rate * channels * bits / 8);
    push_u16(b, static_cast<uint16_t>(channels * bits / 8));
    push_u16(b, bits);
    if (junk_chunk) {
        push_tag(b, "LIST");
        push_u32(b, 5);  // odd length; decoder must skip the pad byte
        for (int i = 0; i < 5; ++i) b.push_back(0xAB);
        b.push_back(0);  // pad
    }
    push_tag(b, "data");
    push_u32(b, static_cast<uint32_t>(payload.size()));
    b.insert(b.end(), payload.begin(), payload.end());
    const uint32_t riff_len = static_cast<uint32_t>(b.size()) - 8;
    std::memcpy(b.data() + 4, &riff_len, 4);
    return b;
}

}  // namespace

TEST_SUITE("audio") {

TEST_CASE("wav save and load round trip") {
    const fs::path p = tmp_dir() / "roundtrip.wav";
    const audio::AudioClip c = sine(440.0, 0.25, 8000);
    audio::save_wav(p.string(), c);
    const audio::AudioClip back = audio::load_wav(p.string());
    REQUIRE(back.samples.size() == c.samples.size());
    CHECK(back.sample_rate == 8000);
    double worst = 0.0;
    for (size_t i = 0; i < c.samples.size(); ++i)
        worst = std::max(worst, std::abs(static_cast<double>(back.samples[i]) - c.samples[i]));
    CHECK(worst < 1.0 / 32768.0 + 1e-7);  // 16-bit quantization step
}

TEST_CASE("decoder handles the other sample formats") {
    const fs::path dir = tmp_dir();

    SUBCASE("8-bit unsigned") {
        // values 128 -> 0.0, 255 -> ~1.0, 0 -> -1.0
        const fs::path p = dir / "u8.wav";
        write_bytes(p, make_wav(1, 1, 8000, 8, {128, 255, 0, 192}));
        const auto c = audio::load_wav(p.string());
        REQUIRE(c.samples.size() == 4);
        CHECK(c.samples[0] == doctest::Approx(0.0));
        CHECK(c.samples[1] == doctest::Approx(127.0 / 128.0));
        CHECK(c.samples[2] == doctest::Approx(-1.0));
        CHECK(c.samples[3] == doctest::Approx(64.0 / 128.0));
    }

    SUBCASE("24-bit signed") {
        const fs::path p = dir / "s24.wav";
        // +4194304 = 0.5 * 2^23, and -8388608 = -1.0
        std::vector<uint8_t> payload = {0x00, 0x00, 0x40, 0x00, 0x00, 0x80};
        write_bytes(p, make_wav(1, 1, 8000, 24, payload));
        const auto c = audio::load_wav(p.string());
        REQUIRE(c.samples.size() == 2);
        CHECK(c.samples[0] == doctest::Approx(0.5));
        CHECK(c.samples[1] == doctest::Approx(-1.0));
    }

    SUBCASE("32-bit float") {
        const fs::path p = dir / "f32.wav";
        std::vector<uint8_t> payload(8);
        const float a = 0.25f, b = -0.75f;
        std::memcpy(payload.data(), &a, 4);
        std::memcpy(payload.data() + 4, &b, 4);
        write_bytes(p, make_wav(3, 1, 8000, 32, payload));
        const auto c = audio::load_wav(p.string());
        REQUIRE(c.samples.size() == 2);
        CHECK(c.samples[0] == doctest::Approx(0.25));
        CHECK(c.samples[1] == doctest::Approx(-0.75));
    }

    SUBCASE("stereo downmix is the channel mean") {
        const fs::path p = dir / "stereo.wav";
        std::vector<uint8_t> payload;
        auto push_s16 = [&](int16_t v) {
            payload.push_back(v & 0xFF);
            payload.push_back((v >> 8) & 0xFF);
        };
        push_s16(16384);   // L = 0.5
        push_s16(-16384);  // R = -0.5 -> mean 0
        push_s16(16384);
        push_s16(16384);  // mean 0.5
        write_bytes(p, make_wav(1, 2, 8000, 16, payload));
        const auto c = audio::load_wav(p.string());
        REQUIRE(c.samples.size() == 2);
        CHECK(c.samples[0] == doctest::Approx(0.0));
        CHECK(c.samples[1] == doctest::Approx(0.5));
    }

    SUBCASE("junk chunk with odd length is skipped") {
        const fs::path p = dir / "junk.wav";
        write_bytes(p, make_wav(1, 1, 8000, 16, {0x00, 0x40}, /*junk_chunk=*/true));
        const auto c = audio::load_wav(p.string());
        REQUIRE(c.samples.size() == 1);
        CHECK(c.samples[0] == doctest::Approx(0.5));
    }
}

TEST_CASE("decoder rejects what it cannot read") {
    const fs::path dir = tmp_dir();

    const fs::path missing = dir / "nope.wav";
    CHECK_THROWS_AS(audio::load_wav(missing.string()), IoFailure);

    const fs::path bad = dir / "bad_magic.wav";
    write_bytes(bad, {'N', 'O', 'P', 'E', 0, 0, 0, 0, 'W', 'A', 'V', 'E'});
    CHECK_THROWS_AS(audio::load_wav(bad.string()), MalformedHeader);

    const fs::path trunc = dir / "truncated.wav";
    auto full = make_wav(1, 1, 8000, 16, {0, 1, 2, 3});
    full.resize(full.size() - 3);
    write_bytes(trunc, full);
    CHECK_THROWS_AS(audio::load_wav(trunc.string()), MalformedHeader);

    const fs::path ulaw = dir / "ulaw.wav";
    write_bytes(ulaw, make_wav(7, 1, 8000, 8, {0x7F}));
    CHECK_THROWS_AS(audio::load_wav(ulaw.string()), UnsupportedEncoding);

    const fs::path five_ch = dir / "5ch.wav";
    write_bytes(five_ch, make_wav(1, 5, 8000, 16, std::vector<uint8_t>(10, 0)));
    CHECK_THROWS_AS(audio::load_wav(five_ch.string()), UnsupportedEncoding);

    const fs::path empty = dir / "empty.wav";
    write_bytes(empty, make_wav(1, 1, 8000, 16, {}));
    CHECK_THROWS_AS(audio::load_wav(empty.string()), EmptyAudio);
}

TEST_CASE("resample length and content") {
    const audio::AudioClip c = sine(440.0, 0.5, 44100);

    SUBCASE("length follows the rate ratio") {
        const auto down = audio::resample(c, 22050);
        CHECK(down.sample_rate == 22050);
        CHECK(static_cast<int64_t>(down.samples.size()) ==
              std::llround(c.samples.size() * 22050.0 / 44100.0));

        const auto odd = audio::resample(c, 16000);
        CHECK(static_cast<int64_t>(odd.samples.size()) ==
              std::llround(c.samples.size() * 16000.0 / 44100.0));
    }

    SUBCASE("tone survives rate conversion") {
        const auto down = audio::resample(c, 16000);
        CHECK(dominant_freq(down, 300.0, 600.0, 1.0) == doctest::Approx(440.0).epsilon(0.01));
        // amplitude preserved away from the edges
        double peak = 0.0;
        for (size_t i = down.samples.size() / 4; i < 3 * down.samples.size() / 4; ++i)
            peak = std::max(peak, std::abs(static_cast<double>(down.samples[i])));
        CHECK(peak == doctest::Approx(0.5).epsilon(0.02));
    }

    SUBCASE("constant signal passes through unchanged") {
        audio::AudioClip dc;
        dc.sample_rate = 44100;
        dc.samples.assign(4410, 0.25f);
        const auto out = audio::resample(dc, 22050);
        for (float v : out.samples) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
    }

    SUBCASE("upsampling works too") {
        const auto up = audio::resample(c, 48000);
        CHECK(static_cast<int64_t>(up.samples.size()) ==
              std::llround(c.samples.size() * 48000.0 / 44100.0));
        CHECK(dominant_freq(up, 300.0, 600.0, 1.0) == doctest::Approx(440.0).epsilon(0.01));
    }

    SUBCASE("same rate is the identity") {
        const auto same = audio::resample(c, 44100);
        CHECK(same.samples == c.samples);
    }

    CHECK_THROWS_AS(audio::resample(c, 0), InvalidRate);
    CHECK_THROWS_AS(audio::resample(c, -8000), InvalidRate);
}

TEST_CASE("segmentation drops the partial tail") {
    audio::AudioClip c = sine(100.0, 5.5, 1000);
    c.label = 2;
    c.source_id = "clip_a";
    const auto segs = audio::segment(c, 2.0);
    REQUIRE(segs.size() == 2);
    for (size_t i = 0; i < segs.size(); ++i) {
        CHECK(segs[i].samples.size() == 2000);
        CHECK(segs[i].sample_rate == 1000);
        CHECK(segs[i].label == 2);
        CHECK(segs[i].source_id == "clip_a#" + std::to_string(i));
    }
    // content is the contiguous original
    CHECK(segs[1].samples[0] == c.samples[2000]);

    CHECK(audio::segment(sine(100.0, 0.5, 1000), 2.0).empty());
    CHECK_THROWS_AS(audio::segment(c, 0.0), InvalidFactor);
}

TEST_CASE("time stretch changes duration, not pitch") {
    const audio::AudioClip c = sine(220.0, 1.0, 8000);
    audio::AugmentSpec spec;
    spec.kind = audio::AugmentSpec::Kind::time_stretch;

    spec.factor = 1.0;
    const auto same = audio::augment(c, spec);
    CHECK(same.samples == c.samples);

    for (double f : {0.75, 1.5}) {
        spec.factor = f;
        const auto out = audio::augment(c, spec);
        CHECK(out.sample_rate == c.sample_rate);
        CHECK(static_cast<int64_t>(out.samples.size()) == std::llround(c.samples.size() * f));
        CHECK(dominant_freq(out, 150.0, 450.0, 1.0) == doctest::Approx(220.0).epsilon(0.02));
    }

    spec.factor = -1.0;
    CHECK_THROWS_AS(audio::augment(c, spec), InvalidFactor);
}

TEST_CASE("speed change moves duration and pitch together") {
    const audio::AudioClip c = sine(440.0, 1.0, 8000);
    audio::AugmentSpec spec;
    spec.kind = audio::AugmentSpec::Kind::speed_change;
    spec.factor = 2.0;
    const auto out = audio::augment(c, spec);
    CHECK(out.sample_rate == c.sample_rate);
    CHECK(static_cast<double>(out.samples.size()) ==
          doctest::Approx(c.samples.size() / 2.0).epsilon(0.01));
    CHECK(dominant_freq(out, 700.0, 1100.0, 1.0) == doctest::Approx(880.0).epsilon(0.01));
}

TEST_CASE("pitch shift keeps duration") {
    const audio::AudioClip c = sine(440.0, 1.0, 8000);
    audio::AugmentSpec spec;
    spec.kind = audio::AugmentSpec::Kind::pitch_shift;

    spec.semitones = 12.0;
    const auto up = audio::augment(c, spec);
    CHECK(static_cast<double>(up.samples.size()) ==
          doctest::Approx(static_cast<double>(c.samples.size())).epsilon(0.02));
    CHECK(dominant_freq(up, 700.0, 1100.0, 1.0) == doctest::Approx(880.0).epsilon(0.02));

    spec.semitones = 0.0;
    CHECK(audio::augment(c, spec).samples == c.samples);

    spec.semitones = 12.5;
    CHECK_THROWS_AS(audio::augment(c, spec), InvalidFactor);
    spec.semitones = -13.0;
    CHECK_THROWS_AS(audio::augment(c, spec), InvalidFactor);
}

TEST_CASE("clamp and renormalize") {
    std::vector<float> loud = {0.5f, -2.0f, 1.0f};
    audio::clamp_renormalize(loud);
    CHECK(loud[0] == doctest::Approx(0.25));
    CHECK(loud[1] == doctest::Approx(-1.0));
    CHECK(loud[2] == doctest::Approx(0.5));

    std::vector<float> quiet = {0.5f, -0.25f};
    audio::clamp_renormalize(quiet);  // peak below 1: untouched
    CHECK(quiet[0] == 0.5f);
    CHECK(quiet[1] == -0.25f);
}

}  // TEST_SUITE
