#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hivesig::audio {

// Mono sample buffer. Samples live in [-1, 1] after any load or transform.
struct AudioClip {
    std::vector<float> samples;
    int sample_rate = 0;
    std::optional<int> label;  // class id 0..3 when known
    std::string source_id;

    double seconds() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

struct AugmentSpec {
    enum class Kind { pitch_shift, time_stretch, speed_change };
    Kind kind = Kind::time_stretch;
    double semitones = 0.0;  // pitch_shift, capped at +/-12
    double factor = 1.0;     // time_stretch / speed_change, > 0
    uint64_t seed = 0;
};

// RIFF/WAV PCM decode: 8/16/24-bit integer or 32-bit float, 1-2 channels.
// Stereo is downmixed by channel mean.
AudioClip load_wav(const std::string& path);

// 16-bit PCM writer, used by the synthetic dataset generator.
void save_wav(const std::string& path, const AudioClip& clip);

// Band-limited (windowed-sinc) rate conversion. Output length is
// round(len * target / source).
AudioClip resample(const AudioClip& clip, int target_rate);

// Non-overlapping contiguous windows of the given duration; a trailing
// partial window is dropped.
std::vector<AudioClip> segment(const AudioClip& clip, double seconds);

AudioClip augment(const AudioClip& clip, const AugmentSpec& spec);

// Scale down to unit peak when the peak exceeds 1, then clamp.
void clamp_renormalize(std::vector<float>& samples);

}  // namespace hivesig::audio
