#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hivesig/audio.hpp"
#include "hivesig/tfrepr.hpp"
#include "hivesig/train.hpp"

namespace hivesig::data {

// ---- synthetic hive-state clips ----

// Class names in label order (lexicographic, as directories sort).
const std::vector<std::string>& synth_class_names();

struct SynthConfig {
    int clips_per_class = 200;
    double clip_seconds = 2.0;
    int sample_rate = 22050;
    double snr_db = 10.0;
    uint64_t seed = 0;
};

// Writes <out_dir>/<class>/clip_NNNN.wav; four classes of harmonic stacks at
// distinct fundamentals under 1 kHz plus noise. Returns files written.
int synth_dataset(const std::string& out_dir, const SynthConfig& cfg);

// ---- batch feature extraction ----

struct FeaturizeConfig {
    tfrepr::TFKind kind = tfrepr::TFKind::cochleagram;
    int raster_size = 64;
    double segment_seconds = 60.0;  // clips shorter than this become one segment
    tfrepr::StftConfig stft;
    int n_mels = 64;
    tfrepr::SmoothingConfig smoothing;
    tfrepr::GammatoneConfig gammatone;
};

struct FeaturizeSummary {
    int files_seen = 0;
    int rasters_written = 0;
    int skipped = 0;  // unreadable or unusable inputs
    std::vector<std::string> class_names;
    std::vector<std::string> warnings;
    std::string manifest_path;
};

// One clip -> time-frequency image with its raster attached (single plane;
// color channels are expanded at load time).
tfrepr::TFImage featurize_clip(const audio::AudioClip& clip, const FeaturizeConfig& cfg);

// <dataset_root>/<class>/*.wav -> <out_dir>/<class>/<stem>_segNNN.tfr,
// manifest.csv (tfr_path,label,source) and classes.json. Deterministic
// file order; needs at least two classes with usable audio.
FeaturizeSummary featurize_dir(const std::string& dataset_root, const std::string& out_dir,
                               const FeaturizeConfig& cfg, bool verbose = false);

// ---- training input ----

// channels 1 keeps the stored plane, 3 expands it through the colormap.
net::ImageSet load_manifest(const std::string& manifest_path, int channels);

}  // namespace hivesig::data
