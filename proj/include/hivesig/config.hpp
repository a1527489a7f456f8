#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hivesig/compress.hpp"
#include "hivesig/dataset.hpp"
#include "hivesig/network.hpp"
#include "hivesig/tfrepr.hpp"
#include "hivesig/train.hpp"

namespace hivesig::config {

struct PruneConfig {
    double fraction = 0.25;
    std::string strategy = "magnitude";      // or "random"
    std::vector<std::string> layers;         // empty -> removable convolutions
    int finetune_epochs = 0;                 // one-shot prune, then this many epochs
};

struct QuantConfig {
    int calibration_samples = 256;  // 0 calibrates on the whole set
};

struct ArchSection {
    std::vector<int> teacher_widths;  // empty -> library defaults
    std::vector<int> student_widths;
    int head_hidden = 64;
    double dropout = 0.5;
};

// Everything one pipeline run needs, read from a commented JSON file.
// Command-line flags override individual fields after loading.
struct PipelineConfig {
    std::string dataset_root;
    std::string output_dir = "out";
    tfrepr::TFKind representation = tfrepr::TFKind::cochleagram;
    int channels = 3;               // 1 keeps the stored plane, 3 colormaps it
    int raster_size = 64;
    double segment_seconds = 60.0;
    uint64_t seed = 0;
    int threads = 0;                // 0 keeps the OpenMP default

    tfrepr::StftConfig stft;
    int n_mels = 64;
    tfrepr::SmoothingConfig smoothing;
    tfrepr::GammatoneConfig gammatone;

    data::SynthConfig synth;
    net::TrainingConfig training;
    compress::DistillConfig distill;
    PruneConfig prune;
    QuantConfig quant;
    ArchSection arch;

    data::FeaturizeConfig featurize() const;
    net::ArchConfig teacher_arch(int n_classes) const;
    net::ArchConfig student_arch(int n_classes) const;
};

// JSON with // and /* */ comments. Absent keys keep their defaults; unknown
// keys and malformed values are UsageError. The top-level seed is the only
// seed: it is stamped into every stochastic section after parsing.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

}  // namespace hivesig::config
