#include "hivesig/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "hivesig/errors.hpp"
#include "hivesig/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace hivesig::data {

const std::vector<std::string>& synth_class_names() {
    static const std::vector<std::string> names = {
        "queen_newly_accepted", "queen_not_present", "queen_original", "queen_rejected"};
    return names;
}

namespace {

// fundamentals well under 1 kHz, one per hive state
constexpr double kFundamentals[4] = {150.0, 260.0, 430.0, 700.0};

audio::AudioClip synth_clip(int cls, int idx, const SynthConfig& cfg) {
    Rng rng(seed_stream(cfg.seed, (static_cast<uint64_t>(cls) << 32) | static_cast<uint64_t>(idx)));
    const int n = static_cast<int>(std::llround(cfg.clip_seconds * cfg.sample_rate));
    const double f0 = kFundamentals[cls] * (1.0 + 0.06 * (rng.uniform() - 0.5));
    const double fm = 0.5 + 2.5 * rng.uniform();  // slow amplitude wobble
    const double fm_phase = 6.283185307179586 * rng.uniform();

    double amp[6], phase[6];
    for (int k = 0; k < 6; ++k) {
        amp[k] = std::pow(k + 1.0, -1.2) * (0.8 + 0.4 * rng.uniform());
        phase[k] = 6.283185307179586 * rng.uniform();
    }

    std::vector<float> s(static_cast<size_t>(n));
    double power = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / cfg.sample_rate;
        double v = 0.0;
        for (int k = 0; k < 6; ++k)
            v += amp[k] * std::sin(6.283185307179586 * f0 * (k + 1) * t + phase[k]);
        v *= 1.0 + 0.2 * std::sin(6.283185307179586 * fm * t + fm_phase);
        s[static_cast<size_t>(i)] = static_cast<float>(v);
        power += v * v;
    }
    const double rms = std::sqrt(power / n);
    const double noise_std = rms / std::pow(10.0, cfg.snr_db / 20.0);
    for (auto& v : s) v += static_cast<float>(noise_std * rng.normal());

    // uniform headroom so the 16-bit writer never clips
    float peak = 0.0f;
    for (float v : s) peak = std::max(peak, std::fabs(v));
    if (peak > 0.0f)
        for (auto& v : s) v *= 0.7f / peak;

    audio::AudioClip clip;
    clip.samples = std::move(s);
    clip.sample_rate = cfg.sample_rate;
    clip.label = cls;
    return clip;
}

}  // namespace

int synth_dataset(const std::string& out_dir, const SynthConfig& cfg) {
    if (cfg.clips_per_class < 1 || cfg.clip_seconds <= 0.0 || cfg.sample_rate < 1000)
        throw UsageError("synthesis needs clips >= 1, positive duration, sane sample rate");
    int written = 0;
    for (int c = 0; c < 4; ++c) {
        const fs::path dir = fs::path(out_dir) / synth_class_names()[static_cast<size_t>(c)];
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoFailure("cannot create " + dir.string());
        for (int i = 0; i < cfg.clips_per_class; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "clip_%04d.wav", i);
            audio::save_wav((dir / name).string(), synth_clip(c, i, cfg));
            ++written;
        }
    }
    return written;
}

tfrepr::TFImage featurize_clip(const audio::AudioClip& clip, const FeaturizeConfig& cfg) {
    tfrepr::TFImage img;
    switch (cfg.kind) {
        case tfrepr::TFKind::spectrogram:
            img = tfrepr::spectrogram(clip, cfg.stft);
            break;
        case tfrepr::TFKind::mel: {
            const tfrepr::MelBank bank = tfrepr::build_mel_bank(
                cfg.n_mels, cfg.stft.n_fft, clip.sample_rate, 0.0, clip.sample_rate / 2.0);
            img = tfrepr::mel_spectrogram(clip, cfg.stft, bank);
            break;
        }
        case tfrepr::TFKind::smoothed:
            img = tfrepr::smoothed_spectrogram(clip, cfg.stft, cfg.smoothing);
            break;
        case tfrepr::TFKind::cochleagram:
            img = tfrepr::cochleagram(clip, cfg.gammatone);
            break;
    }
    tfrepr::rasterize(img, cfg.raster_size, 1);
    return img;
}

namespace {

std::vector<std::string> sorted_names(const fs::path& dir, bool dirs_only) {
    std::vector<std::string> names;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (dirs_only ? e.is_directory() : e.is_regular_file())
            names.push_back(e.path().filename().string());
    }
    if (ec) throw IoFailure("cannot read " + dir.string());
    std::sort(names.begin(), names.end());
    return names;
}

bool has_wav(const fs::path& dir) {
    for (const std::string& f : sorted_names(dir, false))
        if (f.size() > 4 && f.substr(f.size() - 4) == ".wav") return true;
    return false;
}

}  // namespace

FeaturizeSummary featurize_dir(const std::string& dataset_root, const std::string& out_dir,
                               const FeaturizeConfig& cfg, bool verbose) {
    if (!fs::is_directory(dataset_root)) throw IoFailure("no dataset at " + dataset_root);
    FeaturizeSummary sum;

    for (const std::string& d : sorted_names(dataset_root, true)) {
        if (has_wav(fs::path(dataset_root) / d))
            sum.class_names.push_back(d);
        else
            sum.warnings.push_back("class directory '" + d + "' has no WAV files; skipped");
    }
    if (sum.class_names.size() < 2)
        throw EmptyClass("need at least two classes with audio, found " +
                         std::to_string(sum.class_names.size()));

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoFailure("cannot create " + out_dir);

    std::string manifest = "tfr_path,label,source\n";
    for (size_t label = 0; label < sum.class_names.size(); ++label) {
        const std::string& cls = sum.class_names[label];
        fs::create_directories(fs::path(out_dir) / cls, ec);
        for (const std::string& f : sorted_names(fs::path(dataset_root) / cls, false)) {
            if (f.size() <= 4 || f.substr(f.size() - 4) != ".wav") continue;
            ++sum.files_seen;
            const std::string src = cls + "/" + f;
            try {
                const audio::AudioClip clip = audio::load_wav(
                    (fs::path(dataset_root) / cls / f).string());
                std::vector<audio::AudioClip> segs =
                    audio::segment(clip, cfg.segment_seconds);
                if (segs.empty()) segs.push_back(clip);  // short clip: take it whole
                const std::string stem = f.substr(0, f.size() - 4);
                for (size_t si = 0; si < segs.size(); ++si) {
                    const tfrepr::TFImage img = featurize_clip(segs[si], cfg);
                    tfrepr::Matrix plane(cfg.raster_size, cfg.raster_size);
                    for (size_t i = 0; i < img.raster.size(); ++i)
                        plane.data[i] = img.raster[i];
                    char seg[16];
                    std::snprintf(seg, sizeof seg, "_seg%03d.tfr", static_cast<int>(si));
                    const std::string rel = cls + "/" + stem + seg;
                    tfrepr::write_tfr((fs::path(out_dir) / rel).string(), plane, cfg.kind);
                    manifest += rel + "," + std::to_string(label) + "," + src + "\n";
                    ++sum.rasters_written;
                }
            } catch (const Error& e) {
                ++sum.skipped;
                sum.warnings.push_back(src + ": " + e.what());
                if (verbose) std::fprintf(stderr, "skip %s: %s\n", src.c_str(), e.what());
            }
        }
    }

    sum.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
    std::ofstream mf(sum.manifest_path, std::ios::binary);
    mf << manifest;
    if (!mf) throw IoFailure("cannot write " + sum.manifest_path);
    mf.close();

    const nlohmann::json cj = sum.class_names;
    std::ofstream cf((fs::path(out_dir) / "classes.json").string(), std::ios::binary);
    cf << cj.dump(2) << "\n";
    if (!cf) throw IoFailure("cannot write classes.json");
    return sum;
}

net::ImageSet load_manifest(const std::string& manifest_path, int channels) {
    if (channels != 1 && channels != 3) throw UsageError("channels must be 1 or 3");
    std::ifstream f(manifest_path);
    if (!f) throw IoFailure("cannot open " + manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    std::string line;
    std::getline(f, line);
    if (line != "tfr_path,label,source")
        throw MalformedHeader("unexpected manifest header: " + line);

    std::vector<std::string> paths;
    std::vector<int> labels;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const size_t c1 = line.find(',');
        const size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos)
            throw MalformedHeader("manifest row needs three fields: " + line);
        paths.push_back(line.substr(0, c1));
        try {
            labels.push_back(std::stoi(line.substr(c1 + 1, c2 - c1 - 1)));
        } catch (const std::exception&) {
            throw MalformedHeader("bad label in manifest row: " + line);
        }
        if (labels.back() < 0) throw OutOfRangeClass("negative label in manifest");
    }
    if (paths.empty()) throw EmptyDataset("manifest lists no rasters");

    const int n = static_cast<int>(paths.size());
    net::ImageSet set;
    set.labels = std::move(labels);

    int side = 0;
    for (int i = 0; i < n; ++i) {
        const tfrepr::TfrFile tf = tfrepr::read_tfr((base / paths[static_cast<size_t>(i)]).string());
        if (i == 0) {
            if (tf.matrix.rows != tf.matrix.cols)
                throw ShapeMismatch("stored rasters must be square");
            side = tf.matrix.rows;
            set.x = Tensor<float>({n, channels, side, side});
        } else if (tf.matrix.rows != side || tf.matrix.cols != side) {
            throw ShapeMismatch(paths[static_cast<size_t>(i)] + " is " +
                                std::to_string(tf.matrix.rows) + "x" +
                                std::to_string(tf.matrix.cols) + ", expected " +
                                std::to_string(side));
        }
        const int64_t plane = static_cast<int64_t>(side) * side;
        float* dst = set.x.data.data() + static_cast<int64_t>(i) * channels * plane;
        if (channels == 1) {
            for (int64_t j = 0; j < plane; ++j) dst[j] = static_cast<float>(tf.matrix.data[j]);
        } else {
            for (int64_t j = 0; j < plane; ++j) {
                float rgb[3];
                tfrepr::colormap(static_cast<float>(tf.matrix.data[j]), rgb);
                for (int ch = 0; ch < 3; ++ch) dst[ch * plane + j] = rgb[ch];
            }
        }
    }

    const fs::path cj = base / "classes.json";
    if (fs::exists(cj)) {
        std::ifstream jf(cj);
        try {
            set.class_names = nlohmann::json::parse(jf).get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception&) {
            throw MalformedHeader("classes.json next to the manifest is unreadable");
        }
    } else {
        const int k = *std::max_element(set.labels.begin(), set.labels.end()) + 1;
        for (int c = 0; c < k; ++c) set.class_names.push_back("class" + std::to_string(c));
    }
    for (int l : set.labels)
        if (l >= static_cast<int>(set.class_names.size()))
            throw OutOfRangeClass("label " + std::to_string(l) + " has no class name");
    return set;
}

}  // namespace hivesig::data
