#include "hivesig/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hivesig/errors.hpp"

namespace hivesig::config {

using nlohmann::json;

namespace {

// Every reader pops its key so leftovers can be reported as typos.
json pop(json& obj, const char* key) {
    json v;
    if (auto it = obj.find(key); it != obj.end()) {
        v = *it;
        obj.erase(it);
    }
    return v;
}

template <typename T>
void read(json& obj, const char* key, T& into) {
    const json v = pop(obj, key);
    if (v.is_null()) return;
    try {
        into = v.get<T>();
    } catch (const json::exception&) {
        throw UsageError(std::string("config: bad value for '") + key + "'");
    }
}

void reject_leftovers(const json& obj, const std::string& where) {
    if (obj.empty()) return;
    throw UsageError("config: unknown key '" + obj.begin().key() + "' in " + where);
}

void read_training(json& obj, net::TrainingConfig& tc, const std::string& where) {
    read(obj, "lr0", tc.lr0);
    read(obj, "rho", tc.rho);
    read(obj, "eps", tc.eps);
    read(obj, "max_epochs", tc.max_epochs);
    read(obj, "lr_factor", tc.lr_factor);
    read(obj, "lr_interval", tc.lr_interval);
    read(obj, "batch_size", tc.batch_size);
    read(obj, "val_fraction", tc.val_fraction);
    read(obj, "verbose", tc.verbose);
    reject_leftovers(obj, where);
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
    json root = parse_json(text);
    if (!root.is_object()) throw UsageError("config: top level must be an object");

    PipelineConfig c;
    read(root, "dataset_root", c.dataset_root);
    read(root, "output_dir", c.output_dir);
    if (const json v = pop(root, "representation"); !v.is_null()) {
        if (!v.is_string()) throw UsageError("config: representation must be a string");
        c.representation = tfrepr::kind_from_name(v.get<std::string>());
    }
    read(root, "channels", c.channels);
    if (c.channels != 1 && c.channels != 3)
        throw UsageError("config: channels must be 1 or 3");
    read(root, "raster_size", c.raster_size);
    read(root, "segment_seconds", c.segment_seconds);
    read(root, "seed", c.seed);
    read(root, "threads", c.threads);
    read(root, "n_mels", c.n_mels);

    if (json s = pop(root, "stft"); !s.is_null()) {
        read(s, "n_fft", c.stft.n_fft);
        read(s, "hop", c.stft.hop);
        if (const json w = pop(s, "window"); !w.is_null()) {
            const std::string name = w.is_string() ? w.get<std::string>() : "";
            if (name == "hann")
                c.stft.window = dsp::Window::hann;
            else if (name == "rectangular")
                c.stft.window = dsp::Window::rectangular;
            else
                throw UsageError("config: window must be hann or rectangular");
        }
        read(s, "log_floor", c.stft.log_floor);
        reject_leftovers(s, "stft");
    }
    if (json s = pop(root, "smoothing"); !s.is_null()) {
        read(s, "time_window", c.smoothing.time_window);
        read(s, "freq_window", c.smoothing.freq_window);
        reject_leftovers(s, "smoothing");
    }
    if (json s = pop(root, "gammatone"); !s.is_null()) {
        read(s, "n_channels", c.gammatone.n_channels);
        read(s, "f_min", c.gammatone.f_min);
        read(s, "order", c.gammatone.order);
        read(s, "bandwidth_scale", c.gammatone.bandwidth_scale);
        read(s, "phase", c.gammatone.phase);
        read(s, "win_time", c.gammatone.win_time);
        read(s, "hop_time", c.gammatone.hop_time);
        read(s, "log_floor", c.gammatone.log_floor);
        reject_leftovers(s, "gammatone");
    }
    if (json s = pop(root, "synth"); !s.is_null()) {
        read(s, "clips_per_class", c.synth.clips_per_class);
        read(s, "clip_seconds", c.synth.clip_seconds);
        read(s, "sample_rate", c.synth.sample_rate);
        read(s, "snr_db", c.synth.snr_db);
        reject_leftovers(s, "synth");
    }
    if (json s = pop(root, "training"); !s.is_null())
        read_training(s, c.training, "training");
    if (json s = pop(root, "distill"); !s.is_null()) {
        read(s, "temperature", c.distill.temperature);
        read(s, "alpha", c.distill.alpha);
        read(s, "beta", c.distill.beta);
        if (json t = pop(s, "train"); !t.is_null())
            read_training(t, c.distill.train, "distill.train");
        reject_leftovers(s, "distill");
    }
    if (json s = pop(root, "prune"); !s.is_null()) {
        read(s, "fraction", c.prune.fraction);
        if (const json v = pop(s, "strategy"); !v.is_null()) {
            if (!v.is_string()) throw UsageError("config: prune strategy must be a string");
            c.prune.strategy = v.get<std::string>();
            compress::prune_strategy_from_name(c.prune.strategy);  // validate now
        }
        read(s, "layers", c.prune.layers);
        read(s, "finetune_epochs", c.prune.finetune_epochs);
        reject_leftovers(s, "prune");
    }
    if (json s = pop(root, "quant"); !s.is_null()) {
        read(s, "calibration_samples", c.quant.calibration_samples);
        reject_leftovers(s, "quant");
    }
    if (json s = pop(root, "arch"); !s.is_null()) {
        read(s, "teacher_widths", c.arch.teacher_widths);
        read(s, "student_widths", c.arch.student_widths);
        read(s, "head_hidden", c.arch.head_hidden);
        read(s, "dropout", c.arch.dropout);
        reject_leftovers(s, "arch");
    }
    reject_leftovers(root, "the top level");

    // one master seed for every stochastic stage
    c.synth.seed = c.seed;
    c.training.seed = c.seed;
    c.distill.train.seed = c.seed;
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

data::FeaturizeConfig PipelineConfig::featurize() const {
    data::FeaturizeConfig f;
    f.kind = representation;
    f.raster_size = raster_size;
    f.segment_seconds = segment_seconds;
    f.stft = stft;
    f.n_mels = n_mels;
    f.smoothing = smoothing;
    f.gammatone = gammatone;
    return f;
}

net::ArchConfig PipelineConfig::teacher_arch(int n_classes) const {
    return {arch.teacher_widths, channels, arch.head_hidden, arch.dropout, n_classes};
}

net::ArchConfig PipelineConfig::student_arch(int n_classes) const {
    return {arch.student_widths, channels, arch.head_hidden, arch.dropout, n_classes};
}

}  // namespace hivesig::config
