// hivesig: beehive-state recognition from audio, end to end on the command
// line. synth -> featurize -> train -> compress -> evaluate/benchmark/predict,
// every stage seeded from one config.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "hivesig/audio.hpp"
#include "hivesig/compress.hpp"
#include "hivesig/config.hpp"
#include "hivesig/dataset.hpp"
#include "hivesig/errors.hpp"
#include "hivesig/image.hpp"
#include "hivesig/kernels.hpp"
#include "hivesig/metrics.hpp"
#include "hivesig/network.hpp"
#include "hivesig/tfrepr.hpp"
#include "hivesig/train.hpp"

namespace fs = std::filesystem;
using namespace hivesig;

namespace {

// 0 success, 2 usage/input, 3 data/shape, 4 pipeline order
int exit_code_for(const Error& e) {
    if (dynamic_cast<const PipelineOrder*>(&e)) return 4;
    if (dynamic_cast<const ShapeMismatch*>(&e) || dynamic_cast<const ShapeIncompatible*>(&e) ||
        dynamic_cast<const LengthMismatch*>(&e) || dynamic_cast<const OutOfRangeClass*>(&e) ||
        dynamic_cast<const TooShort*>(&e) || dynamic_cast<const InvalidBand*>(&e))
        return 3;
    return 2;
}

void apply_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot write " + path);
    f << text;
}

// meta carries the featurize recipe so predict can rebuild it from the
// checkpoint alone
void stamp_meta(net::Model& m, const net::ImageSet& ds, const config::PipelineConfig& cfg,
                const std::string& arch) {
    m.meta["classes"] = nlohmann::json(ds.class_names).dump();
    m.meta["representation"] = tfrepr::kind_name(cfg.representation);
    m.meta["segment_seconds"] = std::to_string(cfg.segment_seconds);
    m.meta["arch"] = arch;
}

std::vector<std::string> classes_from_meta(const net::Model& m) {
    if (auto it = m.meta.find("classes"); it != m.meta.end()) {
        try {
            return nlohmann::json::parse(it->second).get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception&) {
        }
    }
    std::vector<std::string> names;
    for (int c = 0; c < m.spec.n_classes; ++c) names.push_back("class" + std::to_string(c));
    return names;
}

net::ImageSet load_set_for(const net::Model& m, const std::string& manifest) {
    net::ImageSet ds = data::load_manifest(manifest, m.spec.input.c);
    if (ds.x.shape[2] != m.spec.input.h || ds.x.shape[3] != m.spec.input.w)
        throw ShapeMismatch("manifest rasters are " + std::to_string(ds.x.shape[2]) + "x" +
                            std::to_string(ds.x.shape[3]) + " but the model wants " +
                            std::to_string(m.spec.input.h) + "x" + std::to_string(m.spec.input.w));
    return ds;
}

// every i-th sample, spread across the (class-sorted) manifest
net::ImageSet spread_subset(const net::ImageSet& ds, int want) {
    const int64_t n = ds.size();
    if (want <= 0 || want >= n) return ds;
    std::vector<int64_t> idx;
    for (int i = 0; i < want; ++i) idx.push_back(static_cast<int64_t>(i) * n / want);
    net::ImageSet sub;
    sub.x = ds.gather(idx);
    for (int64_t i : idx) sub.labels.push_back(ds.labels[static_cast<size_t>(i)]);
    sub.class_names = ds.class_names;
    return sub;
}

struct CsvNum {
    double v;
};
std::ostream& operator<<(std::ostream& os, CsvNum n) {
    if (std::isnan(n.v)) return os << "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", n.v);
    return os << buf;
}

// ---- flag plumbing ----
// Several subcommands bind options with the same name to the same field;
// which one was actually given is answered by the parsed subcommand.

struct Args {
    CLI::App* sub = nullptr;

    std::string config_path;
    int threads = 0;
    std::string in_dir, feat_out, out_dir, manifest, model_path, wav_path;
    std::string arch = "teacher";
    std::vector<std::string> steps;
    std::string strategy, representation;
    double fraction = 0.0, temperature = 0.0, alpha = 0.0, beta = 0.0;
    double seconds = 0.0, snr = 0.0, segment_seconds = 0.0, lr = 0.0;
    int clips = 0, rate = 0, epochs = 0, batch = 0, runs = 0, channels = 0;
    uint64_t seed = 0;
    bool verbose = false;

    bool has(const std::string& flag) const {
        const CLI::Option* o = sub->get_option_no_throw(flag);
        return o != nullptr && o->count() > 0;
    }
};

// flag > HIVESIG_THREADS > config; 0 leaves the OpenMP default alone
int resolve_threads(const Args& a, const config::PipelineConfig& cfg) {
    if (a.has("--threads")) return a.threads;
    if (const char* env = std::getenv("HIVESIG_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 0)
            throw UsageError(std::string("HIVESIG_THREADS is not a thread count: ") + env);
        return static_cast<int>(v);
    }
    return cfg.threads;
}

config::PipelineConfig load_cfg(const Args& a) {
    config::PipelineConfig cfg =
        a.config_path.empty() ? config::parse_config("{}") : config::load_config(a.config_path);
    if (a.has("--seed")) {
        cfg.seed = a.seed;
        cfg.synth.seed = a.seed;
        cfg.training.seed = a.seed;
        cfg.distill.train.seed = a.seed;
    }
    if (a.has("--out-dir")) cfg.output_dir = a.out_dir;
    if (a.has("--representation")) cfg.representation = tfrepr::kind_from_name(a.representation);
    if (a.has("--channels")) {
        if (a.channels != 1 && a.channels != 3) throw UsageError("--channels must be 1 or 3");
        cfg.channels = a.channels;
    }
    if (a.has("--segment-seconds")) cfg.segment_seconds = a.segment_seconds;
    if (a.has("--epochs")) {
        cfg.training.max_epochs = a.epochs;
        cfg.distill.train.max_epochs = a.epochs;
    }
    if (a.has("--lr")) {
        cfg.training.lr0 = a.lr;
        cfg.distill.train.lr0 = a.lr;
    }
    if (a.has("--batch")) {
        cfg.training.batch_size = a.batch;
        cfg.distill.train.batch_size = a.batch;
    }
    if (a.has("--fraction")) cfg.prune.fraction = a.fraction;
    if (a.has("--strategy")) cfg.prune.strategy = a.strategy;
    if (a.has("--temperature")) cfg.distill.temperature = a.temperature;
    if (a.has("--alpha")) cfg.distill.alpha = a.alpha;
    if (a.has("--beta")) cfg.distill.beta = a.beta;
    if (a.verbose) {
        cfg.training.verbose = true;
        cfg.distill.train.verbose = true;
    }
    apply_threads(resolve_threads(a, cfg));
    return cfg;
}

std::string default_manifest(const config::PipelineConfig& cfg) {
    return (fs::path(cfg.output_dir) / "features" / "manifest.csv").string();
}

// ---- commands ----

int cmd_synth(const Args& a) {
    config::PipelineConfig cfg = load_cfg(a);
    const std::string dir = !a.in_dir.empty() ? a.in_dir : cfg.dataset_root;
    if (dir.empty()) throw UsageError("synth needs --out or a dataset_root in the config");
    data::SynthConfig sc = cfg.synth;
    if (a.has("--clips")) sc.clips_per_class = a.clips;
    if (a.has("--seconds")) sc.clip_seconds = a.seconds;
    if (a.has("--rate")) sc.sample_rate = a.rate;
    if (a.has("--snr")) sc.snr_db = a.snr;
    const int n = data::synth_dataset(dir, sc);
    std::cout << "wrote " << n << " clips across " << data::synth_class_names().size()
              << " classes under " << dir << "\n";
    return 0;
}

int cmd_featurize(const Args& a) {
    config::PipelineConfig cfg = load_cfg(a);
    const std::string in = !a.in_dir.empty() ? a.in_dir : cfg.dataset_root;
    if (in.empty()) throw UsageError("featurize needs --in or a dataset_root in the config");
    const std::string out =
        !a.feat_out.empty() ? a.feat_out : (fs::path(cfg.output_dir) / "features").string();
    const data::FeaturizeSummary sum = data::featurize_dir(in, out, cfg.featurize(), a.verbose);
    for (const std::string& w : sum.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "featurized " << sum.files_seen << " clips -> " << sum.rasters_written
              << " rasters (" << sum.skipped << " skipped) under " << out << "\n"
              << "manifest: " << sum.manifest_path << "\n";
    return 0;
}

int cmd_train(const Args& a) {
    config::PipelineConfig cfg = load_cfg(a);
    const std::string manifest = !a.manifest.empty() ? a.manifest : default_manifest(cfg);
    const net::ImageSet ds = data::load_manifest(manifest, cfg.channels);
    const int k = static_cast<int>(ds.class_names.size());

    if (a.arch != "teacher" && a.arch != "student")
        throw UsageError("--arch must be teacher or student");
    const net::NetworkSpec spec = a.arch == "teacher" ? net::build_teacher(cfg.teacher_arch(k))
                                                      : net::build_student(cfg.student_arch(k));
    if (ds.x.shape[2] != spec.input.h || ds.x.shape[3] != spec.input.w)
        throw ShapeMismatch("manifest rasters are " + std::to_string(ds.x.shape[2]) + "x" +
                            std::to_string(ds.x.shape[3]) + " but the " + a.arch + " wants " +
                            std::to_string(spec.input.h) + "x" + std::to_string(spec.input.w));

    auto [model, hist] = net::train(spec, ds, cfg.training);
    stamp_meta(model, ds, cfg, a.arch);

    fs::create_directories(cfg.output_dir);
    const std::string base = (fs::path(cfg.output_dir) / a.arch).string();
    net::save_model(model, base + ".hsm");
    net::write_history_csv(hist, base + "_history.csv");
    img::curves_png(hist, base + "_curves.png");

    std::cout << a.arch << ": " << net::count_params(model) << " params, best val acc "
              << hist.best_val_acc << " at epoch " << hist.best_epoch << "\n"
              << "checkpoint: " << base << ".hsm\n"
              << "history:    " << base << "_history.csv\n"
              << "curves:     " << base << "_curves.png\n";
    return 0;
}

const std::vector<std::string> kStepNames = {"prune_neurons", "prune_layers", "distill",
                                             "quantize"};

int cmd_compress(const Args& a) {
    config::PipelineConfig cfg = load_cfg(a);
    const std::vector<std::string> steps = a.steps.empty() ? kStepNames : a.steps;
    for (const std::string& s : steps)
        if (std::find(kStepNames.begin(), kStepNames.end(), s) == kStepNames.end())
            throw UsageError("unknown compress step: " + s);

    net::Model current = net::load_model(a.model_path);

    // dataset is optional until a step actually needs it
    const std::string manifest = !a.manifest.empty() ? a.manifest : default_manifest(cfg);
    net::ImageSet ds;
    bool have_data = false;
    if (fs::exists(manifest)) {
        ds = load_set_for(current, manifest);
        have_data = true;
    } else if (!a.manifest.empty()) {
        throw IoFailure("cannot open " + manifest);
    }

    fs::create_directories(cfg.output_dir);
    const std::string name = fs::path(a.model_path).stem().string();
    const std::string csv_path = (fs::path(cfg.output_dir) / (name + "_stages.csv")).string();
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoFailure("cannot write " + csv_path);
    csv << "step,accuracy,params,size_mb,latency_ms\n";

    const int runs = a.has("--runs") ? std::max(3, a.runs) : 5;
    for (const std::string& step : steps) {
        if (step == "prune_neurons") {
            auto [m, rep] = compress::prune_neurons(
                current, cfg.prune.fraction,
                compress::prune_strategy_from_name(cfg.prune.strategy), cfg.seed);
            current = std::move(m);
            std::cout << "prune_neurons: " << rep.params_before << " -> " << rep.params_after
                      << " params\n";
            if (cfg.prune.finetune_epochs > 0) {
                if (!have_data) throw PipelineOrder("finetune after pruning needs a dataset");
                net::TrainingConfig tc = cfg.training;
                tc.max_epochs = cfg.prune.finetune_epochs;
                current = net::finetune(current, ds, tc).first;
            }
        } else if (step == "prune_layers") {
            const std::vector<std::string> names =
                cfg.prune.layers.empty() ? compress::default_prunable_layers(current.spec)
                                         : cfg.prune.layers;
            auto [m, rep] = compress::prune_layers(current, names);
            current = std::move(m);
            std::cout << "prune_layers: removed";
            for (const std::string& n : rep.removed_layers) std::cout << " " << n;
            std::cout << ", " << rep.params_before << " -> " << rep.params_after << " params\n";
        } else if (step == "distill") {
            if (!have_data) throw PipelineOrder("distill needs a dataset; pass --manifest");
            net::ArchConfig sa = cfg.student_arch(current.spec.n_classes);
            sa.in_channels = current.spec.input.c;
            auto [student, hist] =
                compress::distill(current, net::build_student(sa), ds, cfg.distill);
            stamp_meta(student, ds, cfg, "student");
            // the teacher's recipe wins if the config disagrees
            if (auto it = current.meta.find("representation"); it != current.meta.end())
                student.meta["representation"] = it->second;
            current = std::move(student);
            net::write_history_csv(
                hist, (fs::path(cfg.output_dir) / (name + "_distill_history.csv")).string());
            std::cout << "distill: best val acc " << hist.best_val_acc << " at epoch "
                      << hist.best_epoch << "\n";
        } else {  // quantize
            if (!have_data)
                throw PipelineOrder("quantize needs calibration data; pass --manifest");
            current = compress::quantize_head(
                current, spread_subset(ds, cfg.quant.calibration_samples));
            std::cout << "quantize: head -> int8, calibration drift "
                      << current.meta["quant_calibration_delta"] << "\n";
        }

        const std::string ckpt =
            (fs::path(cfg.output_dir) / (name + "." + step + ".hsm")).string();
        net::save_model(current, ckpt);

        const compress::SizeReport sz = compress::size_report(current);
        double acc = std::nan("");
        double latency_ms = std::nan("");
        if (have_data) {
            const metrics::BenchReport br = metrics::benchmark(current, ds, runs, 0, name);
            acc = br.accuracy;
            latency_ms = br.inference_seconds * 1e3;
        }
        csv << step << "," << CsvNum{acc} << "," << sz.params << "," << CsvNum{sz.mb()} << ","
            << CsvNum{latency_ms} << "\n";
        std::cout << step << ": " << sz.params << " params, " << sz.mb() << " MB -> " << ckpt
                  << "\n";
    }
    std::cout << "stages: " << csv_path << "\n";
    return 0;
}

int cmd_evaluate(const Args& a) {
    config::PipelineConfig cfg = load_cfg(a);
    const net::Model m = net::load_model(a.model_path);
    const std::string manifest = !a.manifest.empty() ? a.manifest : default_manifest(cfg);
    net::ImageSet ds = load_set_for(m, manifest);
    if (ds.class_names.size() < static_cast<size_t>(m.spec.n_classes))
        ds.class_names = classes_from_meta(m);

    const std::vector<int> preds = net::predict_classes(m, ds);
    const metrics::ConfusionMatrix cm =
        metrics::confusion_matrix(preds, ds.labels, m.spec.n_classes, ds.class_names);
    const metrics::Report rep = metrics::report(cm);
    for (const std::string& w : rep.warnings) std::cerr << "warning: " << w << "\n";

    fs::create_directories(cfg.output_dir);
    const fs::path base = cfg.output_dir;
    write_text((base / "report.json").string(), rep.to_json());
    write_text((base / "report.csv").string(), rep.to_csv());
    img::confusion_png(cm, (base / "confusion.png").string());

    std::cout << "accuracy " << rep.accuracy << " on " << rep.total << " samples\n"
              << "report:    " << (base / "report.json").string() << "\n"
              << "confusion: " << (base / "confusion.png").string() << "\n";
    return 0;
}

int cmd_benchmark(const Args& a) {
    config::PipelineConfig cfg = load_cfg(a);
    const net::Model m = net::load_model(a.model_path);
    const std::string manifest = !a.manifest.empty() ? a.manifest : default_manifest(cfg);
    const net::ImageSet ds = load_set_for(m, manifest);

    int threads = resolve_threads(a, cfg);
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    const int runs = a.has("--runs") ? a.runs : 20;
    const metrics::BenchReport br =
        metrics::benchmark(m, ds, runs, threads, fs::path(a.model_path).stem().string());

    fs::create_directories(cfg.output_dir);
    const std::string out = (fs::path(cfg.output_dir) / "bench.json").string();
    write_text(out, br.to_json());
    std::cout << br.model_name << ": median " << br.inference_seconds * 1e3 << " ms over "
              << br.samples << " samples (" << br.runs << " runs, " << br.threads
              << " threads), accuracy " << br.accuracy << "\n"
              << "bench: " << out << "\n";
    return 0;
}

int cmd_predict(const Args& a) {
    config::PipelineConfig cfg = load_cfg(a);
    const net::Model m = net::load_model(a.model_path);

    data::FeaturizeConfig f = cfg.featurize();
    f.raster_size = m.spec.input.h;
    double seg_seconds = cfg.segment_seconds;
    if (auto it = m.meta.find("representation"); it != m.meta.end())
        f.kind = tfrepr::kind_from_name(it->second);
    if (auto it = m.meta.find("segment_seconds"); it != m.meta.end())
        seg_seconds = std::stod(it->second);

    const audio::AudioClip clip = audio::load_wav(a.wav_path);
    std::vector<audio::AudioClip> segs = audio::segment(clip, seg_seconds);
    if (segs.empty()) segs.push_back(clip);  // short clip, same policy as featurize

    const int C = m.spec.input.c;
    const int side = m.spec.input.h;
    const int64_t plane = static_cast<int64_t>(side) * side;
    Tensor<float> x({static_cast<int>(segs.size()), C, side, side});
    for (size_t s = 0; s < segs.size(); ++s) {
        const tfrepr::TFImage tf = data::featurize_clip(segs[s], f);
        float* dst = x.data.data() + static_cast<int64_t>(s) * C * plane;
        if (C == 1) {
            std::copy(tf.raster.begin(), tf.raster.end(), dst);
        } else {
            for (int64_t j = 0; j < plane; ++j) {
                float rgb[3];
                tfrepr::colormap(tf.raster[static_cast<size_t>(j)], rgb);
                for (int ch = 0; ch < 3; ++ch) dst[ch * plane + j] = rgb[ch];
            }
        }
    }

    const Tensor<float> logits = net::predict_logits(m, x);
    Tensor<float> probs;
    kernels::softmax(logits, probs);

    const int k = m.spec.n_classes;
    std::vector<double> p(static_cast<size_t>(k), 0.0);
    for (int s = 0; s < logits.shape[0]; ++s)
        for (int c = 0; c < k; ++c)
            p[static_cast<size_t>(c)] += probs.data[static_cast<size_t>(s) * k + c];
    for (double& v : p) v /= static_cast<double>(logits.shape[0]);

    const std::vector<std::string> names = classes_from_meta(m);
    const int top = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    std::cout << "prediction: " << names[static_cast<size_t>(top)] << "\n";
    for (int c = 0; c < k; ++c) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", p[static_cast<size_t>(c)]);
        std::cout << "  " << names[static_cast<size_t>(c)] << " " << buf << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"beehive audio state recognition"};
    app.require_subcommand(1);
    Args a;

    auto common = [&a](CLI::App* sub) {
        sub->add_option("-c,--config", a.config_path, "pipeline config (JSON, comments allowed)");
        sub->add_option("--threads", a.threads, "OpenMP thread cap; 1 is bitwise reproducible");
        sub->add_option("-o,--out-dir", a.out_dir, "artifact directory");
        sub->add_option("--seed", a.seed, "master seed for every stage");
    };

    CLI::App* synth = app.add_subcommand("synth", "write the synthetic four-class WAV dataset");
    common(synth);
    synth->add_option("--out", a.in_dir, "dataset directory to create");
    synth->add_option("--clips", a.clips, "clips per class");
    synth->add_option("--seconds", a.seconds, "clip length");
    synth->add_option("--rate", a.rate, "sample rate");
    synth->add_option("--snr", a.snr, "signal-to-noise ratio, dB");

    CLI::App* feat = app.add_subcommand("featurize", "WAV tree -> TFR rasters + manifest");
    common(feat);
    feat->add_option("--in", a.in_dir, "dataset root (class subdirectories)");
    feat->add_option("--out", a.feat_out, "feature directory");
    feat->add_option("--representation", a.representation,
                     "spectrogram | mel | smoothed | cochleagram");
    feat->add_option("--segment-seconds", a.segment_seconds, "split length");
    feat->add_flag("-v,--verbose", a.verbose, "per-file progress");

    CLI::App* train = app.add_subcommand("train", "train a network on a manifest");
    common(train);
    train->add_option("--manifest", a.manifest, "manifest.csv from featurize");
    train->add_option("--arch", a.arch, "teacher | student");
    train->add_option("--channels", a.channels, "1 or 3");
    train->add_option("--epochs", a.epochs, "training epochs");
    train->add_option("--lr", a.lr, "initial learning rate");
    train->add_option("--batch", a.batch, "batch size");
    train->add_flag("-v,--verbose", a.verbose, "epoch lines on stderr");

    CLI::App* comp = app.add_subcommand("compress", "prune / distill / quantize a checkpoint");
    common(comp);
    comp->add_option("--model", a.model_path, "input checkpoint")->required();
    comp->add_option("--manifest", a.manifest, "dataset for recovery, distillation, calibration");
    comp->add_option("--steps", a.steps,
                     "ordered subset of prune_neurons,prune_layers,distill,quantize")
        ->delimiter(',');
    comp->add_option("--fraction", a.fraction, "share of units to prune");
    comp->add_option("--strategy", a.strategy, "magnitude | random");
    comp->add_option("--temperature", a.temperature, "distillation softening");
    comp->add_option("--alpha", a.alpha, "soft-target loss weight");
    comp->add_option("--beta", a.beta, "ground-truth loss weight");
    comp->add_option("--epochs", a.epochs, "distillation epochs");
    comp->add_option("--runs", a.runs, "timing runs per stage row");
    comp->add_flag("-v,--verbose", a.verbose, "epoch lines on stderr");

    CLI::App* eval = app.add_subcommand("evaluate", "report + confusion matrix on a manifest");
    common(eval);
    eval->add_option("--model", a.model_path, "checkpoint")->required();
    eval->add_option("--manifest", a.manifest, "manifest.csv");

    CLI::App* bench = app.add_subcommand("benchmark", "median forward-pass latency");
    common(bench);
    bench->add_option("--model", a.model_path, "checkpoint")->required();
    bench->add_option("--manifest", a.manifest, "manifest.csv");
    bench->add_option("--runs", a.runs, "timed passes (>= 3)");

    CLI::App* pred = app.add_subcommand("predict", "classify one WAV clip");
    common(pred);
    pred->add_option("--model", a.model_path, "checkpoint")->required();
    pred->add_option("--wav", a.wav_path, "clip to classify")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    a.sub = app.get_subcommands().front();
    try {
        if (synth->parsed()) return cmd_synth(a);
        if (feat->parsed()) return cmd_featurize(a);
        if (train->parsed()) return cmd_train(a);
        if (comp->parsed()) return cmd_compress(a);
        if (eval->parsed()) return cmd_evaluate(a);
        if (bench->parsed()) return cmd_benchmark(a);
        if (pred->parsed()) return cmd_predict(a);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
