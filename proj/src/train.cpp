#include "hivesig/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "hivesig/compress.hpp"
#include "hivesig/errors.hpp"
#include "hivesig/kernels.hpp"
#include "hivesig/rng.hpp"

namespace hivesig::net {

namespace K = hivesig::kernels;

Tensor<float> ImageSet::gather(const std::vector<int64_t>& idx) const {
    const int64_t f = sample_floats();
    std::vector<int> shape = x.shape;
    shape[0] = static_cast<int>(idx.size());
    Tensor<float> out(shape);
    for (size_t i = 0; i < idx.size(); ++i)
        std::memcpy(out.data.data() + static_cast<int64_t>(i) * f, x.data.data() + idx[i] * f,
                    static_cast<size_t>(f) * sizeof(float));
    return out;
}

Tensor<float> ImageSet::targets(const std::vector<int64_t>& idx, int n_classes) const {
    Tensor<float> t({static_cast<int>(idx.size()), n_classes});
    for (size_t i = 0; i < idx.size(); ++i) t.data[i * n_classes + labels[idx[i]]] = 1.0f;
    return t;
}

double lr_schedule(const TrainingConfig& cfg, int epoch) {
    return cfg.lr0 * std::pow(cfg.lr_factor, epoch / cfg.lr_interval);
}

void rmsprop_step(NamedTensors<float>& params, const NamedTensors<float>& grads,
                  NamedTensors<float>& cache, double lr, double rho, double eps) {
    const float lrf = static_cast<float>(lr);
    const float rhof = static_cast<float>(rho);
    const float epsf = static_cast<float>(eps);
    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        auto cit = cache.find(name);
        if (git == grads.end() || cit == cache.end())
            throw ShapeMismatch("optimizer state missing for " + name);
        const Tensor<float>& g = git->second;
        Tensor<float>& c = cit->second;
        if (g.shape != p.shape || c.shape != p.shape)
            throw ShapeMismatch("optimizer shape drift on " + name);
        for (int64_t i = 0; i < p.numel(); ++i) {
            const float gv = g.data[i];
            c.data[i] = rhof * c.data[i] + (1.0f - rhof) * gv * gv;
            p.data[i] -= lrf * gv / (std::sqrt(c.data[i]) + epsf);
        }
    }
}

void stratified_split(const std::vector<int>& labels, int n_classes, double val_fraction,
                      uint64_t seed, std::vector<int64_t>& train_idx,
                      std::vector<int64_t>& val_idx) {
    train_idx.clear();
    val_idx.clear();
    for (int c = 0; c < n_classes; ++c) {
        std::vector<int64_t> mine;
        for (size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) mine.push_back(static_cast<int64_t>(i));
        if (mine.size() < 2)
            throw EmptyClass("class " + std::to_string(c) + " has " +
                             std::to_string(mine.size()) + " samples; need at least 2");
        Rng rng(seed_stream(seed, 0xA11Cull + static_cast<uint64_t>(c)));
        rng.shuffle(mine.begin(), mine.end());
        const int64_t n_c = static_cast<int64_t>(mine.size());
        const int64_t val_n = std::clamp<int64_t>(
            static_cast<int64_t>(std::llround(val_fraction * static_cast<double>(n_c))), 1,
            n_c - 1);
        val_idx.insert(val_idx.end(), mine.begin(), mine.begin() + val_n);
        train_idx.insert(train_idx.end(), mine.begin() + val_n, mine.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
}

Tensor<float> predict_logits(const Model& m, const Tensor<float>& x, int batch) {
    if (batch < 1) throw UsageError("batch must be >= 1");
    auto params = cast_named<float>(float_params(m));
    auto running = cast_named<float>(float_running(m));
    const int n = x.dim(0);
    const int64_t f = x.numel() / std::max(n, 1);

    Tensor<float> out({n, m.spec.n_classes});
    for (int start = 0; start < n; start += batch) {
        const int b = std::min(batch, n - start);
        std::vector<int> shape = x.shape;
        shape[0] = b;
        Tensor<float> xb(shape);
        std::memcpy(xb.data.data(), x.data.data() + static_cast<int64_t>(start) * f,
                    static_cast<size_t>(b) * f * sizeof(float));
        Tensor<float> y = forward<float>(m.spec, params, running, xb, false, 0, nullptr);
        std::memcpy(out.data.data() + static_cast<int64_t>(start) * m.spec.n_classes,
                    y.data.data(), y.data.size() * sizeof(float));
    }
    return out;
}

namespace {

int argmax_row(const float* p, int k) {
    int best = 0;
    for (int i = 1; i < k; ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

}  // namespace

std::vector<int> predict_classes(const Model& m, const ImageSet& data, int batch) {
    const Tensor<float> logits = predict_logits(m, data.x, batch);
    const int k = m.spec.n_classes;
    std::vector<int> out(data.size());
    for (int64_t i = 0; i < data.size(); ++i)
        out[i] = argmax_row(logits.data.data() + i * k, k);
    return out;
}

double accuracy_on(const Model& m, const ImageSet& data, int batch) {
    if (data.size() == 0) throw EmptyDataset("no samples to evaluate");
    const std::vector<int> preds = predict_classes(m, data, batch);
    int64_t hit = 0;
    for (int64_t i = 0; i < data.size(); ++i)
        if (preds[i] == data.labels[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(data.size());
}

std::pair<Model, History> run_training(const NetworkSpec& spec, const ImageSet& data,
                                       const TrainingConfig& cfg, const Model* start,
                                       const KdSettings* kd) {
    if (!(cfg.lr_factor > 0.0 && cfg.lr_factor <= 1.0))
        throw UsageError("lr_factor must be in (0,1]");
    if (cfg.lr_interval < 1) throw UsageError("lr_interval must be >= 1");
    if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0))
        throw UsageError("val_fraction must be in (0,1)");
    if (cfg.batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (cfg.max_epochs < 0) throw UsageError("max_epochs must be >= 0");
    if (kd) {
        if (!(kd->temperature > 0.0)) throw InvalidTemperature("temperature must be > 0");
        if (kd->alpha < 0.0 || kd->beta < 0.0 || kd->alpha + kd->beta <= 0.0)
            throw UsageError("loss weights must be non-negative and not both zero");
    }
    validate(spec);

    const int n_cls = spec.n_classes;
    const int64_t n = data.size();
    if (n == 0) throw EmptyDataset("training set is empty");
    if (data.x.shape.size() != 4 || data.x.dim(0) != n || data.x.dim(1) != spec.input.c ||
        data.x.dim(2) != spec.input.h || data.x.dim(3) != spec.input.w)
        throw ShapeMismatch("raster set is " + shape_str(data.x.shape) + ", network wants [N," +
                            std::to_string(spec.input.c) + "," + std::to_string(spec.input.h) +
                            "," + std::to_string(spec.input.w) + "]");
    for (int lab : data.labels)
        if (lab < 0 || lab >= n_cls)
            throw OutOfRangeClass("label " + std::to_string(lab) + " outside [0," +
                                  std::to_string(n_cls) + ")");

    std::vector<int64_t> train_idx, val_idx;
    stratified_split(data.labels, n_cls, cfg.val_fraction, cfg.seed, train_idx, val_idx);
    const int64_t n_train = static_cast<int64_t>(train_idx.size());
    const int64_t n_val = static_cast<int64_t>(val_idx.size());

    Model model = start ? *start : init_model(spec, cfg.seed);
    auto params = cast_named<float>(float_params(model));
    auto running = cast_named<float>(float_running(model));
    NamedTensors<float> cache;
    for (const auto& [name, t] : params) cache[name] = Tensor<float>(t.shape);

    const bool kd_on = kd && kd->teacher && kd->alpha != 0.0;
    Tensor<float> teacher_logits;
    if (kd_on) teacher_logits = predict_logits(*kd->teacher, data.x, cfg.batch_size);

    History hist;
    hist.distill = kd != nullptr;
    NamedTensors<float> best_params, best_running;
    double best_acc = -1.0;
    int best_epoch = -1;

    const uint64_t step_root = seed_stream(cfg.seed, 0xD40Full);
    const int64_t bs = cfg.batch_size;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = lr_schedule(cfg, epoch);
        std::vector<int64_t> order = train_idx;
        Rng shuf(seed_stream(cfg.seed, 0xE90Cull + static_cast<uint64_t>(epoch)));
        shuf.shuffle(order.begin(), order.end());

        double tr_loss = 0.0, d_loss = 0.0, g_loss = 0.0;
        int64_t tr_hit = 0;
        const int64_t n_batches = (n_train + bs - 1) / bs;
        for (int64_t b = 0; b < n_batches; ++b) {
            const std::vector<int64_t> bidx(order.begin() + b * bs,
                                            order.begin() + std::min(n_train, (b + 1) * bs));
            const int bsz = static_cast<int>(bidx.size());
            const Tensor<float> xb = data.gather(bidx);
            const Tensor<float> yb = data.targets(bidx, n_cls);

            ForwardTrace<float> trace;
            const uint64_t fseed =
                seed_stream(step_root, static_cast<uint64_t>(epoch) * 0x100000ull +
                                           static_cast<uint64_t>(b));
            Tensor<float> logits = forward(spec, params, running, xb, true, fseed, &trace);
            Tensor<float> p1;
            K::softmax(logits, p1);
            const float batch_gt = K::cross_entropy(p1, yb);

            Tensor<float> gl;
            double batch_loss;
            if (kd_on) {
                Tensor<float> tl({bsz, n_cls});
                for (int i = 0; i < bsz; ++i)
                    std::memcpy(tl.data.data() + static_cast<int64_t>(i) * n_cls,
                                teacher_logits.data.data() + bidx[i] * n_cls,
                                sizeof(float) * n_cls);
                const Tensor<float> q =
                    compress::softmax_with_temperature(tl, kd->temperature);
                const Tensor<float> pt =
                    compress::softmax_with_temperature(logits, kd->temperature);
                const float batch_d = K::cross_entropy(pt, q);
                batch_loss = kd->alpha * batch_d + kd->beta * batch_gt;

                Tensor<float> gd, gg;
                K::softmax_xent_backward(pt, q, gd);
                K::softmax_xent_backward(p1, yb, gg);
                gl = Tensor<float>(logits.shape);
                const float ca = static_cast<float>(kd->alpha / kd->temperature);
                const float cb = static_cast<float>(kd->beta);
                for (int64_t i = 0; i < gl.numel(); ++i)
                    gl.data[i] = ca * gd.data[i] + cb * gg.data[i];
                d_loss += static_cast<double>(batch_d) * bsz;
                g_loss += static_cast<double>(batch_gt) * bsz;
            } else {
                K::softmax_xent_backward(p1, yb, gl);
                const double scale = kd ? kd->beta : 1.0;
                if (scale != 1.0)
                    for (auto& v : gl.data) v = static_cast<float>(scale * v);
                batch_loss = scale * batch_gt;
                if (kd) g_loss += static_cast<double>(batch_gt) * bsz;
            }
            tr_loss += batch_loss * bsz;
            for (int i = 0; i < bsz; ++i)
                if (argmax_row(p1.data.data() + static_cast<int64_t>(i) * n_cls, n_cls) ==
                    data.labels[bidx[i]])
                    ++tr_hit;

            auto grads = backward(spec, params, trace, gl);
            rmsprop_step(params, grads, cache, lr, cfg.rho, cfg.eps);
        }

        double val_loss = 0.0;
        int64_t val_hit = 0;
        for (int64_t vstart = 0; vstart < n_val; vstart += bs) {
            const std::vector<int64_t> bidx(val_idx.begin() + vstart,
                                            val_idx.begin() + std::min(n_val, vstart + bs));
            const Tensor<float> xb = data.gather(bidx);
            const Tensor<float> yb = data.targets(bidx, n_cls);
            Tensor<float> logits = forward<float>(spec, params, running, xb, false, 0, nullptr);
            Tensor<float> p;
            K::softmax(logits, p);
            val_loss += static_cast<double>(K::cross_entropy(p, yb)) * bidx.size();
            for (size_t i = 0; i < bidx.size(); ++i)
                if (argmax_row(p.data.data() + static_cast<int64_t>(i) * n_cls, n_cls) ==
                    data.labels[bidx[i]])
                    ++val_hit;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.train_loss = tr_loss / static_cast<double>(n_train);
        rec.val_loss = val_loss / static_cast<double>(n_val);
        rec.train_acc = static_cast<double>(tr_hit) / static_cast<double>(n_train);
        rec.val_acc = static_cast<double>(val_hit) / static_cast<double>(n_val);
        rec.distill_loss = d_loss / static_cast<double>(n_train);
        rec.gt_loss = g_loss / static_cast<double>(n_train);
        hist.epochs.push_back(rec);
        if (cfg.verbose)
            std::fprintf(stderr,
                         "epoch %3d  lr %.3g  train %.4f/%.3f  val %.4f/%.3f\n", epoch, lr,
                         rec.train_loss, rec.train_acc, rec.val_loss, rec.val_acc);

        if (rec.val_acc > best_acc) {
            best_acc = rec.val_acc;
            best_epoch = epoch;
            best_params = params;
            best_running = running;
        }
    }

    if (best_epoch >= 0)
        store_params(model, best_params, best_running);
    else
        store_params(model, params, running);  // zero-epoch run
    hist.best_epoch = best_epoch;
    hist.best_val_acc = std::max(best_acc, 0.0);

    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", hist.best_val_acc);
    model.meta["val_accuracy"] = buf;
    return {std::move(model), std::move(hist)};
}

std::pair<Model, History> train(const NetworkSpec& spec, const ImageSet& data,
                                const TrainingConfig& cfg) {
    return run_training(spec, data, cfg, nullptr, nullptr);
}

std::pair<Model, History> finetune(const Model& start, const ImageSet& data,
                                   const TrainingConfig& cfg) {
    return run_training(start.spec, data, cfg, &start, nullptr);
}

void write_history_csv(const History& h, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoFailure("cannot write " + path);
    f << "epoch,lr,train_loss,val_loss,train_acc,val_acc";
    if (h.distill) f << ",distill_loss,gt_loss";
    f << "\n";
    char buf[256];
    for (const EpochRecord& r : h.epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g", r.epoch, r.lr,
                      r.train_loss, r.val_loss, r.train_acc, r.val_acc);
        f << buf;
        if (h.distill) {
            std::snprintf(buf, sizeof buf, ",%.9g,%.9g", r.distill_loss, r.gt_loss);
            f << buf;
        }
        f << "\n";
    }
    if (!f) throw IoFailure("write failed for " + path);
}

}  // namespace hivesig::net
