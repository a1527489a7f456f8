#include "hivesig/compress.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "hivesig/errors.hpp"
#include "hivesig/kernels.hpp"
#include "hivesig/rng.hpp"
#include "json.hpp"

namespace hivesig::compress {

namespace K = hivesig::kernels;
using net::LayerKind;
using net::LayerSpec;
using net::Model;
using net::ParamTensor;

PruneStrategy prune_strategy_from_name(const std::string& name) {
    if (name == "random") return PruneStrategy::random;
    if (name == "magnitude") return PruneStrategy::magnitude;
    throw UsageError("unknown prune strategy '" + name + "' (random|magnitude)");
}

namespace {

// keep rows along dim 0 (works for any rank, including 1-D)
ParamTensor take_dim0(const ParamTensor& t, const std::vector<int>& keep) {
    ParamTensor out;
    out.shape = t.shape;
    out.shape[0] = static_cast<int>(keep.size());
    const int64_t row = t.numel() / t.shape[0];
    out.f32.resize(keep.size() * static_cast<size_t>(row));
    for (size_t i = 0; i < keep.size(); ++i)
        std::memcpy(out.f32.data() + static_cast<int64_t>(i) * row,
                    t.f32.data() + static_cast<int64_t>(keep[i]) * row,
                    static_cast<size_t>(row) * sizeof(float));
    return out;
}

// keep input channels of a conv weight [out, in, kh, kw]
ParamTensor take_dim1(const ParamTensor& t, const std::vector<int>& keep) {
    ParamTensor out;
    out.shape = t.shape;
    out.shape[1] = static_cast<int>(keep.size());
    const int o_n = t.shape[0], i_n = t.shape[1];
    const int64_t cell = t.numel() / (static_cast<int64_t>(o_n) * i_n);
    out.f32.resize(static_cast<size_t>(o_n) * keep.size() * cell);
    for (int o = 0; o < o_n; ++o)
        for (size_t i = 0; i < keep.size(); ++i)
            std::memcpy(
                out.f32.data() + (static_cast<int64_t>(o) * keep.size() + i) * cell,
                t.f32.data() + (static_cast<int64_t>(o) * i_n + keep[i]) * cell,
                static_cast<size_t>(cell) * sizeof(float));
    return out;
}

// keep per-channel column blocks of a dense weight [out, C*block]
ParamTensor take_cols(const ParamTensor& t, const std::vector<int>& keep, int64_t block) {
    ParamTensor out;
    out.shape = t.shape;
    out.shape[1] = static_cast<int>(keep.size() * block);
    const int rows = t.shape[0];
    const int64_t in = t.shape[1];
    out.f32.resize(static_cast<size_t>(rows) * keep.size() * block);
    for (int r = 0; r < rows; ++r)
        for (size_t i = 0; i < keep.size(); ++i)
            std::memcpy(out.f32.data() + (static_cast<int64_t>(r) * keep.size() + i) * block,
                        t.f32.data() + static_cast<int64_t>(r) * in + keep[i] * block,
                        static_cast<size_t>(block) * sizeof(float));
    return out;
}

void require_float_model(const Model& m, const char* op) {
    for (const auto& [name, t] : m.params)
        if (t.dtype == net::DType::q8)
            throw PipelineOrder(std::string(op) + " must run before quantization (" + name +
                                " is already int8)");
}

}  // namespace

std::pair<Model, PruneReport> prune_neurons(const Model& m, double fraction,
                                            PruneStrategy strategy, uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw InvalidFraction("prune fraction must be in [0,1)");
    require_float_model(m, "neuron pruning");
    net::validate(m.spec);

    PruneReport rep;
    rep.params_before = net::count_params(m);
    rep.size_before = size_report(m).bytes;

    Model out = m;
    const auto shapes = net::infer_shapes(m.spec);  // spatial sizes survive pruning

    // the class output layer is off limits
    size_t last_dense = m.spec.layers.size();
    for (size_t i = 0; i < m.spec.layers.size(); ++i)
        if (m.spec.layers[i].kind == LayerKind::dense) last_dense = i;

    for (size_t li = 0; li < out.spec.layers.size(); ++li) {
        LayerSpec& l = out.spec.layers[li];
        const bool prunable =
            l.kind == LayerKind::conv || (l.kind == LayerKind::dense && li != last_dense);
        if (!prunable) continue;

        const int units = l.kind == LayerKind::conv ? l.out_ch : l.out_units;
        const int kill = static_cast<int>(std::floor(fraction * units));
        rep.removed_units[l.name] = kill;
        if (kill == 0) continue;

        std::vector<int> order(units);
        std::iota(order.begin(), order.end(), 0);
        if (strategy == PruneStrategy::random) {
            Rng rng(seed_stream(seed, fnv1a(l.name)));
            rng.shuffle(order.begin(), order.end());
        } else {
            const ParamTensor& w = out.params.at(l.name + ".weight");
            const int64_t row = w.numel() / units;
            std::vector<double> norm(units);
            for (int u = 0; u < units; ++u) {
                double s = 0.0;
                for (int64_t i = 0; i < row; ++i) {
                    const double v = w.f32[static_cast<int64_t>(u) * row + i];
                    s += v * v;
                }
                norm[u] = s;
            }
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return norm[a] < norm[b]; });
        }
        std::vector<char> gone(units, 0);
        for (int i = 0; i < kill; ++i) gone[order[i]] = 1;
        std::vector<int> keep;
        for (int u = 0; u < units; ++u)
            if (!gone[u]) keep.push_back(u);

        auto& P = out.params;
        P[l.name + ".weight"] = take_dim0(P.at(l.name + ".weight"), keep);
        P[l.name + ".bias"] = take_dim0(P.at(l.name + ".bias"), keep);
        if (l.has_bn) {
            P[l.name + ".bn_gamma"] = take_dim0(P.at(l.name + ".bn_gamma"), keep);
            P[l.name + ".bn_beta"] = take_dim0(P.at(l.name + ".bn_beta"), keep);
            auto& R = out.running;
            R[l.name + ".bn_mean"] = take_dim0(R.at(l.name + ".bn_mean"), keep);
            R[l.name + ".bn_var"] = take_dim0(R.at(l.name + ".bn_var"), keep);
        }
        if (l.kind == LayerKind::conv)
            l.out_ch = static_cast<int>(keep.size());
        else
            l.out_units = static_cast<int>(keep.size());

        // the next parameterized layer loses the matching input columns
        for (size_t j = li + 1; j < out.spec.layers.size(); ++j) {
            const LayerSpec& nl = out.spec.layers[j];
            if (nl.kind == LayerKind::conv) {
                P[nl.name + ".weight"] = take_dim1(P.at(nl.name + ".weight"), keep);
                break;
            }
            if (nl.kind == LayerKind::dense) {
                int64_t block = 1;  // spatial cells per channel at the dense input
                for (size_t t = li + 1; t < j; ++t)
                    if (out.spec.layers[t].kind == LayerKind::flatten)
                        block = static_cast<int64_t>(shapes[t - 1].h) * shapes[t - 1].w;
                P[nl.name + ".weight"] = take_cols(P.at(nl.name + ".weight"), keep, block);
                break;
            }
        }
    }

    net::validate(out.spec);
    rep.params_after = net::count_params(out);
    if (rep.params_after != net::count_params(out.spec))
        throw ShapeMismatch("pruning accounting disagrees with the surgered tensors");
    rep.size_after = size_report(out).bytes;
    return {std::move(out), rep};
}

std::vector<std::string> default_prunable_layers(const net::NetworkSpec& spec) {
    std::vector<std::string> names;
    int in_ch = spec.input.c;
    for (const LayerSpec& l : spec.layers) {
        if (l.kind == LayerKind::conv) {
            if (!l.has_bn && l.out_ch == in_ch) names.push_back(l.name);
            in_ch = l.out_ch;
        }
    }
    return names;
}

std::pair<Model, PruneReport> prune_layers(const Model& m,
                                           const std::vector<std::string>& layer_names) {
    require_float_model(m, "layer pruning");
    PruneReport rep;
    rep.params_before = net::count_params(m);
    rep.size_before = size_report(m).bytes;

    Model out = m;
    for (const std::string& name : layer_names) {
        size_t li = out.spec.layers.size();
        for (size_t i = 0; i < out.spec.layers.size(); ++i)
            if (out.spec.layers[i].name == name) li = i;
        if (li == out.spec.layers.size()) throw UsageError("no layer named '" + name + "'");
        const LayerSpec& l = out.spec.layers[li];
        if (l.kind != LayerKind::conv)
            throw ShapeIncompatible(name + " is not a convolution; only convolutions can go");

        const auto shapes = net::infer_shapes(out.spec);
        const net::Shape3 in = li == 0 ? out.spec.input : shapes[li - 1];
        const net::Shape3 o = shapes[li];
        if (!(in == o))
            throw ShapeIncompatible(name + " maps " + std::to_string(in.c) + "x" +
                                    std::to_string(in.h) + "x" + std::to_string(in.w) + " to " +
                                    std::to_string(o.c) + "x" + std::to_string(o.h) + "x" +
                                    std::to_string(o.w) + "; removing it would break the chain");

        for (const char* sfx : {".weight", ".bias", ".bn_gamma", ".bn_beta"})
            out.params.erase(name + sfx);
        for (const char* sfx : {".bn_mean", ".bn_var"})
            out.running.erase(name + sfx);
        out.spec.layers.erase(out.spec.layers.begin() + static_cast<int64_t>(li));
        rep.removed_layers.push_back(name);
    }

    net::validate(out.spec);
    rep.params_after = net::count_params(out);
    rep.size_after = size_report(out).bytes;
    return {std::move(out), rep};
}

Tensor<float> softmax_with_temperature(const Tensor<float>& logits, double temperature) {
    if (!(temperature > 0.0)) throw InvalidTemperature("temperature must be > 0");
    Tensor<float> scaled = logits;
    const float inv = static_cast<float>(1.0 / temperature);
    if (inv != 1.0f)
        for (float& v : scaled.data) v *= inv;
    Tensor<float> probs;
    K::softmax(scaled, probs);
    return probs;
}

double distillation_loss(const Tensor<float>& student_probs, const Tensor<float>& teacher_probs) {
    if (student_probs.shape != teacher_probs.shape)
        throw ShapeMismatch("student and teacher distributions disagree: " +
                            shape_str(student_probs.shape) + " vs " +
                            shape_str(teacher_probs.shape));
    return static_cast<double>(K::cross_entropy(student_probs, teacher_probs));
}

double total_loss(const Tensor<float>& student_logits, const std::vector<int>& labels,
                  const Tensor<float>& teacher_probs, double alpha, double beta,
                  double temperature) {
    if (!(temperature > 0.0)) throw InvalidTemperature("temperature must be > 0");
    const int n = student_logits.dim(0), k = student_logits.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw LengthMismatch("have " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(n) + " rows");
    Tensor<float> y({n, k});
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= k)
            throw OutOfRangeClass("label " + std::to_string(labels[i]));
        y.data[static_cast<int64_t>(i) * k + labels[i]] = 1.0f;
    }
    Tensor<float> p1;
    K::softmax(student_logits, p1);
    const double gt = static_cast<double>(K::cross_entropy(p1, y));
    if (alpha == 0.0) return beta * gt;

    const Tensor<float> pt = softmax_with_temperature(student_logits, temperature);
    const double d = distillation_loss(pt, teacher_probs);
    return alpha * d + beta * gt;
}

std::pair<Model, net::History> distill(const Model& teacher,
                                       const net::NetworkSpec& student_spec,
                                       const net::ImageSet& data, const DistillConfig& cfg) {
    if (teacher.spec.n_classes != student_spec.n_classes ||
        !(teacher.spec.input == student_spec.input))
        throw ShapeMismatch("teacher and student disagree on input shape or class count");
    net::KdSettings kd;
    kd.teacher = &teacher;
    kd.temperature = cfg.temperature;
    kd.alpha = cfg.alpha;
    kd.beta = cfg.beta;
    return net::run_training(student_spec, data, cfg.train, nullptr, &kd);
}

Model quantize_head(const Model& m, const net::ImageSet& calibration) {
    if (calibration.size() == 0) throw EmptyCalibration("calibration set is empty");
    net::validate(m.spec);

    Model out = m;
    for (const LayerSpec& l : m.spec.layers) {
        if (l.kind != LayerKind::dense) continue;
        for (const char* sfx : {".weight", ".bias", ".bn_gamma", ".bn_beta"}) {
            auto it = out.params.find(l.name + sfx);
            if (it == out.params.end() || it->second.dtype == net::DType::q8) continue;
            ParamTensor& t = it->second;
            const quant::QuantParams qp = quant::calibrate(t.f32);
            t.q8 = quant::quantize(t.f32, qp);
            t.qp = qp;
            t.dtype = net::DType::q8;
            t.f32.clear();
        }
    }

    // drift of the output distribution over the calibration set
    const Tensor<float> l_ref = net::predict_logits(m, calibration.x);
    const Tensor<float> l_q = net::predict_logits(out, calibration.x);
    Tensor<float> p_ref, p_q;
    K::softmax(l_ref, p_ref);
    K::softmax(l_q, p_q);
    double drift = 0.0;
    for (int64_t i = 0; i < p_ref.numel(); ++i)
        drift += std::fabs(static_cast<double>(p_ref.data[i]) - p_q.data[i]);
    drift /= static_cast<double>(p_ref.numel());

    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", drift);
    out.meta["quant_calibration_delta"] = buf;
    out.meta["quantized"] = "head";
    return out;
}

SizeReport size_report(const Model& m) {
    SizeReport r;
    for (const auto& [name, t] : m.params) {
        TensorSize e;
        e.name = name;
        e.params = t.numel();
        e.quantized = t.dtype == net::DType::q8;
        e.bytes = e.quantized ? t.numel() + 16 : 4 * t.numel();
        r.bytes += e.bytes;
        r.params += e.params;
        r.tensors.push_back(std::move(e));
    }
    for (const auto& [name, t] : m.running) r.running_bytes += 4 * t.numel();
    return r;
}

double quantized_size_estimate(double total_mb, double head_mb) {
    return total_mb - head_mb + head_mb / 4.0;
}

std::string PruneReport::to_json() const {
    nlohmann::json j;
    j["removed_units"] = removed_units;
    j["removed_layers"] = removed_layers;
    j["params_before"] = params_before;
    j["params_after"] = params_after;
    j["size_before_bytes"] = size_before;
    j["size_after_bytes"] = size_after;
    return j.dump(2);
}

std::string SizeReport::to_json() const {
    nlohmann::json j;
    j["bytes"] = bytes;
    j["params"] = params;
    j["running_bytes"] = running_bytes;
    j["mb"] = mb();
    j["mib"] = mib();
    nlohmann::json arr = nlohmann::json::array();
    for (const TensorSize& t : tensors)
        arr.push_back({{"name", t.name},
                       {"params", t.params},
                       {"bytes", t.bytes},
                       {"quantized", t.quantized}});
    j["tensors"] = std::move(arr);
    return j.dump(2);
}

}  // namespace hivesig::compress
