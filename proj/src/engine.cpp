#include "hivesig/engine.hpp"

#include "hivesig/errors.hpp"
#include "hivesig/kernels.hpp"
#include "hivesig/rng.hpp"

namespace hivesig::net {

namespace {

template <typename T>
const Tensor<T>& pick(const NamedTensors<T>& m, const std::string& name) {
    auto it = m.find(name);
    if (it == m.end()) throw ShapeMismatch("missing tensor " + name);
    return it->second;
}

template <typename T>
Tensor<T>& pick_mut(NamedTensors<T>& m, const std::string& name) {
    auto it = m.find(name);
    if (it == m.end()) throw ShapeMismatch("missing tensor " + name);
    return it->second;
}

template <typename T>
Tensor<T> reshaped(Tensor<T> t, std::vector<int> shape) {
    t.shape = std::move(shape);
    return t;
}

// Normalization of a layer's raw output, covering both the conv [N,C,H,W]
// and dense [N,F] cases; the bn kernel wants rank 4.
template <typename T>
Tensor<T> apply_bn(Tensor<T> raw, const LayerSpec& l, const NamedTensors<T>& params,
                   NamedTensors<T>& running, bool training, ForwardTrace<T>* trace) {
    const std::vector<int> orig = raw.shape;
    if (orig.size() == 2) raw = reshaped(std::move(raw), {orig[0], orig[1], 1, 1});

    Tensor<T> y, x_hat;
    std::vector<T> inv_std;
    kernels::batchnorm_forward(raw, pick(params, l.name + ".bn_gamma"),
                               pick(params, l.name + ".bn_beta"),
                               pick_mut(running, l.name + ".bn_mean").data,
                               pick_mut(running, l.name + ".bn_var").data, training,
                               T(kBnMomentum), T(kBnEps), y, x_hat, inv_std);
    if (trace) {
        trace->bn_xhat.push_back(std::move(x_hat));
        trace->bn_inv_std.push_back(std::move(inv_std));
    }
    return reshaped(std::move(y), orig);
}

}  // namespace

template <typename T>
Tensor<T> forward(const NetworkSpec& spec, const NamedTensors<T>& params,
                  NamedTensors<T>& running, const Tensor<T>& x, bool training, uint64_t seed,
                  ForwardTrace<T>* trace) {
    if (x.shape.size() != 4 || x.dim(1) != spec.input.c || x.dim(2) != spec.input.h ||
        x.dim(3) != spec.input.w)
        throw ShapeMismatch("network input is " + shape_str(x.shape) + ", expected [N," +
                            std::to_string(spec.input.c) + "," + std::to_string(spec.input.h) +
                            "," + std::to_string(spec.input.w) + "]");
    const int n = x.dim(0);

    if (trace) {
        *trace = ForwardTrace<T>{};
        trace->acts.reserve(spec.layers.size() + 1);
        trace->acts.push_back(x);
    }

    Tensor<T> cur = x;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        Tensor<T> out;
        switch (l.kind) {
            case LayerKind::conv:
                kernels::conv2d_forward(cur, pick(params, l.name + ".weight"),
                                        pick(params, l.name + ".bias"), l.stride, l.pad, out);
                break;
            case LayerKind::maxpool: {
                std::vector<int64_t> am;
                kernels::maxpool_forward(cur, l.pool_k, out, am);
                if (trace) trace->argmax.push_back(std::move(am));
                break;
            }
            case LayerKind::relu:
                kernels::relu_forward(cur, out);
                break;
            case LayerKind::dropout: {
                const uint64_t salt = seed_stream(seed, static_cast<uint64_t>(i));
                kernels::dropout_forward(cur, l.p, salt, training, out);
                if (trace) trace->drop_seed.push_back(salt);
                break;
            }
            case LayerKind::flatten: {
                const int flat = static_cast<int>(cur.numel() / n);
                out = reshaped(std::move(cur), {n, flat});
                break;
            }
            case LayerKind::dense: {
                if (cur.shape.size() == 4 && cur.dim(2) == 1 && cur.dim(3) == 1) {
                    const int feat = cur.dim(1);
                    cur = reshaped(std::move(cur), {n, feat});
                }
                kernels::dense_forward(cur, pick(params, l.name + ".weight"),
                                       pick(params, l.name + ".bias"), out);
                break;
            }
        }
        if (l.has_bn) out = apply_bn(std::move(out), l, params, running, training, trace);
        if (trace) trace->acts.push_back(out);
        cur = std::move(out);
    }
    return cur;
}

template <typename T>
NamedTensors<T> backward(const NetworkSpec& spec, const NamedTensors<T>& params,
                         const ForwardTrace<T>& trace, const Tensor<T>& grad_logits) {
    if (trace.acts.size() != spec.layers.size() + 1)
        throw ShapeMismatch("trace does not cover the network");

    NamedTensors<T> grads;
    Tensor<T> g = grad_logits;
    size_t pool_slot = trace.argmax.size();
    size_t bn_slot = trace.bn_xhat.size();
    size_t drop_slot = trace.drop_seed.size();

    for (size_t ri = spec.layers.size(); ri-- > 0;) {
        const LayerSpec& l = spec.layers[ri];
        const Tensor<T>& in = trace.acts[ri];
        if (l.has_bn) {
            --bn_slot;
            const std::vector<int> orig = g.shape;
            if (orig.size() == 2) g = reshaped(std::move(g), {orig[0], orig[1], 1, 1});
            Tensor<T> graw, ggamma, gbeta;
            kernels::batchnorm_backward(pick(params, l.name + ".bn_gamma"),
                                        trace.bn_xhat[bn_slot], trace.bn_inv_std[bn_slot], g,
                                        graw, ggamma, gbeta);
            grads[l.name + ".bn_gamma"] = std::move(ggamma);
            grads[l.name + ".bn_beta"] = std::move(gbeta);
            g = reshaped(std::move(graw), orig);
        }
        switch (l.kind) {
            case LayerKind::conv: {
                Tensor<T> gx, gw, gb;
                kernels::conv2d_backward(in, pick(params, l.name + ".weight"), l.stride, l.pad,
                                         g, gx, gw, gb);
                grads[l.name + ".weight"] = std::move(gw);
                grads[l.name + ".bias"] = std::move(gb);
                g = std::move(gx);
                break;
            }
            case LayerKind::maxpool: {
                --pool_slot;
                Tensor<T> gx(in.shape);
                kernels::maxpool_backward(g, trace.argmax[pool_slot], gx);
                g = std::move(gx);
                break;
            }
            case LayerKind::relu: {
                Tensor<T> gx;
                kernels::relu_backward(in, g, gx);
                g = std::move(gx);
                break;
            }
            case LayerKind::dropout: {
                --drop_slot;
                Tensor<T> gx;
                kernels::dropout_backward(g, l.p, trace.drop_seed[drop_slot], gx);
                g = std::move(gx);
                break;
            }
            case LayerKind::flatten:
                g = reshaped(std::move(g), in.shape);
                break;
            case LayerKind::dense: {
                Tensor<T> x2 = in;
                if (x2.shape.size() == 4 && x2.dim(2) == 1 && x2.dim(3) == 1) {
                    const int nb = x2.dim(0), feat = x2.dim(1);
                    x2 = reshaped(std::move(x2), {nb, feat});
                }
                Tensor<T> gx, gw, gb;
                kernels::dense_backward(x2, pick(params, l.name + ".weight"), g, gx, gw, gb);
                grads[l.name + ".weight"] = std::move(gw);
                grads[l.name + ".bias"] = std::move(gb);
                g = reshaped(std::move(gx), in.shape);
                break;
            }
        }
    }
    return grads;
}

template <typename T>
NamedTensors<T> cast_named(const std::map<std::string, Tensor<float>>& src) {
    NamedTensors<T> out;
    for (const auto& [name, t] : src) out[name] = t.template cast<T>();
    return out;
}

template Tensor<float> forward<float>(const NetworkSpec&, const NamedTensors<float>&,
                                      NamedTensors<float>&, const Tensor<float>&, bool, uint64_t,
                                      ForwardTrace<float>*);
template Tensor<double> forward<double>(const NetworkSpec&, const NamedTensors<double>&,
                                        NamedTensors<double>&, const Tensor<double>&, bool,
                                        uint64_t, ForwardTrace<double>*);
template NamedTensors<float> backward<float>(const NetworkSpec&, const NamedTensors<float>&,
                                             const ForwardTrace<float>&, const Tensor<float>&);
template NamedTensors<double> backward<double>(const NetworkSpec&, const NamedTensors<double>&,
                                               const ForwardTrace<double>&,
                                               const Tensor<double>&);
template NamedTensors<float> cast_named<float>(const std::map<std::string, Tensor<float>>&);
template NamedTensors<double> cast_named<double>(const std::map<std::string, Tensor<float>>&);

}  // namespace hivesig::net
