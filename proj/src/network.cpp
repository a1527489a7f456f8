#include "hivesig/network.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "hivesig/errors.hpp"
#include "hivesig/rng.hpp"
#include "json.hpp"

namespace hivesig::net {

LayerSpec LayerSpec::conv2d(std::string name, int out_ch, bool bn, int k, int stride, int pad) {
    LayerSpec l;
    l.kind = LayerKind::conv;
    l.name = std::move(name);
    l.out_ch = out_ch;
    l.k = k;
    l.stride = stride;
    l.pad = pad;
    l.has_bn = bn;
    return l;
}

LayerSpec LayerSpec::maxpool(int k) {
    LayerSpec l;
    l.kind = LayerKind::maxpool;
    l.pool_k = k;
    return l;
}

LayerSpec LayerSpec::relu() {
    LayerSpec l;
    l.kind = LayerKind::relu;
    return l;
}

LayerSpec LayerSpec::dropout(double p) {
    LayerSpec l;
    l.kind = LayerKind::dropout;
    l.p = p;
    return l;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec l;
    l.kind = LayerKind::flatten;
    return l;
}

LayerSpec LayerSpec::dense(std::string name, int units, bool bn) {
    LayerSpec l;
    l.kind = LayerKind::dense;
    l.name = std::move(name);
    l.out_units = units;
    l.has_bn = bn;
    return l;
}

std::vector<LayerSpec> build_head(int hidden, int n_classes, double p) {
    return {
        LayerSpec::dropout(p),          LayerSpec::flatten(),
        LayerSpec::dense("fc1", hidden, true), LayerSpec::dropout(p),
        LayerSpec::dense("fc2", n_classes, true),
    };
}

namespace {

NetworkSpec build_cnn(const ArchConfig& cfg, const std::vector<int>& default_widths) {
    const std::vector<int>& widths = cfg.widths.empty() ? default_widths : cfg.widths;
    if (widths.empty() || widths.size() % 2 != 0)
        throw ShapeIncompatible("need an even, non-empty conv width list");

    NetworkSpec spec;
    spec.input = {cfg.in_channels, 64, 64};
    spec.n_classes = cfg.n_classes;
    for (size_t i = 0; i < widths.size(); ++i) {
        // batchnorm on the odd-numbered convolutions (1-based: 1,3,5,7)
        const bool bn = i % 2 == 0;
        spec.layers.push_back(
            LayerSpec::conv2d("conv" + std::to_string(i + 1), widths[i], bn));
        spec.layers.push_back(LayerSpec::relu());
        if (i % 2 == 1) spec.layers.push_back(LayerSpec::maxpool(2));
    }
    for (LayerSpec& l : build_head(cfg.head_hidden, cfg.n_classes, cfg.dropout_p))
        spec.layers.push_back(std::move(l));
    validate(spec);
    return spec;
}

}  // namespace

NetworkSpec build_teacher(ArchConfig cfg) { return build_cnn(cfg, kTeacherWidths); }
NetworkSpec build_student(ArchConfig cfg) { return build_cnn(cfg, kStudentWidths); }

std::vector<Shape3> infer_shapes(const NetworkSpec& spec) {
    std::vector<Shape3> out;
    out.reserve(spec.layers.size());
    Shape3 s = spec.input;
    if (s.c <= 0 || s.h <= 0 || s.w <= 0) throw ShapeIncompatible("input shape must be positive");
    for (const LayerSpec& l : spec.layers) {
        switch (l.kind) {
            case LayerKind::conv: {
                if (l.out_ch <= 0) throw ShapeIncompatible(l.name + ": conv needs channels");
                if (s.h + 2 * l.pad < l.k || s.w + 2 * l.pad < l.k)
                    throw ShapeIncompatible(l.name + ": kernel larger than padded input");
                s = {l.out_ch, (s.h + 2 * l.pad - l.k) / l.stride + 1,
                     (s.w + 2 * l.pad - l.k) / l.stride + 1};
                break;
            }
            case LayerKind::maxpool:
                if (s.h % l.pool_k != 0 || s.w % l.pool_k != 0)
                    throw ShapeIncompatible("pool window does not divide " +
                                            std::to_string(s.h) + "x" + std::to_string(s.w));
                s.h /= l.pool_k;
                s.w /= l.pool_k;
                break;
            case LayerKind::relu:
            case LayerKind::dropout:
                break;
            case LayerKind::flatten:
                s = {static_cast<int>(s.numel()), 1, 1};
                break;
            case LayerKind::dense:
                if (s.h != 1 || s.w != 1)
                    throw ShapeIncompatible(l.name + ": dense input is not flattened");
                if (l.out_units <= 0) throw ShapeIncompatible(l.name + ": dense needs units");
                s = {l.out_units, 1, 1};
                break;
        }
        out.push_back(s);
    }
    return out;
}

void validate(const NetworkSpec& spec) {
    const auto shapes = infer_shapes(spec);
    if (spec.layers.empty() || spec.layers.back().kind != LayerKind::dense ||
        spec.layers.back().out_units != spec.n_classes)
        throw ShapeIncompatible("network must end in a dense layer over the classes");
    std::map<std::string, int> seen;
    for (const LayerSpec& l : spec.layers) {
        if (l.kind != LayerKind::conv && l.kind != LayerKind::dense) continue;
        if (l.name.empty()) throw ShapeIncompatible("parameterized layer without a name");
        if (++seen[l.name] > 1) throw ShapeIncompatible("duplicate layer name " + l.name);
    }
    (void)shapes;
}

int64_t count_params(const NetworkSpec& spec) {
    const auto shapes = infer_shapes(spec);
    int64_t total = 0;
    Shape3 in = spec.input;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.kind == LayerKind::conv) {
            total += static_cast<int64_t>(l.out_ch) * in.c * l.k * l.k + l.out_ch;
            if (l.has_bn) total += 2LL * l.out_ch;
        } else if (l.kind == LayerKind::dense) {
            total += static_cast<int64_t>(l.out_units) * in.c + l.out_units;
            if (l.has_bn) total += 2LL * l.out_units;
        }
        in = shapes[i];
    }
    return total;
}

int64_t count_params(const Model& m) {
    int64_t total = 0;
    for (const auto& [name, t] : m.params) total += t.numel();
    return total;
}

namespace {

ParamTensor f32_tensor(std::vector<int> shape) {
    ParamTensor t;
    t.shape = std::move(shape);
    t.f32.assign(static_cast<size_t>(t.numel()), 0.0f);
    return t;
}

void fill_he_normal(ParamTensor& t, int64_t fan_in, uint64_t seed, const std::string& name) {
    Rng rng(seed_stream(seed, fnv1a(name)));
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (float& v : t.f32) v = static_cast<float>(rng.normal() * sd);
}

}  // namespace

Model init_model(const NetworkSpec& spec, uint64_t seed) {
    validate(spec);
    Model m;
    m.spec = spec;
    Shape3 in = spec.input;
    const auto shapes = infer_shapes(spec);
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.kind == LayerKind::conv) {
            ParamTensor w = f32_tensor({l.out_ch, in.c, l.k, l.k});
            fill_he_normal(w, static_cast<int64_t>(in.c) * l.k * l.k, seed, l.name + ".weight");
            m.params[l.name + ".weight"] = std::move(w);
            m.params[l.name + ".bias"] = f32_tensor({l.out_ch});
        } else if (l.kind == LayerKind::dense) {
            ParamTensor w = f32_tensor({l.out_units, in.c});
            fill_he_normal(w, in.c, seed, l.name + ".weight");
            m.params[l.name + ".weight"] = std::move(w);
            m.params[l.name + ".bias"] = f32_tensor({l.out_units});
        }
        if ((l.kind == LayerKind::conv || l.kind == LayerKind::dense) && l.has_bn) {
            const int ch = l.kind == LayerKind::conv ? l.out_ch : l.out_units;
            ParamTensor gamma = f32_tensor({ch});
            std::fill(gamma.f32.begin(), gamma.f32.end(), 1.0f);
            m.params[l.name + ".bn_gamma"] = std::move(gamma);
            m.params[l.name + ".bn_beta"] = f32_tensor({ch});
            m.running[l.name + ".bn_mean"] = f32_tensor({ch});
            ParamTensor var = f32_tensor({ch});
            std::fill(var.f32.begin(), var.f32.end(), 1.0f);
            m.running[l.name + ".bn_var"] = std::move(var);
        }
        in = shapes[i];
    }
    return m;
}

std::map<std::string, Tensor<float>> float_params(const Model& m) {
    std::map<std::string, Tensor<float>> out;
    for (const auto& [name, t] : m.params) out[name] = Tensor<float>(t.shape, t.as_f32());
    return out;
}

std::map<std::string, Tensor<float>> float_running(const Model& m) {
    std::map<std::string, Tensor<float>> out;
    for (const auto& [name, t] : m.running) out[name] = Tensor<float>(t.shape, t.as_f32());
    return out;
}

void store_params(Model& m, const std::map<std::string, Tensor<float>>& p,
                  const std::map<std::string, Tensor<float>>& r) {
    for (const auto& [name, t] : p) {
        ParamTensor& dst = m.params[name];
        dst.shape = t.shape;
        dst.dtype = DType::f32;
        dst.f32 = t.data;
        dst.q8.clear();
    }
    for (const auto& [name, t] : r) {
        ParamTensor& dst = m.running[name];
        dst.shape = t.shape;
        dst.dtype = DType::f32;
        dst.f32 = t.data;
        dst.q8.clear();
    }
}

// ----- checkpoint serialization -----

namespace {

using json = nlohmann::json;

const char* kind_str(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::relu: return "relu";
        case LayerKind::dropout: return "dropout";
        case LayerKind::flatten: return "flatten";
        case LayerKind::dense: return "dense";
    }
    return "?";
}

LayerKind kind_of(const std::string& s) {
    if (s == "conv") return LayerKind::conv;
    if (s == "maxpool") return LayerKind::maxpool;
    if (s == "relu") return LayerKind::relu;
    if (s == "dropout") return LayerKind::dropout;
    if (s == "flatten") return LayerKind::flatten;
    if (s == "dense") return LayerKind::dense;
    throw MalformedHeader("unknown layer kind " + s);
}

json spec_to_json(const NetworkSpec& spec) {
    json j;
    j["input"] = {spec.input.c, spec.input.h, spec.input.w};
    j["n_classes"] = spec.n_classes;
    json layers = json::array();
    for (const LayerSpec& l : spec.layers) {
        json e;
        e["kind"] = kind_str(l.kind);
        switch (l.kind) {
            case LayerKind::conv:
                e["name"] = l.name;
                e["out_ch"] = l.out_ch;
                e["k"] = l.k;
                e["stride"] = l.stride;
                e["pad"] = l.pad;
                e["bn"] = l.has_bn;
                break;
            case LayerKind::maxpool:
                e["k"] = l.pool_k;
                break;
            case LayerKind::dropout:
                e["p"] = l.p;
                break;
            case LayerKind::dense:
                e["name"] = l.name;
                e["units"] = l.out_units;
                e["bn"] = l.has_bn;
                break;
            default:
                break;
        }
        layers.push_back(std::move(e));
    }
    j["layers"] = std::move(layers);
    return j;
}

NetworkSpec spec_from_json(const json& j) {
    NetworkSpec spec;
    spec.input = {j.at("input").at(0), j.at("input").at(1), j.at("input").at(2)};
    spec.n_classes = j.at("n_classes");
    for (const json& e : j.at("layers")) {
        const LayerKind k = kind_of(e.at("kind"));
        switch (k) {
            case LayerKind::conv:
                spec.layers.push_back(LayerSpec::conv2d(e.at("name"), e.at("out_ch"), e.at("bn"),
                                                        e.at("k"), e.at("stride"), e.at("pad")));
                break;
            case LayerKind::maxpool:
                spec.layers.push_back(LayerSpec::maxpool(e.at("k")));
                break;
            case LayerKind::relu:
                spec.layers.push_back(LayerSpec::relu());
                break;
            case LayerKind::dropout:
                spec.layers.push_back(LayerSpec::dropout(e.at("p")));
                break;
            case LayerKind::flatten:
                spec.layers.push_back(LayerSpec::flatten());
                break;
            case LayerKind::dense:
                spec.layers.push_back(LayerSpec::dense(e.at("name"), e.at("units"), e.at("bn")));
                break;
        }
    }
    return spec;
}

json qp_to_json(const quant::QuantParams& qp) {
    return {{"scale", qp.scale},   {"zero_point", qp.zero_point}, {"q_min", qp.q_min},
            {"q_max", qp.q_max},   {"x_min", qp.x_min},           {"x_max", qp.x_max}};
}

quant::QuantParams qp_from_json(const json& j) {
    quant::QuantParams qp;
    qp.scale = j.at("scale");
    qp.zero_point = j.at("zero_point");
    qp.q_min = j.at("q_min");
    qp.q_max = j.at("q_max");
    qp.x_min = j.at("x_min");
    qp.x_max = j.at("x_max");
    return qp;
}

void append_tensor(json& table, std::string name, const char* group, const ParamTensor& t,
                   std::string& payload) {
    json e;
    e["name"] = std::move(name);
    e["group"] = group;
    e["shape"] = t.shape;
    e["offset"] = payload.size();
    if (t.dtype == DType::f32) {
        e["dtype"] = "f32";
        e["bytes"] = t.f32.size() * 4;
        payload.append(reinterpret_cast<const char*>(t.f32.data()), t.f32.size() * 4);
    } else {
        e["dtype"] = "q8";
        e["bytes"] = t.q8.size();
        e["qp"] = qp_to_json(t.qp);
        payload.append(reinterpret_cast<const char*>(t.q8.data()), t.q8.size());
    }
    table.push_back(std::move(e));
}

}  // namespace

void save_model(const Model& m, const std::string& path) {
    std::string payload;
    json table = json::array();
    for (const auto& [name, t] : m.params) append_tensor(table, name, "params", t, payload);
    for (const auto& [name, t] : m.running) append_tensor(table, name, "running", t, payload);

    json header;
    header["version"] = 1;
    header["spec"] = spec_to_json(m.spec);
    header["meta"] = m.meta;
    header["tensors"] = std::move(table);
    const std::string hdr = header.dump();

    std::string out;
    out.reserve(16 + hdr.size() + payload.size() + 4);
    out.append("HSM1", 4);
    const uint32_t version = 1;
    out.append(reinterpret_cast<const char*>(&version), 4);
    const uint64_t hdr_len = hdr.size();
    out.append(reinterpret_cast<const char*>(&hdr_len), 8);
    out += hdr;
    out += payload;

    uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(out.data()),
                static_cast<uInt>(out.size()));
    out.append(reinterpret_cast<const char*>(&crc), 4);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot write " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoFailure("write failed for " + path);
}

Model load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (bytes.size() < 20) throw MalformedHeader(path + ": too small for a checkpoint");
    if (std::memcmp(bytes.data(), "HSM1", 4) != 0)
        throw VersionMismatch(path + ": bad checkpoint magic");
    uint32_t version;
    std::memcpy(&version, bytes.data() + 4, 4);
    if (version != 1)
        throw VersionMismatch(path + ": unsupported checkpoint version " +
                              std::to_string(version));

    uint32_t crc_stored;
    std::memcpy(&crc_stored, bytes.data() + bytes.size() - 4, 4);
    uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size() - 4));
    if (crc != crc_stored) throw ChecksumMismatch(path + ": checkpoint CRC mismatch");

    uint64_t hdr_len;
    std::memcpy(&hdr_len, bytes.data() + 8, 8);
    if (16 + hdr_len + 4 > bytes.size()) throw MalformedHeader(path + ": header overruns file");

    json header;
    try {
        header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + hdr_len);
    } catch (const json::exception& e) {
        throw MalformedHeader(path + ": bad checkpoint header: " + e.what());
    }

    Model m;
    try {
        m.spec = spec_from_json(header.at("spec"));
        m.meta = header.at("meta").get<std::map<std::string, std::string>>();
        const char* payload = bytes.data() + 16 + hdr_len;
        const size_t payload_len = bytes.size() - 16 - hdr_len - 4;
        for (const json& e : header.at("tensors")) {
            ParamTensor t;
            t.shape = e.at("shape").get<std::vector<int>>();
            const size_t offset = e.at("offset");
            const size_t nbytes = e.at("bytes");
            if (offset + nbytes > payload_len)
                throw MalformedHeader(path + ": tensor payload overruns file");
            const std::string dtype = e.at("dtype");
            if (dtype == "f32") {
                t.dtype = DType::f32;
                t.f32.resize(nbytes / 4);
                std::memcpy(t.f32.data(), payload + offset, nbytes);
            } else if (dtype == "q8") {
                t.dtype = DType::q8;
                t.q8.resize(nbytes);
                std::memcpy(t.q8.data(), payload + offset, nbytes);
                t.qp = qp_from_json(e.at("qp"));
            } else {
                throw MalformedHeader(path + ": unknown tensor dtype " + dtype);
            }
            if (t.numel() != (dtype == "f32" ? static_cast<int64_t>(nbytes / 4)
                                             : static_cast<int64_t>(nbytes)))
                throw MalformedHeader(path + ": tensor size disagrees with shape");
            if (e.at("group") == "running")
                m.running[e.at("name")] = std::move(t);
            else
                m.params[e.at("name")] = std::move(t);
        }
    } catch (const json::exception& e) {
        throw MalformedHeader(path + ": bad checkpoint header: " + e.what());
    }
    validate(m.spec);
    return m;
}

}  // namespace hivesig::net
