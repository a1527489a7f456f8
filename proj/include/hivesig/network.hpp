#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hivesig/quant.hpp"
#include "hivesig/tensor.hpp"

namespace hivesig::net {

inline constexpr float kBnMomentum = 0.1f;
inline constexpr float kBnEps = 1e-5f;

enum class LayerKind { conv, maxpool, relu, dropout, flatten, dense };

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::string name;  // required for layers that own parameters
    int out_ch = 0;    // conv
    int k = 3;
    int stride = 1;
    int pad = 1;
    bool has_bn = false;  // conv and dense
    int pool_k = 2;       // maxpool
    double p = 0.5;       // dropout
    int out_units = 0;    // dense

    static LayerSpec conv2d(std::string name, int out_ch, bool bn, int k = 3, int stride = 1,
                            int pad = 1);
    static LayerSpec maxpool(int k = 2);
    static LayerSpec relu();
    static LayerSpec dropout(double p);
    static LayerSpec flatten();
    static LayerSpec dense(std::string name, int units, bool bn);
};

struct Shape3 {
    int c = 0, h = 0, w = 0;
    int64_t numel() const { return static_cast<int64_t>(c) * h * w; }
    bool operator==(const Shape3&) const = default;
};

struct NetworkSpec {
    Shape3 input{3, 64, 64};
    std::vector<LayerSpec> layers;
    int n_classes = 4;
};

// Channel widths and head knobs for the builders. Empty widths pick the
// architecture's defaults.
struct ArchConfig {
    std::vector<int> widths;
    int in_channels = 3;
    int head_hidden = 64;  // the 36-unit variant of the head sits behind this
    double dropout_p = 0.5;
    int n_classes = 4;
};

inline const std::vector<int> kTeacherWidths = {32, 32, 64, 64, 128, 128, 256, 256};
inline const std::vector<int> kStudentWidths = {16, 16, 32, 32, 64, 64, 112, 256};

// Eight 3x3 convolutions with ReLU after each, batchnorm on convolutions
// 1,3,5,7 (1-based), and a 2x2 maxpool after every second convolution
// (64 -> 32 -> 16 -> 8 -> 4), feeding the classification head.
NetworkSpec build_teacher(ArchConfig cfg = {});
NetworkSpec build_student(ArchConfig cfg = {});

// dropout -> flatten -> dense(hidden)+bn -> dropout -> dense(classes)+bn;
// softmax is applied by the loss / at inference, not stored as a layer.
std::vector<LayerSpec> build_head(int hidden = 64, int n_classes = 4, double p = 0.5);

// Output shape after every layer; throws ShapeIncompatible on any mismatch.
std::vector<Shape3> infer_shapes(const NetworkSpec& spec);
void validate(const NetworkSpec& spec);

// Learnable parameters only: conv out*in*k^2+out, dense out*in+out, bn 2*ch.
// Running statistics are not counted.
int64_t count_params(const NetworkSpec& spec);

enum class DType { f32, q8 };

struct ParamTensor {
    std::vector<int> shape;
    DType dtype = DType::f32;
    std::vector<float> f32;
    std::vector<int8_t> q8;
    quant::QuantParams qp;  // meaningful only for q8

    int64_t numel() const { return Tensor<float>::numel_of(shape); }
    std::vector<float> as_f32() const {
        return dtype == DType::f32 ? f32 : quant::dequantize(q8, qp);
    }
};

struct Model {
    NetworkSpec spec;
    std::map<std::string, ParamTensor> params;   // learnable
    std::map<std::string, ParamTensor> running;  // batchnorm statistics
    std::map<std::string, std::string> meta;     // featurize recipe, class names, ...
};

// He-normal weights, zero biases, unit-gamma batchnorm. Each tensor draws
// from its own stream keyed by (seed, tensor name), so adding or removing
// layers does not shift other layers' values.
Model init_model(const NetworkSpec& spec, uint64_t seed);

int64_t count_params(const Model& m);

// Dequantized views for the engine.
std::map<std::string, Tensor<float>> float_params(const Model& m);
std::map<std::string, Tensor<float>> float_running(const Model& m);
void store_params(Model& m, const std::map<std::string, Tensor<float>>& p,
                  const std::map<std::string, Tensor<float>>& r);

// Checkpoint: "HSM1", u32 version, u64 header length, JSON header (spec,
// meta, tensor table with offsets and any QuantParams), raw little-endian
// payloads, trailing CRC32.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

}  // namespace hivesig::net
