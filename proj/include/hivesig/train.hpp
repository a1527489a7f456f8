#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hivesig/engine.hpp"
#include "hivesig/network.hpp"
#include "hivesig/tensor.hpp"

namespace hivesig::net {

// Labeled rasters, the training currency. x is [N, C, H, W] planar.
struct ImageSet {
    Tensor<float> x;
    std::vector<int> labels;
    std::vector<std::string> class_names;

    int64_t size() const { return static_cast<int64_t>(labels.size()); }
    int64_t sample_floats() const { return size() > 0 ? x.numel() / size() : 0; }

    Tensor<float> gather(const std::vector<int64_t>& idx) const;
    // one-hot rows for the gathered samples, [B, n_classes]
    Tensor<float> targets(const std::vector<int64_t>& idx, int n_classes) const;
};

struct TrainingConfig {
    double lr0 = 1e-3;
    double rho = 0.9;
    double eps = 1e-8;
    int max_epochs = 250;
    double lr_factor = 0.5;
    int lr_interval = 6;
    int batch_size = 32;
    uint64_t seed = 0;
    double val_fraction = 0.15;
    bool verbose = false;  // epoch lines on stderr
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0, val_loss = 0.0;
    double train_acc = 0.0, val_acc = 0.0;
    double distill_loss = 0.0, gt_loss = 0.0;  // distillation runs only
};

struct History {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double best_val_acc = 0.0;
    bool distill = false;  // adds the two component columns to the CSV
};

// columns: epoch, lr, train_loss, val_loss, train_acc, val_acc
// (+ distill_loss, gt_loss when the history came from distillation)
void write_history_csv(const History& h, const std::string& path);

// lr0 * factor^floor(epoch / interval)
double lr_schedule(const TrainingConfig& cfg, int epoch);

// cache <- rho*cache + (1-rho)*g^2 ; p <- p - lr*g/(sqrt(cache)+eps)
void rmsprop_step(NamedTensors<float>& params, const NamedTensors<float>& grads,
                  NamedTensors<float>& cache, double lr, double rho, double eps);

// Per-class split; every class sends clamp(round(val_fraction*n_c), 1, n_c-1)
// samples to validation. Deterministic in (labels, seed).
void stratified_split(const std::vector<int>& labels, int n_classes, double val_fraction,
                      uint64_t seed, std::vector<int64_t>& train_idx,
                      std::vector<int64_t>& val_idx);

// Batched eval-mode forward. Quantized tensors are dequantized up front.
Tensor<float> predict_logits(const Model& m, const Tensor<float>& x, int batch = 64);
std::vector<int> predict_classes(const Model& m, const ImageSet& data, int batch = 64);
double accuracy_on(const Model& m, const ImageSet& data, int batch = 64);

std::pair<Model, History> train(const NetworkSpec& spec, const ImageSet& data,
                                const TrainingConfig& cfg);

// Same loop, starting from already-trained parameters (post-prune recovery).
std::pair<Model, History> finetune(const Model& start, const ImageSet& data,
                                   const TrainingConfig& cfg);

// The loop behind train(), finetune(), and distillation. With a teacher the
// objective becomes alpha * CE(student@T, teacher@T) + beta * CE(student, labels);
// teacher runs in eval mode and is never touched.
struct KdSettings {
    const Model* teacher = nullptr;
    double temperature = 4.0;
    double alpha = 0.7;
    double beta = 0.3;
};
std::pair<Model, History> run_training(const NetworkSpec& spec, const ImageSet& data,
                                       const TrainingConfig& cfg, const Model* start,
                                       const KdSettings* kd);

}  // namespace hivesig::net
