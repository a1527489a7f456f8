#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hivesig/network.hpp"
#include "hivesig/tensor.hpp"
#include "hivesig/train.hpp"

namespace hivesig::compress {

enum class PruneStrategy { random, magnitude };
PruneStrategy prune_strategy_from_name(const std::string& name);

struct PruneReport {
    std::map<std::string, int> removed_units;  // layer -> units taken out
    std::vector<std::string> removed_layers;
    int64_t params_before = 0, params_after = 0;
    int64_t size_before = 0, size_after = 0;  // learnable bytes
    std::string to_json() const;
};

// Structural one-shot pruning of conv channels and hidden dense units (the
// class output layer is never touched): floor(fraction * units) per layer,
// chosen at random or by smallest outgoing-row L2 norm. Downstream consumers
// lose the matching input columns.
std::pair<net::Model, PruneReport> prune_neurons(const net::Model& m, double fraction,
                                                 PruneStrategy strategy, uint64_t seed = 0);

// Deletes whole convolutions that preserve both channel count and spatial
// size; anything else is refused.
std::pair<net::Model, PruneReport> prune_layers(const net::Model& m,
                                                const std::vector<std::string>& layer_names);

// Layer-pruning targets in the default architecture: the convolutions that
// run without batchnorm (the even-numbered ones all keep their channel count).
std::vector<std::string> default_prunable_layers(const net::NetworkSpec& spec);

Tensor<float> softmax_with_temperature(const Tensor<float>& logits, double temperature);

// CE of student probabilities against teacher probabilities, mean over batch.
double distillation_loss(const Tensor<float>& student_probs,
                         const Tensor<float>& teacher_probs);

// alpha * CE(softmax(logits/T), teacher_probs) + beta * CE(softmax(logits), one-hot)
double total_loss(const Tensor<float>& student_logits, const std::vector<int>& labels,
                  const Tensor<float>& teacher_probs, double alpha, double beta,
                  double temperature);

struct DistillConfig {
    double temperature = 4.0;
    double alpha = 0.7;
    double beta = 0.3;
    net::TrainingConfig train;  // optimizer settings; train.max_epochs is the budget
};

std::pair<net::Model, net::History> distill(const net::Model& teacher,
                                            const net::NetworkSpec& student_spec,
                                            const net::ImageSet& data,
                                            const DistillConfig& cfg);

// Weights-only int8 quantization of every dense layer's learnable tensors;
// running statistics and the convolutional trunk stay float. The calibration
// set measures the induced probability drift (recorded in model meta).
net::Model quantize_head(const net::Model& m, const net::ImageSet& calibration);

struct TensorSize {
    std::string name;
    int64_t params = 0;
    int64_t bytes = 0;
    bool quantized = false;
};

struct SizeReport {
    int64_t bytes = 0;   // learnable tensors
    int64_t params = 0;  // learnable parameters
    int64_t running_bytes = 0;
    std::vector<TensorSize> tensors;

    double mb() const { return static_cast<double>(bytes) / 1e6; }
    double mib() const { return static_cast<double>(bytes) / (1024.0 * 1024.0); }
    std::string to_json() const;
};

// f32 tensors cost 4 bytes/param; q8 cost 1 byte/param + 16 bytes of
// quantization parameters.
SizeReport size_report(const net::Model& m);

// Head-only quantization shrinks the head to a quarter: total - head + head/4.
double quantized_size_estimate(double total_mb, double head_mb);

}  // namespace hivesig::compress
