#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hivesig/network.hpp"
#include "hivesig/tensor.hpp"

namespace hivesig::net {

template <typename T>
using NamedTensors = std::map<std::string, Tensor<T>>;

// Everything backward needs, indexed by layer position. acts[0] is the
// network input; acts[i+1] is layer i's output.
template <typename T>
struct ForwardTrace {
    std::vector<Tensor<T>> acts;
    std::vector<std::vector<int64_t>> argmax;  // maxpool layers
    std::vector<Tensor<T>> bn_xhat;            // layers with batchnorm
    std::vector<std::vector<T>> bn_inv_std;
    std::vector<uint64_t> drop_seed;           // dropout layers
};

// Runs the network, returning logits [N, n_classes]. Training mode uses
// batch statistics (updating `running`), applies dropout, and fills `trace`
// when given; eval mode reads running stats and skips dropout.
template <typename T>
Tensor<T> forward(const NetworkSpec& spec, const NamedTensors<T>& params,
                  NamedTensors<T>& running, const Tensor<T>& x, bool training, uint64_t seed,
                  ForwardTrace<T>* trace);

// Parameter gradients from a trace and the loss gradient at the logits.
template <typename T>
NamedTensors<T> backward(const NetworkSpec& spec, const NamedTensors<T>& params,
                         const ForwardTrace<T>& trace, const Tensor<T>& grad_logits);

template <typename T>
NamedTensors<T> cast_named(const std::map<std::string, Tensor<float>>& src);

}  // namespace hivesig::net
