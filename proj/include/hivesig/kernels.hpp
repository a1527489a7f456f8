#pragma once

#include <cstdint>
#include <vector>

#include "hivesig/tensor.hpp"

// Layer math, forward and backward. float drives training and inference;
// the double instantiation exists for finite-difference gradient checks.
//
// Threading contract: loops parallelize only across disjoint output elements
// and every accumulation runs in a fixed serial order, so results are
// bitwise identical for any thread count.
namespace hivesig::kernels {

template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                    int pad, Tensor<T>& y);

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad,
                     const Tensor<T>& gy, Tensor<T>& gx, Tensor<T>& gw, Tensor<T>& gb);

template <typename T>
void dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, Tensor<T>& y);

template <typename T>
void dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy, Tensor<T>& gx,
                    Tensor<T>& gw, Tensor<T>& gb);

// window k, stride k; argmax stores the flat input offset that won each
// window (first occurrence on ties) for gradient routing.
template <typename T>
void maxpool_forward(const Tensor<T>& x, int k, Tensor<T>& y, std::vector<int64_t>& argmax);

template <typename T>
void maxpool_backward(const Tensor<T>& gy, const std::vector<int64_t>& argmax, Tensor<T>& gx);

// Per-channel normalization over (N,H,W). Training mode uses batch
// statistics (biased variance) and folds them into the running buffers with
// `momentum`; eval mode reads the running buffers. x_hat and inv_std are
// backward caches, filled only in training mode.
template <typename T>
void batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       std::vector<T>& running_mean, std::vector<T>& running_var, bool training,
                       T momentum, T eps, Tensor<T>& y, Tensor<T>& x_hat,
                       std::vector<T>& inv_std);

template <typename T>
void batchnorm_backward(const Tensor<T>& gamma, const Tensor<T>& x_hat,
                        const std::vector<T>& inv_std, const Tensor<T>& gy, Tensor<T>& gx,
                        Tensor<T>& ggamma, Tensor<T>& gbeta);

template <typename T>
void relu_forward(const Tensor<T>& x, Tensor<T>& y);

template <typename T>
void relu_backward(const Tensor<T>& x, const Tensor<T>& gy, Tensor<T>& gx);

// Inverted dropout: kept units scale by 1/(1-p) in training, eval is the
// identity. The mask is a pure function of (seed, element index), so the
// backward pass recomputes it instead of storing it.
template <typename T>
void dropout_forward(const Tensor<T>& x, double p, uint64_t seed, bool training, Tensor<T>& y);

template <typename T>
void dropout_backward(const Tensor<T>& gy, double p, uint64_t seed, Tensor<T>& gx);

// Row-wise max-shifted softmax over [N, K].
template <typename T>
void softmax(const Tensor<T>& logits, Tensor<T>& probs);

// Mean over the batch of -sum(target * log(max(probs, floor))).
template <typename T>
T cross_entropy(const Tensor<T>& probs, const Tensor<T>& target);

// Gradient of cross_entropy(softmax(logits), target) w.r.t. logits.
template <typename T>
void softmax_xent_backward(const Tensor<T>& probs, const Tensor<T>& target, Tensor<T>& glogits);

}  // namespace hivesig::kernels
