#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ricenet/tensor.hpp"

// Volumetric layer kernels. Activations are (N, C, D, H, W) with W fastest.
// Convolutions have cubic kernels, no bias, and run as im2col + GEMM per sample.
namespace ricenet::layers {

inline int conv_out_dim(int n, int k, int stride, int pad)
{
    return (n + 2 * pad - k) / stride + 1;
}

struct ConvGeom {
    int cin;
    int cout;
    int k;
    int stride;
    int pad;
};

// weight: (cout, cin, k, k, k)
template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& in, std::span<const T> weight, const ConvGeom& g, std::vector<T>& scratch);

// Accumulates into dweight; writes din when non-null.
template <typename T>
void conv3d_backward(const Tensor<T>& in, std::span<const T> weight, const ConvGeom& g, const Tensor<T>& dout,
                     std::span<T> dweight, Tensor<T>* din, std::vector<T>& scratch);

// Straightforward nested-loop convolution, used as a test oracle.
template <typename T>
Tensor<T> conv3d_reference(const Tensor<T>& in, std::span<const T> weight, const ConvGeom& g);

template <typename T>
struct BatchNormCache {
    std::vector<T> xhat;
    std::vector<T> inv_std;    // per channel
    std::vector<T> batch_mean; // per channel
    std::vector<T> batch_var;  // per channel, biased
    std::size_t count = 0;     // elements per channel
};

template <typename T>
Tensor<T> batchnorm_train(const Tensor<T>& x, std::span<const T> gamma, std::span<const T> beta, double eps,
                          BatchNormCache<T>& cache);

template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& x, std::span<const T> gamma, std::span<const T> beta,
                         std::span<const T> running_mean, std::span<const T> running_var, double eps);

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& dy, std::span<const T> gamma, const BatchNormCache<T>& cache,
                             std::span<T> dgamma, std::span<T> dbeta);

template <typename T>
void relu_inplace(Tensor<T>& x);

// dx = dy where y > 0 else 0, computed in place on dy.
template <typename T>
void relu_backward_inplace(Tensor<T>& dy, const Tensor<T>& y);

// Max pooling, cubic window; padding never wins the max.
template <typename T>
Tensor<T> maxpool3d_forward(const Tensor<T>& x, int k, int stride, int pad, std::vector<std::int32_t>& argmax);

template <typename T>
Tensor<T> maxpool3d_backward(const Tensor<T>& dy, const std::vector<int>& in_shape,
                             const std::vector<std::int32_t>& argmax);

// (N, C, D, H, W) -> (N, C)
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dy, const std::vector<int>& in_shape);

// weight (out, in), bias (out); x (N, in) -> (N, out)
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, std::span<const T> weight, std::span<const T> bias, int out_features);

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, std::span<const T> weight, const Tensor<T>& dy, std::span<T> dweight,
                          std::span<T> dbias);

} // namespace ricenet::layers
