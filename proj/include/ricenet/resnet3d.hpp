#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "ricenet/model_params.hpp"
#include "ricenet/preprocess.hpp"
#include "ricenet/rng.hpp"
#include "ricenet/tensor.hpp"
#include "ricenet/volume.hpp"

namespace ricenet {

// 3D ResNet-18: stem conv (stride 2) -> BN -> ReLU -> max-pool 3/2/1 -> four
// stages of basic blocks at widths w, 2w, 4w, 8w (stages 2-4 downsample by 2
// with a 1x1x1 projection shortcut) -> global average pool -> affine to logits.
struct ResNet3DConfig {
    int in_channels = 3;
    int num_classes = 2;
    int base_width = 8;
    std::array<int, 4> blocks_per_stage{2, 2, 2, 2};
    int stem_kernel = 7;
    Index3 input_shape{64, 64, 64}; // (nx, ny, nz)
    double bn_epsilon = 1e-5;
    double bn_momentum = 0.1;

    void validate() const;
    friend bool operator==(const ResNet3DConfig&, const ResNet3DConfig&) = default;
};

struct ParamSpec {
    std::string name;
    std::vector<int> shape;
    bool trainable = true;
};

// Names and shapes of every tensor, in storage order.
std::vector<ParamSpec> param_specs(const ResNet3DConfig& cfg);

// Throws ShapeMismatchError if params do not match the config's spec list, or
// NonFiniteError if any value is not finite.
template <typename T>
void audit_params(const ModelParams<T>& params, const ResNet3DConfig& cfg);

// He-normal conv weights (std sqrt(2 / fan_in)); BN scale 1, offset 0, running
// mean 0, running variance 1; classifier weights N(0, 0.01^2), bias 0.
template <typename T>
ModelParams<T> init_model(const ResNet3DConfig& cfg, Rng& rng);

enum class Mode { Train, Eval };

// Per-BN-layer batch statistics from a train-mode pass, in param order.
template <typename T>
struct BatchNormStats {
    struct Entry {
        std::size_t running_mean_index;
        std::size_t running_var_index;
        std::vector<T> mean;
        std::vector<T> var; // biased
        std::size_t count;
    };
    std::vector<Entry> layers;
};

template <typename T>
struct LossAndGrads {
    T loss{};
    ModelParams<T> grads; // zero for running statistics
    Tensor<T> logits;
    BatchNormStats<T> batch_stats;
};

// Batch tensor (N, C, nz, ny, nx) built from channel-stacked samples.
template <typename T>
Tensor<T> make_batch(std::span<const Sample* const> samples);
template <typename T>
Tensor<T> make_batch(const Sample& sample);

// logits (N, num_classes). Train mode normalises with batch statistics and
// leaves params untouched; use backward() + update_running_stats() to train.
template <typename T>
Tensor<T> forward(const ResNet3DConfig& cfg, const ModelParams<T>& params, const Tensor<T>& batch, Mode mode);

// Train-mode forward, mean cross-entropy, exact reverse-mode gradients.
// labels[i] in {0, 1}. Throws DivergenceError on a non-finite loss.
template <typename T>
LossAndGrads<T> backward(const ResNet3DConfig& cfg, const ModelParams<T>& params, const Tensor<T>& batch,
                         std::span<const int> labels);

template <typename T>
void update_running_stats(ModelParams<T>& params, const BatchNormStats<T>& stats, double momentum);

// Row-wise softmax with max subtraction.
template <typename T>
Tensor<T> predict_prob(const Tensor<T>& logits);

template <typename T>
T cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

// Spatial size after stem + pool + the three strided stages, per axis.
Index3 final_feature_shape(const ResNet3DConfig& cfg);

} // namespace ricenet
