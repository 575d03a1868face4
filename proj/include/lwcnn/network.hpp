#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "lwcnn/layers.hpp"

namespace lwcnn {

/// Hyperparameters that fully determine one model.
struct NetworkConfig {
    static constexpr std::size_t kConvLayers = 4;
    static constexpr std::size_t kInputChannels = 3;
    static constexpr std::size_t kNumClasses = 4;

    std::array<std::size_t, kConvLayers> filters{32, 128, 128, 128};
    std::array<std::size_t, kConvLayers> kernels{3, 4, 3, 3};
    std::size_t dense_units = 384;
    double dropout_rate = 0.3;
    double learning_rate = 9.534e-4;
    std::size_t input_size = 150;

    /// Throws std::invalid_argument naming the first violated invariant.
    void validate() const;

    /// Spatial size after the four 2x2 pools (150 -> 75 -> 37 -> 18 -> 9).
    std::size_t final_spatial() const;
    std::size_t flatten_size() const { return final_spatial() * final_spatial() * filters.back(); }

    bool operator==(const NetworkConfig &) const = default;
};

void to_json(nlohmann::json &j, const NetworkConfig &c);
void from_json(const nlohmann::json &j, NetworkConfig &c);

/// Closed-form trainable parameter count for a validated config.
std::size_t param_count(const NetworkConfig &config);

enum class Mode { inference, training };

/// Values saved by a training-mode forward pass for the backward pass.
template <typename T>
struct ForwardCache {
    std::array<BasicTensor<T>, NetworkConfig::kConvLayers> conv_inputs;
    std::array<BasicTensor<T>, NetworkConfig::kConvLayers> conv_outputs;  // pre-ReLU
    std::array<std::vector<std::uint32_t>, NetworkConfig::kConvLayers> pool_argmax;
    BasicTensor<T> flat;        // input to the hidden dense layer
    BasicTensor<T> hidden_pre;  // hidden dense output before ReLU
    BasicTensor<T> dropout_mask;
    BasicTensor<T> dropped;     // input to the output layer
    bool training = false;
};

/// conv1 pool conv2 pool conv3 pool conv4 pool flatten dense(ReLU) dropout dense(4) softmax.
/// Every conv is followed by ReLU. forward() returns logits; softmax is applied by the loss.
template <typename T>
class Network {
public:
    Network(const NetworkConfig &config, std::uint64_t seed);

    const NetworkConfig &config() const { return config_; }

    BasicTensor<T> forward(const BasicTensor<T> &input, Mode mode, Rng *dropout_rng = nullptr,
                           ForwardCache<T> *cache = nullptr) const;

    /// Gradients for every parameter tensor, in parameters() order.
    std::vector<BasicTensor<T>> backward(const ForwardCache<T> &cache, const BasicTensor<T> &grad_logits) const;

    /// Post-ReLU activations of the first `layers` conv blocks.
    std::vector<BasicTensor<T>> feature_maps(const BasicTensor<T> &input, std::size_t layers) const;

    /// conv1.kernel, conv1.bias, ..., conv4.bias, hidden.weights, hidden.bias, output.weights, output.bias
    std::vector<BasicTensor<T> *> parameters();
    std::vector<const BasicTensor<T> *> parameters() const;

    /// Number of stored weight elements.
    std::size_t stored_parameter_count() const;

    const ConvLayer<T> &conv(std::size_t i) const { return convs_.at(i); }
    const DenseLayer<T> &hidden() const { return hidden_; }
    const DenseLayer<T> &output() const { return output_; }

private:
    NetworkConfig config_;
    std::array<ConvLayer<T>, NetworkConfig::kConvLayers> convs_;
    DenseLayer<T> hidden_;
    DenseLayer<T> output_;
};

/// Glorot-uniform weights, zero biases; deterministic in the seed.
template <typename T = float>
Network<T> build_network(const NetworkConfig &config, std::uint64_t seed) {
    return Network<T>(config, seed);
}

}  // namespace lwcnn
