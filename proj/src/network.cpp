#include "lwcnn/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lwcnn {

void NetworkConfig::validate() const {
    for (std::size_t i = 0; i < kConvLayers; ++i) {
        if (filters[i] < 1) {
            throw std::invalid_argument("filters[" + std::to_string(i) + "] must be >= 1");
        }
        if (kernels[i] != 3 && kernels[i] != 4) {
            throw std::invalid_argument("kernels[" + std::to_string(i) + "] must be 3 or 4, got " +
                                        std::to_string(kernels[i]));
        }
    }
    if (dense_units < 1) {
        throw std::invalid_argument("dense_units must be >= 1");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw std::invalid_argument("dropout_rate must be in [0,1), got " + std::to_string(dropout_rate));
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be positive and finite");
    }
    std::size_t s = input_size;
    for (std::size_t i = 0; i < kConvLayers; ++i) {
        if (s < 2) {
            throw std::invalid_argument("input_size " + std::to_string(input_size) +
                                        " is too small for four 2x2 pools");
        }
        s /= 2;
    }
}

std::size_t NetworkConfig::final_spatial() const {
    std::size_t s = input_size;
    for (std::size_t i = 0; i < kConvLayers; ++i) {
        s /= 2;
    }
    return s;
}

void to_json(nlohmann::json &j, const NetworkConfig &c) {
    j = nlohmann::json{{"filters", c.filters},
                       {"kernels", c.kernels},
                       {"dense_units", c.dense_units},
                       {"dropout_rate", c.dropout_rate},
                       {"learning_rate", c.learning_rate},
                       {"input_size", c.input_size}};
}

void from_json(const nlohmann::json &j, NetworkConfig &c) {
    NetworkConfig d;
    c.filters = j.value("filters", d.filters);
    c.kernels = j.value("kernels", d.kernels);
    c.dense_units = j.value("dense_units", d.dense_units);
    c.dropout_rate = j.value("dropout_rate", d.dropout_rate);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.input_size = j.value("input_size", d.input_size);
}

std::size_t param_count(const NetworkConfig &config) {
    config.validate();
    std::size_t total = 0;
    std::size_t cin = NetworkConfig::kInputChannels;
    for (std::size_t i = 0; i < NetworkConfig::kConvLayers; ++i) {
        const std::size_t k = config.kernels[i];
        total += k * k * cin * config.filters[i] + config.filters[i];
        cin = config.filters[i];
    }
    total += config.flatten_size() * config.dense_units + config.dense_units;
    total += config.dense_units * NetworkConfig::kNumClasses + NetworkConfig::kNumClasses;
    return total;
}

namespace {

template <typename T>
void glorot_uniform(BasicTensor<T> &w, std::size_t fan_in, std::size_t fan_out, Rng &rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto &v : w.values()) {
        v = static_cast<T>(rng.uniform(-limit, limit));
    }
}

}  // namespace

template <typename T>
Network<T>::Network(const NetworkConfig &config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    std::size_t cin = NetworkConfig::kInputChannels;
    for (std::size_t i = 0; i < NetworkConfig::kConvLayers; ++i) {
        const std::size_t k = config_.kernels[i];
        const std::size_t cout = config_.filters[i];
        convs_[i].kernel = BasicTensor<T>({k, k, cin, cout});
        convs_[i].bias = BasicTensor<T>({cout});
        glorot_uniform(convs_[i].kernel, k * k * cin, k * k * cout, rng);
        cin = cout;
    }
    const std::size_t flat = config_.flatten_size();
    hidden_.weights = BasicTensor<T>({flat, config_.dense_units});
    hidden_.bias = BasicTensor<T>({config_.dense_units});
    glorot_uniform(hidden_.weights, flat, config_.dense_units, rng);
    output_.weights = BasicTensor<T>({config_.dense_units, NetworkConfig::kNumClasses});
    output_.bias = BasicTensor<T>({NetworkConfig::kNumClasses});
    glorot_uniform(output_.weights, config_.dense_units, NetworkConfig::kNumClasses, rng);
}

template <typename T>
BasicTensor<T> Network<T>::forward(const BasicTensor<T> &input, Mode mode, Rng *dropout_rng,
                                   ForwardCache<T> *cache) const {
    const std::size_t s = config_.input_size;
    if (input.rank() != 4 || input.dim(1) != s || input.dim(2) != s || input.dim(3) != NetworkConfig::kInputChannels) {
        throw std::invalid_argument("network expects (N," + std::to_string(s) + "," + std::to_string(s) +
                                    ",3) input, got " + shape_string(input.shape()));
    }
    const bool training = mode == Mode::training;
    if (training && dropout_rng == nullptr && config_.dropout_rate > 0.0) {
        throw std::invalid_argument("training-mode forward needs a dropout generator");
    }
    const std::size_t n = input.dim(0);

    BasicTensor<T> x = input;
    for (std::size_t i = 0; i < NetworkConfig::kConvLayers; ++i) {
        BasicTensor<T> z = convs_[i].forward(x);
        auto pooled = kernels::maxpool2_forward(kernels::relu_forward(z));
        if (cache) {
            cache->conv_inputs[i] = std::move(x);
            cache->conv_outputs[i] = std::move(z);
            cache->pool_argmax[i] = std::move(pooled.argmax);
        }
        x = std::move(pooled.output);
    }
    BasicTensor<T> flat = x.reshaped({n, config_.flatten_size()});
    BasicTensor<T> hidden_pre = hidden_.forward(flat);
    Rng unused(0);
    auto dropped = dropout_forward(kernels::relu_forward(hidden_pre), config_.dropout_rate, training,
                                   dropout_rng ? *dropout_rng : unused);
    BasicTensor<T> logits = output_.forward(dropped.output);
    if (cache) {
        cache->flat = std::move(flat);
        cache->hidden_pre = std::move(hidden_pre);
        cache->dropout_mask = std::move(dropped.mask);
        cache->dropped = std::move(dropped.output);
        cache->training = training;
    }
    return logits;
}

template <typename T>
std::vector<BasicTensor<T>> Network<T>::backward(const ForwardCache<T> &cache, const BasicTensor<T> &grad_logits) const {
    if (!cache.training) {
        throw std::invalid_argument("backward requires a cache from a training-mode forward pass");
    }
    if (grad_logits.rank() != 2 || grad_logits.dim(0) != cache.dropped.dim(0) ||
        grad_logits.dim(1) != NetworkConfig::kNumClasses) {
        throw std::invalid_argument("backward: grad_logits shape " + shape_string(grad_logits.shape()) +
                                    " does not match cached batch");
    }
    std::vector<BasicTensor<T>> grads(2 * NetworkConfig::kConvLayers + 4);

    auto out_g = output_.backward(cache.dropped, grad_logits);
    grads[10] = std::move(out_g.weights);
    grads[11] = std::move(out_g.bias);

    BasicTensor<T> g = dropout_backward(cache.dropout_mask, out_g.input);
    g = kernels::relu_backward(cache.hidden_pre, g);
    auto hid_g = hidden_.backward(cache.flat, g);
    grads[8] = std::move(hid_g.weights);
    grads[9] = std::move(hid_g.bias);

    const std::size_t n = grad_logits.dim(0);
    const std::size_t fs = config_.final_spatial();
    g = hid_g.input.reshaped({n, fs, fs, config_.filters.back()});
    for (std::size_t li = NetworkConfig::kConvLayers; li-- > 0;) {
        g = kernels::maxpool2_backward(cache.conv_outputs[li].shape(), cache.pool_argmax[li], g);
        g = kernels::relu_backward(cache.conv_outputs[li], g);
        auto conv_g = convs_[li].backward(cache.conv_inputs[li], g, li > 0);
        grads[2 * li] = std::move(conv_g.kernel);
        grads[2 * li + 1] = std::move(conv_g.bias);
        g = std::move(conv_g.input);
    }
    return grads;
}

template <typename T>
std::vector<BasicTensor<T>> Network<T>::feature_maps(const BasicTensor<T> &input, std::size_t layers) const {
    if (layers > NetworkConfig::kConvLayers) {
        throw std::invalid_argument("feature_maps: only four conv layers");
    }
    std::vector<BasicTensor<T>> maps;
    BasicTensor<T> x = input;
    for (std::size_t i = 0; i < layers; ++i) {
        maps.push_back(kernels::relu_forward(convs_[i].forward(x)));
        if (i + 1 < layers) {
            x = kernels::maxpool2_forward(maps.back()).output;
        }
    }
    return maps;
}

template <typename T>
std::vector<BasicTensor<T> *> Network<T>::parameters() {
    std::vector<BasicTensor<T> *> p;
    for (auto &c : convs_) {
        p.push_back(&c.kernel);
        p.push_back(&c.bias);
    }
    p.insert(p.end(), {&hidden_.weights, &hidden_.bias, &output_.weights, &output_.bias});
    return p;
}

template <typename T>
std::vector<const BasicTensor<T> *> Network<T>::parameters() const {
    std::vector<const BasicTensor<T> *> p;
    for (const auto &c : convs_) {
        p.push_back(&c.kernel);
        p.push_back(&c.bias);
    }
    p.insert(p.end(), {&hidden_.weights, &hidden_.bias, &output_.weights, &output_.bias});
    return p;
}

template <typename T>
std::size_t Network<T>::stored_parameter_count() const {
    std::size_t total = 0;
    for (const auto *p : parameters()) {
        total += p->size();
    }
    return total;
}

template class Network<float>;
template class Network<double>;

}  // namespace lwcnn
