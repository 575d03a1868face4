#include "lwcnn/adamax.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lwcnn {

AdamaxState::AdamaxState(const std::vector<Tensor *> &params, double lr) : learning_rate(lr) {
    for (const auto *p : params) {
        m.emplace_back(p->size(), 0.0f);
        u.emplace_back(p->size(), 0.0f);
    }
}

void adamax_step(const std::vector<Tensor *> &params, const std::vector<Tensor> &grads, AdamaxState &state) {
    if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.u.size()) {
        throw std::invalid_argument("adamax: " + std::to_string(params.size()) + " parameter tensors, " +
                                    std::to_string(grads.size()) + " gradients, " + std::to_string(state.m.size()) +
                                    " state slots");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->shape() != grads[i].shape() || state.m[i].size() != params[i]->size()) {
            throw std::invalid_argument("adamax: shape mismatch for parameter " + std::to_string(i) + ": " +
                                        shape_string(params[i]->shape()) + " vs gradient " +
                                        shape_string(grads[i].shape()));
        }
    }

    state.t += 1;
    const auto step = static_cast<float>(state.learning_rate / (1.0 - std::pow(state.beta1, static_cast<double>(state.t))));
    const auto b1 = static_cast<float>(state.beta1);
    const auto b2 = static_cast<float>(state.beta2);
    const auto eps = static_cast<float>(state.epsilon);

    for (std::size_t i = 0; i < params.size(); ++i) {
        float *p = params[i]->data();
        const float *g = grads[i].data();
        float *m = state.m[i].data();
        float *u = state.u[i].data();
        const std::size_t size = params[i]->size();
#pragma omp parallel for schedule(static)
        for (std::size_t j = 0; j < size; ++j) {
            m[j] = b1 * m[j] + (1.0f - b1) * g[j];
            u[j] = std::max(b2 * u[j], std::abs(g[j]));
            p[j] -= step * m[j] / (u[j] + eps);
        }
    }
}

}  // namespace lwcnn
