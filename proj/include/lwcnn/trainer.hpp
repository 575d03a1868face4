#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lwcnn/adamax.hpp"
#include "lwcnn/augment.hpp"
#include "lwcnn/dataset.hpp"
#include "lwcnn/network.hpp"

namespace lwcnn {

/// Both callbacks watch validation loss. An epoch improves iff
/// best_loss - val_loss > min_delta.
struct CallbackConfig {
    std::size_t es_patience = 8;
    double es_min_delta = 1e-4;
    std::size_t rlrop_patience = 5;
    double rlrop_factor = 0.3;
    double rlrop_min_lr = 1e-6;

    void validate() const;
    bool operator==(const CallbackConfig &) const = default;
};

void to_json(nlohmann::json &j, const CallbackConfig &c);
void from_json(const nlohmann::json &j, CallbackConfig &c);

struct EarlyStopState {
    double best_loss;
    std::size_t wait = 0;

    EarlyStopState();
};

struct EarlyStopStep {
    bool improved = false;
    bool stop = false;
};

/// Stops once `wait` reaches the patience. Throws std::domain_error on a non-finite loss.
EarlyStopStep early_stop_update(EarlyStopState &state, double val_loss, const CallbackConfig &cfg);

struct PlateauState {
    double best_loss;
    std::size_t wait = 0;
    double lr = 0.0;

    explicit PlateauState(double initial_lr);
};

/// Returns the learning rate for the next epoch: max(lr * factor, min_lr)
/// when `wait` reaches the patience (wait then resets), else unchanged.
double plateau_update(PlateauState &state, double val_loss, const CallbackConfig &cfg);

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    AugmentConfig augment;
    CallbackConfig callbacks;

    void validate() const;
    bool operator==(const TrainConfig &) const = default;
};

void to_json(nlohmann::json &j, const TrainConfig &c);
void from_json(const nlohmann::json &j, TrainConfig &c);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double lr = 0.0;  // rate used during this epoch
};

struct History {
    std::vector<EpochRecord> records;
    std::size_t best_epoch = 0;  // epoch whose weights were restored
    bool stopped_early = false;

    /// epoch,train_loss,train_acc,val_loss,val_acc,lr
    std::string csv() const;
    double max_val_acc() const;
};

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
    std::vector<int> predictions;
    Tensor probs;  // (N, 4)
};

/// Inference mode, rescale only. Throws std::invalid_argument on an empty set.
Evaluation evaluate(const Network<float> &network, const ImageSet &set, std::size_t batch_size = 32,
                    double rescale = 1.0 / 255.0);

using EpochCallback = std::function<void(const EpochRecord &)>;

/// Epoch loop: seeded shuffle, augmented mini-batches (last one may be short),
/// Adamax steps, validation, then plateau and early-stop updates in that order.
/// On return the network holds the weights of the best validation epoch.
/// A non-finite training loss throws std::runtime_error naming epoch and batch.
History fit(Network<float> &network, const ImageSet &train, const ImageSet &val, const TrainConfig &cfg,
            const EpochCallback &on_epoch = {});

}  // namespace lwcnn
