#pragma once

// Random search where a trial's objective is its mean best-validation
// accuracy over stratified k-fold cross-validation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lwcnn/dataset.hpp"
#include "lwcnn/network.hpp"
#include "lwcnn/trainer.hpp"

namespace lwcnn {

struct SearchSpace {
    std::vector<std::size_t> filters{32, 64, 128};  // per conv layer
    std::vector<std::size_t> kernels{3, 4};         // per conv layer
    std::vector<std::size_t> dense_units{256, 320, 384, 448, 512};
    std::vector<double> dropout{0.3, 0.4, 0.5, 0.6};
    double log10_lr_min = -4.0;
    double log10_lr_max = -2.0;
    std::size_t max_trials = 4;
    std::size_t folds = 5;
    std::size_t input_size = 150;  // fixed, not searched

    void validate() const;
    bool contains(const NetworkConfig &config) const;
    bool operator==(const SearchSpace &) const = default;
};

void to_json(nlohmann::json &j, const SearchSpace &s);
void from_json(const nlohmann::json &j, SearchSpace &s);

struct TrialConfig {
    std::size_t id = 0;
    std::uint64_t seed = 0;
    NetworkConfig config;

    bool operator==(const TrialConfig &) const = default;
};

/// Independent draws in this order: filters x4, kernels x4, dense units,
/// dropout, lr = 10^u with u uniform in [log10_lr_min, log10_lr_max], trial seed.
TrialConfig sample_trial(const SearchSpace &space, Rng &rng, std::size_t id);

struct TrialResult {
    TrialConfig trial;
    std::vector<double> fold_scores;  // best validation accuracy per fold
    double mean = 0.0;

    bool operator==(const TrialResult &) const = default;
};

/// Called after every fold training with the fold's validation positions.
using FoldObserver = std::function<void(std::size_t trial, std::size_t fold,
                                        const std::vector<std::size_t> &val_positions, const History &)>;

/// Trains a fresh network per fold (weights seeded by (trial seed, fold)) on the
/// other folds and validates on fold f. `fold_order` only changes the order in
/// which folds run; results are stored by fold id.
TrialResult run_trial(const TrialConfig &trial, const ImageSet &data, const FoldAssignment &folds,
                      const TrainConfig &train_cfg, const FoldObserver &observer = {},
                      std::vector<std::size_t> fold_order = {});

struct TunerReport {
    std::vector<TrialResult> trials;
    std::size_t best_trial = 0;
    FoldAssignment folds;
    std::vector<std::vector<std::string>> fold_members;  // sample paths per fold

    const TrialResult &best() const { return trials.at(best_trial); }
    bool operator==(const TunerReport &) const = default;
};

void to_json(nlohmann::json &j, const TunerReport &r);
void from_json(const nlohmann::json &j, TunerReport &r);

/// Highest mean; ties go to the lowest trial id.
std::size_t select_best(const std::vector<TrialResult> &trials);

/// Folds are drawn once from `seed` and shared by every trial. `data` must be
/// the decoded images of `index`, in the same order.
TunerReport search(const SearchSpace &space, const DatasetIndex &index, const ImageSet &data,
                   const TrainConfig &train_cfg, std::uint64_t seed, const FoldObserver &observer = {});

struct RetrainResult {
    Network<float> network;
    History history;
};

/// Fresh network from the best config, fit on a stratified 80/20 split of the
/// training data, weights written to `weights_path`.
RetrainResult retrain_best(const TunerReport &report, const DatasetIndex &index, const ImageSet &data,
                           const TrainConfig &train_cfg, std::uint64_t seed,
                           const std::filesystem::path &weights_path, const EpochCallback &on_epoch = {});

}  // namespace lwcnn
