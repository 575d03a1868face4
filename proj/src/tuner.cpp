#include "lwcnn/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lwcnn/weights_io.hpp"

namespace lwcnn {

void SearchSpace::validate() const {
    if (filters.empty() || kernels.empty() || dense_units.empty() || dropout.empty()) {
        throw std::invalid_argument("search space: every candidate set must be non-empty");
    }
    if (!(log10_lr_min <= log10_lr_max)) {
        throw std::invalid_argument("search space: learning-rate bounds out of order");
    }
    if (input_size < 16) {
        throw std::invalid_argument("search space: input_size must be >= 16");
    }
    if (max_trials < 1 || folds < 2) {
        throw std::invalid_argument("search space: need max_trials >= 1 and folds >= 2");
    }
    for (auto d : dropout) {
        if (d < 0.0 || d >= 1.0) {
            throw std::invalid_argument("search space: dropout candidates must be in [0,1)");
        }
    }
}

namespace {

template <typename T>
bool has(const std::vector<T> &set, T v) {
    return std::find(set.begin(), set.end(), v) != set.end();
}

template <typename T>
T pick(const std::vector<T> &set, Rng &rng) {
    return set[rng.below(set.size())];
}

}  // namespace

bool SearchSpace::contains(const NetworkConfig &c) const {
    for (std::size_t i = 0; i < NetworkConfig::kConvLayers; ++i) {
        if (!has(filters, c.filters[i]) || !has(kernels, c.kernels[i])) {
            return false;
        }
    }
    const double lr = std::log10(c.learning_rate);
    return has(dense_units, c.dense_units) && has(dropout, c.dropout_rate) && lr >= log10_lr_min - 1e-12 &&
           lr <= log10_lr_max + 1e-12 && c.input_size == input_size;
}

void to_json(nlohmann::json &j, const SearchSpace &s) {
    j = nlohmann::json{{"filters", s.filters},           {"kernels", s.kernels},
                       {"dense_units", s.dense_units},   {"dropout", s.dropout},
                       {"log10_lr_min", s.log10_lr_min}, {"log10_lr_max", s.log10_lr_max},
                       {"max_trials", s.max_trials},     {"folds", s.folds},
                       {"input_size", s.input_size}};
}

void from_json(const nlohmann::json &j, SearchSpace &s) {
    SearchSpace d;
    s.filters = j.value("filters", d.filters);
    s.kernels = j.value("kernels", d.kernels);
    s.dense_units = j.value("dense_units", d.dense_units);
    s.dropout = j.value("dropout", d.dropout);
    s.log10_lr_min = j.value("log10_lr_min", d.log10_lr_min);
    s.log10_lr_max = j.value("log10_lr_max", d.log10_lr_max);
    s.max_trials = j.value("max_trials", d.max_trials);
    s.folds = j.value("folds", d.folds);
    s.input_size = j.value("input_size", d.input_size);
}

TrialConfig sample_trial(const SearchSpace &space, Rng &rng, std::size_t id) {
    TrialConfig t;
    t.id = id;
    for (auto &f : t.config.filters) {
        f = pick(space.filters, rng);
    }
    for (auto &k : t.config.kernels) {
        k = pick(space.kernels, rng);
    }
    t.config.dense_units = pick(space.dense_units, rng);
    t.config.dropout_rate = pick(space.dropout, rng);
    t.config.learning_rate = std::pow(10.0, rng.uniform(space.log10_lr_min, space.log10_lr_max));
    t.config.input_size = space.input_size;
    t.seed = rng.next();
    return t;
}

TrialResult run_trial(const TrialConfig &trial, const ImageSet &data, const FoldAssignment &folds,
                      const TrainConfig &train_cfg, const FoldObserver &observer,
                      std::vector<std::size_t> fold_order) {
    if (folds.fold.size() != data.size()) {
        throw std::invalid_argument("run_trial: fold assignment covers " + std::to_string(folds.fold.size()) +
                                    " samples but the data has " + std::to_string(data.size()));
    }
    if (fold_order.empty()) {
        fold_order.resize(folds.k);
        std::iota(fold_order.begin(), fold_order.end(), std::size_t{0});
    }
    TrialResult result;
    result.trial = trial;
    result.fold_scores.assign(folds.k, 0.0);
    for (std::size_t f : fold_order) {
        try {
            const auto [train_pos, val_pos] = folds.split(f);
            Network<float> net(trial.config, hash64({trial.seed, f, 0x1417u}));
            TrainConfig cfg = train_cfg;
            cfg.seed = hash64({trial.seed, f, 0x7CA1u});
            const History h = fit(net, data.subset(train_pos), data.subset(val_pos), cfg);
            result.fold_scores[f] = h.max_val_acc();
            if (observer) {
                observer(trial.id, f, val_pos, h);
            }
        } catch (const std::exception &e) {
            throw std::runtime_error("trial " + std::to_string(trial.id) + ", fold " + std::to_string(f) + ": " +
                                     e.what());
        }
    }
    result.mean = std::accumulate(result.fold_scores.begin(), result.fold_scores.end(), 0.0) /
                  static_cast<double>(folds.k);
    return result;
}

std::size_t select_best(const std::vector<TrialResult> &trials) {
    if (trials.empty()) {
        throw std::invalid_argument("select_best: no trials");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < trials.size(); ++i) {
        const auto &a = trials[i], &b = trials[best];
        if (a.mean > b.mean || (a.mean == b.mean && a.trial.id < b.trial.id)) {
            best = i;
        }
    }
    return best;
}

TunerReport search(const SearchSpace &space, const DatasetIndex &index, const ImageSet &data,
                   const TrainConfig &train_cfg, std::uint64_t seed, const FoldObserver &observer) {
    space.validate();
    train_cfg.validate();
    if (index.size() != data.size()) {
        throw std::invalid_argument("search: index and decoded data sizes differ");
    }
    TunerReport report;
    report.folds = stratified_kfold(index, space.folds, seed);
    report.fold_members.resize(space.folds);
    for (std::size_t i = 0; i < index.size(); ++i) {
        report.fold_members[report.folds.fold[i]].push_back(index.samples[i].path.generic_string());
    }
    Rng rng(hash64({seed, 0x5EA4C4u}));
    for (std::size_t t = 0; t < space.max_trials; ++t) {
        const TrialConfig trial = sample_trial(space, rng, t);
        report.trials.push_back(run_trial(trial, data, report.folds, train_cfg, observer));
    }
    report.best_trial = select_best(report.trials);
    return report;
}

RetrainResult retrain_best(const TunerReport &report, const DatasetIndex &index, const ImageSet &data,
                           const TrainConfig &train_cfg, std::uint64_t seed,
                           const std::filesystem::path &weights_path, const EpochCallback &on_epoch) {
    if (report.trials.empty()) {
        throw std::invalid_argument("retrain_best: report has no trials");
    }
    const auto [train_pos, val_pos] = stratified_split_positions(index, 0.8, seed);
    RetrainResult out{Network<float>(report.best().trial.config, hash64({seed, 0xF17A1u})), {}};
    TrainConfig cfg = train_cfg;
    cfg.seed = hash64({seed, 0xF17A2u});
    out.history = fit(out.network, data.subset(train_pos), data.subset(val_pos), cfg, on_epoch);
    save_weights(out.network, weights_path);
    return out;
}

void to_json(nlohmann::json &j, const TunerReport &r) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto &t : r.trials) {
        trials.push_back({{"id", t.trial.id},
                          {"seed", t.trial.seed},
                          {"config", t.trial.config},
                          {"fold_scores", t.fold_scores},
                          {"mean", t.mean}});
    }
    j = nlohmann::json{{"trials", trials},
                       {"best_trial", r.best_trial},
                       {"tie_break", "lowest trial id"},
                       {"k", r.folds.k},
                       {"fold_of_sample", r.folds.fold},
                       {"fold_members", r.fold_members}};
}

void from_json(const nlohmann::json &j, TunerReport &r) {
    r = TunerReport{};
    for (const auto &t : j.at("trials")) {
        TrialResult res;
        res.trial.id = t.at("id").get<std::size_t>();
        res.trial.seed = t.at("seed").get<std::uint64_t>();
        res.trial.config = t.at("config").get<NetworkConfig>();
        res.fold_scores = t.at("fold_scores").get<std::vector<double>>();
        res.mean = t.at("mean").get<double>();
        r.trials.push_back(std::move(res));
    }
    r.best_trial = j.at("best_trial").get<std::size_t>();
    r.folds.k = j.at("k").get<std::size_t>();
    r.folds.fold = j.at("fold_of_sample").get<std::vector<std::size_t>>();
    r.fold_members = j.at("fold_members").get<std::vector<std::vector<std::string>>>();
}

}  // namespace lwcnn
