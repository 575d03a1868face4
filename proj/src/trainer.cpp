#include "lwcnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lwcnn/adamax.hpp"

namespace lwcnn {

void CallbackConfig::validate() const {
    if (es_patience < 1 || rlrop_patience < 1) {
        throw std::invalid_argument("callback patience must be >= 1");
    }
    if (!(rlrop_factor > 0.0 && rlrop_factor < 1.0)) {
        throw std::invalid_argument("plateau factor must be in (0,1)");
    }
    if (!(rlrop_min_lr > 0.0) || es_min_delta < 0.0) {
        throw std::invalid_argument("min_lr must be positive and min_delta non-negative");
    }
}

void to_json(nlohmann::json &j, const CallbackConfig &c) {
    j = nlohmann::json{{"es_patience", c.es_patience},       {"es_min_delta", c.es_min_delta},
                       {"rlrop_patience", c.rlrop_patience}, {"rlrop_factor", c.rlrop_factor},
                       {"rlrop_min_lr", c.rlrop_min_lr}};
}

void from_json(const nlohmann::json &j, CallbackConfig &c) {
    CallbackConfig d;
    c.es_patience = j.value("es_patience", d.es_patience);
    c.es_min_delta = j.value("es_min_delta", d.es_min_delta);
    c.rlrop_patience = j.value("rlrop_patience", d.rlrop_patience);
    c.rlrop_factor = j.value("rlrop_factor", d.rlrop_factor);
    c.rlrop_min_lr = j.value("rlrop_min_lr", d.rlrop_min_lr);
}

namespace {

void require_finite(double loss, const char *what) {
    if (!std::isfinite(loss)) {
        throw std::domain_error(std::string(what) + ": validation loss is not finite");
    }
}

}  // namespace

EarlyStopState::EarlyStopState() : best_loss(std::numeric_limits<double>::infinity()) {}

EarlyStopStep early_stop_update(EarlyStopState &state, double val_loss, const CallbackConfig &cfg) {
    require_finite(val_loss, "early stopping");
    EarlyStopStep step;
    if (state.best_loss - val_loss > cfg.es_min_delta) {
        state.best_loss = val_loss;
        state.wait = 0;
        step.improved = true;
    } else {
        ++state.wait;
    }
    step.stop = state.wait >= cfg.es_patience;
    return step;
}

PlateauState::PlateauState(double initial_lr)
    : best_loss(std::numeric_limits<double>::infinity()), lr(initial_lr) {}

double plateau_update(PlateauState &state, double val_loss, const CallbackConfig &cfg) {
    require_finite(val_loss, "learning-rate plateau");
    if (state.best_loss - val_loss > cfg.es_min_delta) {
        state.best_loss = val_loss;
        state.wait = 0;
    } else if (++state.wait >= cfg.rlrop_patience) {
        state.lr = std::max(state.lr * cfg.rlrop_factor, cfg.rlrop_min_lr);
        state.wait = 0;
    }
    return state.lr;
}

void TrainConfig::validate() const {
    if (epochs < 1 || batch_size < 1) {
        throw std::invalid_argument("epochs and batch_size must be >= 1");
    }
    augment.validate();
    callbacks.validate();
}

void to_json(nlohmann::json &j, const TrainConfig &c) {
    j = nlohmann::json{{"epochs", c.epochs},
                       {"batch_size", c.batch_size},
                       {"seed", c.seed},
                       {"augment", c.augment},
                       {"callbacks", c.callbacks}};
}

void from_json(const nlohmann::json &j, TrainConfig &c) {
    TrainConfig d;
    c.epochs = j.value("epochs", d.epochs);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.seed = j.value("seed", d.seed);
    c.augment = j.value("augment", d.augment);
    c.callbacks = j.value("callbacks", d.callbacks);
}

std::string History::csv() const {
    std::string out = "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
    char line[256];
    for (const auto &r : records) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss, r.train_acc,
                      r.val_loss, r.val_acc, r.lr);
        out += line;
    }
    return out;
}

double History::max_val_acc() const {
    double best = 0.0;
    for (const auto &r : records) {
        best = std::max(best, r.val_acc);
    }
    return best;
}

namespace {

std::vector<const Rgb8 *> gather(const ImageSet &set, std::span<const std::size_t> positions) {
    std::vector<const Rgb8 *> out;
    out.reserve(positions.size());
    for (auto p : positions) {
        out.push_back(&set.images[p]);
    }
    return out;
}

std::vector<int> gather_labels(const ImageSet &set, std::span<const std::size_t> positions) {
    std::vector<int> out;
    out.reserve(positions.size());
    for (auto p : positions) {
        out.push_back(set.labels[p]);
    }
    return out;
}

std::size_t count_correct(const Tensor &probs, const std::vector<int> &labels, std::vector<int> *predictions) {
    std::size_t correct = 0;
    const std::size_t c = probs.dim(1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const float *row = probs.data() + i * c;
        const auto pred = static_cast<int>(std::max_element(row, row + c) - row);
        correct += pred == labels[i];
        if (predictions) {
            predictions->push_back(pred);
        }
    }
    return correct;
}

std::vector<Tensor> snapshot(Network<float> &network) {
    std::vector<Tensor> out;
    for (auto *p : network.parameters()) {
        out.push_back(*p);
    }
    return out;
}

}  // namespace

Evaluation evaluate(const Network<float> &network, const ImageSet &set, std::size_t batch_size, double rescale) {
    if (set.size() == 0) {
        throw std::invalid_argument("evaluate: empty sample set");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("evaluate: batch_size must be >= 1");
    }
    const std::size_t n = set.size(), size = network.config().input_size;
    AugmentConfig plain = AugmentConfig::none();
    plain.rescale = rescale;
    Evaluation ev;
    ev.probs = Tensor({n, NetworkConfig::kNumClasses});
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<std::size_t> positions(n);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::span<const std::size_t> idx(positions.data() + start, std::min(batch_size, n - start));
        const auto images = gather(set, idx);
        const Tensor x = augment_batch(images, idx, plain, 0, 0, false, size);
        const auto labels = gather_labels(set, idx);
        const auto ce = softmax_cross_entropy(network.forward(x, Mode::inference), onehot(labels));
        loss_sum += ce.loss * static_cast<double>(idx.size());
        correct += count_correct(ce.probs, labels, &ev.predictions);
        std::copy(ce.probs.values().begin(), ce.probs.values().end(),
                  ev.probs.data() + start * NetworkConfig::kNumClasses);
    }
    ev.loss = loss_sum / static_cast<double>(n);
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return ev;
}

History fit(Network<float> &network, const ImageSet &train, const ImageSet &val, const TrainConfig &cfg,
            const EpochCallback &on_epoch) {
    cfg.validate();
    if (train.size() == 0 || val.size() == 0) {
        throw std::invalid_argument("fit: training and validation sets must be non-empty");
    }
    const std::size_t n = train.size(), size = network.config().input_size;
    const auto params = network.parameters();
    AdamaxState opt(params, network.config().learning_rate);
    EarlyStopState early;
    PlateauState plateau(network.config().learning_rate);
    std::vector<Tensor> best = snapshot(network);

    History history;
    std::vector<std::size_t> order(n);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng(hash64({cfg.seed, 0x5487FFu, epoch}));
        shuffle_rng.shuffle(std::span<std::size_t>(order));

        opt.learning_rate = plateau.lr;
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0, b = 0; start < n; start += cfg.batch_size, ++b) {
            const std::span<const std::size_t> idx(order.data() + start, std::min(cfg.batch_size, n - start));
            const auto images = gather(train, idx);
            const Tensor x = augment_batch(images, idx, cfg.augment, cfg.seed, epoch, true, size);
            const auto labels = gather_labels(train, idx);

            Rng dropout_rng(hash64({cfg.seed, 0xD209u, epoch, b}));
            ForwardCache<float> cache;
            const Tensor logits = network.forward(x, Mode::training, &dropout_rng, &cache);
            const auto ce = softmax_cross_entropy(logits, onehot(labels));
            if (!std::isfinite(ce.loss)) {
                throw std::runtime_error("training loss is not finite at epoch " + std::to_string(epoch + 1) +
                                         ", batch " + std::to_string(b + 1));
            }
            adamax_step(params, network.backward(cache, ce.grad_logits), opt);
            loss_sum += ce.loss * static_cast<double>(idx.size());
            correct += count_correct(ce.probs, labels, nullptr);
        }

        const Evaluation ev = evaluate(network, val, cfg.batch_size, cfg.augment.rescale);
        EpochRecord rec{epoch + 1,  loss_sum / static_cast<double>(n), static_cast<double>(correct) / n,
                        ev.loss,    ev.accuracy,                        plateau.lr};
        history.records.push_back(rec);
        if (on_epoch) {
            on_epoch(rec);
        }

        plateau_update(plateau, ev.loss, cfg.callbacks);
        const EarlyStopStep step = early_stop_update(early, ev.loss, cfg.callbacks);
        if (step.improved) {
            best = snapshot(network);
            history.best_epoch = epoch + 1;
        }
        if (step.stop) {
            history.stopped_early = epoch + 1 < cfg.epochs;
            break;
        }
    }

    for (std::size_t i = 0; i < params.size(); ++i) {
        *params[i] = std::move(best[i]);
    }
    return history;
}

}  // namespace lwcnn
