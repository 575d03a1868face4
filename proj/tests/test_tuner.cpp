#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "lwcnn/tuner.hpp"
#include "lwcnn/weights_io.hpp"

using namespace lwcnn;
using namespace lwcnn::testing;

namespace {

SearchSpace small_space() {
    SearchSpace s;
    s.filters = {2, 3};
    s.kernels = {3, 4};
    s.dense_units = {8, 12};
    s.input_size = 16;
    return s;
}

struct TinyData {
    DatasetIndex index;
    ImageSet images;
};

TinyData tiny_data(std::size_t per_class, std::uint64_t seed) {
    TinyData d;
    d.index = fake_index({per_class, per_class, per_class, per_class});
    Rng rng(seed);
    for (const auto &s : d.index.samples) {
        d.images.images.push_back(pattern_image(s.label, rng, 16));
        d.images.labels.push_back(s.label);
    }
    return d;
}

TrainConfig quick_train(std::size_t epochs) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 8;
    cfg.seed = 1;
    return cfg;
}

}  // namespace

TEST_CASE("sample_trial") {
    const SearchSpace space;
    Rng rng(10);
    std::vector<double> u;
    for (std::size_t i = 0; i < 10000; ++i) {
        const auto t = sample_trial(space, rng, i);
        CHECK(space.contains(t.config));
        CHECK((t.config.dense_units - 256) % 64 == 0);
        CHECK(t.config.dense_units <= 512);
        u.push_back(std::log10(t.config.learning_rate));
    }
    // Kolmogorov-Smirnov distance to U[-4,-2]; 1.63/sqrt(n) is the 1% critical value.
    std::sort(u.begin(), u.end());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double f = (u[i] + 4.0) / 2.0, n = static_cast<double>(u.size());
        d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    CHECK(d < 1.63 / std::sqrt(static_cast<double>(u.size())));
    CHECK(u.front() >= -4.0);
    CHECK(u.back() <= -2.0);

    Rng a(3), b(3);
    CHECK(sample_trial(space, a, 0) == sample_trial(space, b, 0));

    NetworkConfig tuned;
    tuned.filters = {32, 64, 128, 128};
    tuned.kernels = {4, 3, 3, 4};
    tuned.dense_units = 512;
    tuned.dropout_rate = 0.5;
    tuned.learning_rate = 1.19e-3;
    CHECK(space.contains(tuned));
    tuned.dense_units = 300;
    CHECK_FALSE(space.contains(tuned));
}

TEST_CASE("search space validation and json") {
    SearchSpace s;
    s.dense_units.clear();
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = SearchSpace{};
    s.log10_lr_min = -1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = small_space();
    const nlohmann::json j = s;
    CHECK(j.get<SearchSpace>() == s);
}

TEST_CASE("select_best") {
    auto result = [](std::size_t id, double mean) {
        TrialResult r;
        r.trial.id = id;
        r.mean = mean;
        return r;
    };
    CHECK(select_best({result(0, 0.9), result(1, 0.92), result(2, 0.92), result(3, 0.5)}) == 1);
    CHECK(select_best({result(0, 0.1)}) == 0);
    CHECK_THROWS_AS(select_best({}), std::invalid_argument);
}

TEST_CASE("run_trial") {
    const auto data = tiny_data(5, 1);
    const auto folds = stratified_kfold(data.index, 5, 4);
    Rng rng(2);
    const auto trial = sample_trial(small_space(), rng, 0);

    std::size_t calls = 0;
    const auto r = run_trial(trial, data.images, folds, quick_train(2),
                             [&](std::size_t, std::size_t, const std::vector<std::size_t> &val, const History &h) {
                                 ++calls;
                                 CHECK(val.size() == 4);
                                 CHECK(h.records.size() == 2);
                             });
    CHECK(calls == 5);
    REQUIRE(r.fold_scores.size() == 5);
    double sum = 0;
    for (double s : r.fold_scores) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        sum += s;
    }
    CHECK(r.mean == doctest::Approx(sum / 5));

    const auto permuted = run_trial(trial, data.images, folds, quick_train(2), {}, {3, 1, 4, 0, 2});
    CHECK(permuted.fold_scores == r.fold_scores);
}

TEST_CASE("search and retrain") {
    const auto data = tiny_data(5, 3);
    auto space = small_space();
    space.max_trials = 4;

    std::size_t trainings = 0;
    std::map<std::size_t, std::vector<std::vector<std::size_t>>> val_sets;  // trial -> per fold
    const auto report = search(space, data.index, data.images, quick_train(1), 21,
                               [&](std::size_t t, std::size_t f, const std::vector<std::size_t> &val, const History &) {
                                   ++trainings;
                                   auto &v = val_sets[t];
                                   v.resize(5);
                                   v[f] = val;
                               });
    CHECK(trainings == 20);
    REQUIRE(report.trials.size() == 4);
    for (const auto &[t, v] : val_sets) {
        CHECK(v == val_sets.begin()->second);
    }
    CHECK(report.folds == stratified_kfold(data.index, 5, 21));
    for (const auto &t : report.trials) {
        CHECK(report.best().mean >= t.mean);
        CHECK(space.contains(t.trial.config));
    }
    std::size_t members = 0;
    for (const auto &f : report.fold_members) {
        members += f.size();
    }
    CHECK(members == data.index.size());

    const nlohmann::json j = report;
    CHECK(nlohmann::json::parse(j.dump()).get<TunerReport>() == report);

    CHECK(search(space, data.index, data.images, quick_train(1), 21) == report);

    TempDir dir("retrain");
    const auto weights = dir.path() / "best.lwcnn";
    auto retrained = retrain_best(report, data.index, data.images, quick_train(2), 5, weights);
    CHECK(retrained.network.config() == report.best().trial.config);
    CHECK(retrained.history.records.size() <= 2);
    const auto loaded = load_weights(weights);
    const auto a = evaluate(retrained.network, data.images), b = evaluate(loaded, data.images);
    CHECK(a.probs == b.probs);
}
