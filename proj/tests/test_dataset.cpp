#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "lwcnn/dataset.hpp"

using namespace lwcnn;
using namespace lwcnn::testing;

namespace fs = std::filesystem;

namespace {

void check_partition(const PositionSplit &split, std::size_t n) {
    std::vector<std::size_t> all = split.first;
    all.insert(all.end(), split.second.begin(), split.second.end());
    std::sort(all.begin(), all.end());
    CHECK(all.size() == n);
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    CHECK((all.empty() || all.back() == n - 1));
}

}  // namespace

TEST_CASE("class_index") {
    CHECK(class_index("glioma") == 0);
    CHECK(class_index("meningioma") == 1);
    CHECK(class_index("notumor") == 2);
    CHECK(class_index("pituitary") == 3);
    CHECK_FALSE(class_index("other").has_value());
}

TEST_CASE("scan_dataset") {
    TempDir dir("scan");
    write_class_tree(dir.path(), {3, 2, 4, 2}, 1, 32);
    std::ofstream(dir.path() / "notumor" / "broken.jpg") << "not an image";

    std::ostringstream warnings;
    const auto index = scan_dataset(dir.path(), warnings);
    CHECK(index.size() == 11);
    CHECK(index.counts() == std::array<std::size_t, 4>{3, 2, 4, 2});
    CHECK(warnings.str().find("broken.jpg") != std::string::npos);
    CHECK(index.samples.front().path.filename() == "img_000.png");
    for (std::size_t i = 1; i < index.size(); ++i) {
        const auto &a = index.samples[i - 1], &b = index.samples[i];
        CHECK((a.label < b.label || (a.label == b.label && a.path < b.path)));
    }
    for (const auto &s : index.samples) {
        CHECK(s.path.parent_path().filename().string() == kClassNames[static_cast<std::size_t>(s.label)]);
    }

    std::ostringstream again;
    CHECK(scan_dataset(dir.path(), again).samples == index.samples);

    SUBCASE("fifth class directory") {
        fs::create_directories(dir.path() / "other");
        CHECK_THROWS_AS(scan_dataset(dir.path(), warnings), std::runtime_error);
    }
    SUBCASE("missing class directory") {
        fs::remove_all(dir.path() / "pituitary");
        CHECK_THROWS_AS(scan_dataset(dir.path(), warnings), std::runtime_error);
    }
    SUBCASE("class with only undecodable files") {
        fs::remove_all(dir.path() / "meningioma");
        fs::create_directories(dir.path() / "meningioma");
        std::ofstream(dir.path() / "meningioma" / "x.png") << "junk";
        CHECK_THROWS_AS(scan_dataset(dir.path(), warnings), std::runtime_error);
    }
    SUBCASE("missing root") {
        CHECK_THROWS_AS(scan_dataset(dir.path() / "nope", warnings), std::runtime_error);
    }
}

TEST_CASE("stratified_split") {
    SUBCASE("round(0.8 n) per class") {
        const auto index = fake_index({10, 10, 9, 5});
        const auto split = stratified_split_positions(index, 0.8, 3);
        const auto [train, val] = stratified_split(index, 0.8, 3);
        CHECK(train.counts() == std::array<std::size_t, 4>{8, 8, 7, 4});
        CHECK(val.counts() == std::array<std::size_t, 4>{2, 2, 2, 1});
        check_partition(split, index.size());
        CHECK(std::is_sorted(split.first.begin(), split.first.end()));
    }
    SUBCASE("deterministic in the seed") {
        const auto index = fake_index({30, 20, 25, 40});
        CHECK(stratified_split_positions(index, 0.8, 11) == stratified_split_positions(index, 0.8, 11));
        CHECK(stratified_split_positions(index, 0.8, 11) != stratified_split_positions(index, 0.8, 12));
    }
    SUBCASE("class with a single sample") {
        CHECK_THROWS_AS(stratified_split(fake_index({5, 1, 5, 5}), 0.8, 0), std::invalid_argument);
    }
    SUBCASE("per-class proportion within one sample of the target") {
        Rng rng(4);
        for (int trial = 0; trial < 50; ++trial) {
            std::array<std::size_t, 4> counts{};
            for (auto &c : counts) {
                c = 2 + rng.below(60);
            }
            const auto index = fake_index(counts);
            const auto split = stratified_split_positions(index, 0.8, trial);
            check_partition(split, index.size());
            const auto train = index.subset(split.first).counts();
            for (std::size_t c = 0; c < 4; ++c) {
                CHECK(std::abs(static_cast<double>(train[c]) - 0.8 * static_cast<double>(counts[c])) <= 0.5);
            }
        }
    }
}

TEST_CASE("stratified_kfold") {
    SUBCASE("10 samples in 2 classes, k=5: one of each per fold") {
        const auto index = fake_index({5, 5, 0, 0});
        const auto folds = stratified_kfold(index, 5, 9);
        for (std::size_t f = 0; f < 5; ++f) {
            const auto val = index.subset(folds.split(f).second);
            CHECK(val.counts() == std::array<std::size_t, 4>{1, 1, 0, 0});
            check_partition(folds.split(f), index.size());
        }
    }
    SUBCASE("Kaggle-sized training index: fold sizes differ by at most one per class") {
        const auto index = fake_index({1321, 1339, 1595, 1457});
        CHECK(index.size() == 5712);
        const auto folds = stratified_kfold(index, 5, 1);
        std::vector<std::size_t> sizes;
        std::array<std::vector<std::size_t>, 4> per_class;
        for (std::size_t f = 0; f < 5; ++f) {
            const auto val = folds.split(f).second;
            sizes.push_back(val.size());
            const auto c = index.subset(val).counts();
            for (std::size_t k = 0; k < 4; ++k) {
                per_class[k].push_back(c[k]);
            }
        }
        CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 4);
        for (const auto &pc : per_class) {
            CHECK(*std::max_element(pc.begin(), pc.end()) - *std::min_element(pc.begin(), pc.end()) <= 1);
        }
    }
    SUBCASE("deterministic, and a class smaller than k is rejected") {
        const auto index = fake_index({7, 8, 9, 10});
        CHECK(stratified_kfold(index, 5, 2) == stratified_kfold(index, 5, 2));
        CHECK_THROWS_AS(stratified_kfold(fake_index({7, 4, 9, 10}), 5, 2), std::invalid_argument);
    }
}

TEST_CASE("onehot and load_batch") {
    const auto t = onehot({2});
    CHECK(t.storage() == std::vector<float>{0, 0, 1, 0});
    CHECK_THROWS_AS(onehot({4}), std::invalid_argument);

    TempDir dir("batch");
    write_class_tree(dir.path(), {10, 8, 8, 8}, 5, 60);
    std::ostringstream warnings;
    const auto index = scan_dataset(dir.path(), warnings);
    std::vector<Sample> first32(index.samples.begin(), index.samples.begin() + 32);

    const auto batch = load_batch(first32, {});
    CHECK(batch.images.shape() == Shape{32, 150, 150, 3});
    CHECK(batch.labels.shape() == Shape{32, 4});
    for (std::size_t i = 0; i < 32; ++i) {
        float row = 0;
        for (std::size_t c = 0; c < 4; ++c) {
            row += batch.labels[i * 4 + c];
        }
        CHECK(row == 1.0f);
        CHECK(batch.labels[i * 4 + static_cast<std::size_t>(first32[i].label)] == 1.0f);
    }
    CHECK(*std::max_element(batch.images.values().begin(), batch.images.values().end()) > 1.0f);
    CHECK(load_batch(first32, {}).images == batch.images);

    LoadOptions crop;
    crop.crop = true;
    CHECK(load_batch(first32, crop).images.shape() == Shape{32, 150, 150, 3});

    std::vector<Sample> bad{{dir.path() / "missing.png", 0}};
    try {
        load_batch(bad, {});
        FAIL("expected an error");
    } catch (const std::runtime_error &e) {
        CHECK(std::string(e.what()).find("missing.png") != std::string::npos);
    }
}
