#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gradcheck.hpp"
#include "lwcnn/adamax.hpp"
#include "lwcnn/layers.hpp"
#include "lwcnn/network.hpp"
#include "lwcnn/weights_io.hpp"

using namespace lwcnn;
using lwcnn::testing::max_gradient_error;
using lwcnn::testing::random_tensor;
using lwcnn::testing::weighted_sum;

namespace {

std::filesystem::path scratch_dir(const std::string &name) {
    auto dir = std::filesystem::temp_directory_path() / ("lwcnn_nn_core_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

NetworkConfig small_config() {
    NetworkConfig c;
    c.filters = {2, 3, 2, 2};
    c.kernels = {3, 4, 3, 4};
    c.dense_units = 5;
    c.input_size = 16;
    return c;
}

}  // namespace

TEST_CASE("conv2d backward matches finite differences") {
    Rng rng(21);
    auto in = random_tensor<double>({1, 5, 5, 2}, rng);
    auto ker = random_tensor<double>({3, 3, 2, 3}, rng);
    auto bias = random_tensor<double>({3}, rng);
    auto probe = random_tensor<double>({1, 5, 5, 3}, rng);
    auto loss = [&] { return weighted_sum(kernels::conv2d_forward(in, ker, bias), probe); };
    auto g = kernels::conv2d_backward(in, ker, probe);
    CHECK(max_gradient_error(in.values(), g.input.values(), loss) < 1e-4);
    CHECK(max_gradient_error(ker.values(), g.kernel.values(), loss) < 1e-4);
    CHECK(max_gradient_error(bias.values(), g.bias.values(), loss) < 1e-4);

    auto ker4 = random_tensor<double>({4, 4, 2, 3}, rng);
    auto loss4 = [&] { return weighted_sum(kernels::conv2d_forward(in, ker4, bias), probe); };
    auto g4 = kernels::conv2d_backward(in, ker4, probe);
    CHECK(max_gradient_error(in.values(), g4.input.values(), loss4) < 1e-4);
    CHECK(max_gradient_error(ker4.values(), g4.kernel.values(), loss4) < 1e-4);
}

TEST_CASE("dense backward matches finite differences") {
    Rng rng(22);
    auto x = random_tensor<double>({3, 7}, rng);
    auto w = random_tensor<double>({7, 4}, rng);
    auto b = random_tensor<double>({4}, rng);
    auto probe = random_tensor<double>({3, 4}, rng);
    auto loss = [&] { return weighted_sum(kernels::dense_forward(x, w, b), probe); };
    auto g = kernels::dense_backward(x, w, probe);
    CHECK(max_gradient_error(x.values(), g.input.values(), loss) < 1e-4);
    CHECK(max_gradient_error(w.values(), g.weights.values(), loss) < 1e-4);
    CHECK(max_gradient_error(b.values(), g.bias.values(), loss) < 1e-4);
}

TEST_CASE("dropout") {
    Rng rng(1);
    Tensor x({2, 8}, 3.0f);
    SUBCASE("rate 0 in training is the identity with an all-ones mask") {
        auto r = dropout_forward(x, 0.0, true, rng);
        CHECK(r.output == x);
        for (float m : r.mask.values()) {
            CHECK(m == 1.0f);
        }
    }
    SUBCASE("inference is the identity for any rate") {
        CHECK(dropout_forward(x, 0.6, false, rng).output == x);
    }
    SUBCASE("invalid rates are rejected") {
        CHECK_THROWS_AS(dropout_forward(x, 1.0, true, rng), std::invalid_argument);
        CHECK_THROWS_AS(dropout_forward(x, -0.1, true, rng), std::invalid_argument);
    }
    SUBCASE("kept elements are scaled by 1/(1-rate); backward reuses the mask") {
        auto r = dropout_forward(x, 0.25, true, rng);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK((r.output[i] == 0.0f || r.output[i] == doctest::Approx(4.0)));
        }
        Tensor g({2, 8}, 1.0f);
        CHECK(dropout_backward(r.mask, g) == r.mask);
    }
    SUBCASE("rate 0.5 preserves the mean over 1e5 seeded trials") {
        Tensor one({1, 1}, 1.0f);
        Rng mc(12345);
        double sum = 0.0;
        const int trials = 100000;
        for (int i = 0; i < trials; ++i) {
            sum += dropout_forward(one, 0.5, true, mc).output[0];
        }
        CHECK(std::abs(sum / trials - 1.0) < 0.02);
    }
}

TEST_CASE("softmax cross-entropy") {
    SUBCASE("equal logits give the uniform distribution and ln 4") {
        Tensor logits({1, 4}, 0.7f);
        Tensor y({1, 4}, {0, 0, 1, 0});
        auto r = softmax_cross_entropy(logits, y);
        for (float p : r.probs.values()) {
            CHECK(p == doctest::Approx(0.25));
        }
        CHECK(r.loss == doctest::Approx(std::log(4.0)).epsilon(1e-6));
    }
    SUBCASE("logits [ln 2, 0, 0, 0]") {
        Tensor logits({1, 4}, {static_cast<float>(std::log(2.0)), 0, 0, 0});
        auto p = softmax(logits);
        CHECK(p[0] == doctest::Approx(0.4));
        CHECK(p[1] == doctest::Approx(0.2));
        CHECK(p[2] == doctest::Approx(0.2));
        CHECK(p[3] == doctest::Approx(0.2));
    }
    SUBCASE("shift invariance and normalization") {
        Rng rng(4);
        auto z = random_tensor<double>({6, 4}, rng, -20, 20);
        auto shifted = z;
        for (auto &v : shifted.values()) {
            v += 123.25;
        }
        auto a = softmax(z), b = softmax(shifted);
        for (std::size_t i = 0; i < 6; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(a[i * 4 + j] == doctest::Approx(b[i * 4 + j]).epsilon(1e-9));
                CHECK(a[i * 4 + j] > 0.0);
                CHECK(a[i * 4 + j] < 1.0);
                row += a[i * 4 + j];
            }
            CHECK(std::abs(row - 1.0) < 1e-6);
        }
    }
    SUBCASE("gradient matches finite differences of the loss") {
        Rng rng(8);
        auto z = random_tensor<double>({3, 4}, rng, -2, 2);
        BasicTensor<double> y({3, 4}, {1, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0});
        auto r = softmax_cross_entropy(z, y);
        CHECK(max_gradient_error(z.values(), r.grad_logits.values(),
                                 [&] { return softmax_cross_entropy(z, y).loss; }) < 1e-4);
    }
    SUBCASE("errors") {
        Tensor z({2, 4});
        CHECK_THROWS_AS(softmax_cross_entropy(z, Tensor({2, 3})), std::invalid_argument);
        CHECK_THROWS_AS(softmax_cross_entropy(z, Tensor({2, 4}, {1, 1, 0, 0, 0, 0, 0, 1})), std::invalid_argument);
        CHECK_THROWS_AS(softmax_cross_entropy(z, Tensor({2, 4}, {0.5f, 0.5f, 0, 0, 0, 0, 0, 1})),
                        std::invalid_argument);
    }
}

TEST_CASE("param_count") {
    NetworkConfig defaults;
    CHECK(param_count(defaults) == 4344964);

    NetworkConfig best;
    best.filters = {32, 64, 128, 128};
    best.kernels = {4, 3, 3, 4};
    best.dense_units = 512;
    best.dropout_rate = 0.5;
    best.learning_rate = 1.19e-3;
    CHECK(param_count(best) == 5667172);

    NetworkConfig zero;
    zero.filters[2] = 0;
    CHECK_THROWS_AS(param_count(zero), std::invalid_argument);
    NetworkConfig bad_kernel;
    bad_kernel.kernels[0] = 5;
    CHECK_THROWS_AS(param_count(bad_kernel), std::invalid_argument);
}

TEST_CASE("param_count equals stored elements for sampled configs") {
    Rng rng(77);
    for (int i = 0; i < 25; ++i) {
        NetworkConfig c;
        for (std::size_t l = 0; l < 4; ++l) {
            c.filters[l] = 1 + rng.below(6);
            c.kernels[l] = 3 + rng.below(2);
        }
        c.dense_units = 1 + rng.below(9);
        c.input_size = 16 + rng.below(30);
        CHECK(param_count(c) == build_network(c, rng.next()).stored_parameter_count());
    }
}

TEST_CASE("build_network") {
    NetworkConfig defaults;
    defaults.input_size = 32;  // conv1 does not depend on the input size
    auto net = build_network(defaults, 1);
    CHECK(net.conv(0).parameter_count() == 896);

    auto a = build_network(small_config(), 42);
    auto b = build_network(small_config(), 42);
    auto pa = a.parameters();
    auto pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(*pa[i] == *pb[i]);
    }

    for (std::size_t l = 0; l < 4; ++l) {
        const auto &conv = a.conv(l);
        const std::size_t kk = conv.kernel_size() * conv.kernel_size();
        const double limit = std::sqrt(6.0 / static_cast<double>(kk * (conv.in_channels() + conv.out_channels())));
        for (float w : conv.kernel.values()) {
            CHECK(std::abs(w) <= limit);
        }
        for (float v : conv.bias.values()) {
            CHECK(v == 0.0f);
        }
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(a.hidden().in_features() + a.hidden().out_features()));
    for (float w : a.hidden().weights.values()) {
        CHECK(std::abs(w) <= limit);
    }
}

TEST_CASE("network forward is deterministic and backward needs a training cache") {
    auto net = build_network(small_config(), 3);
    Rng rng(5);
    auto x = random_tensor<float>({2, 16, 16, 3}, rng, 0, 1);
    CHECK(net.forward(x, Mode::inference) == net.forward(x, Mode::inference));

    ForwardCache<float> cache;
    Rng d1(9), d2(9);
    ForwardCache<float> cache2;
    auto l1 = net.forward(x, Mode::training, &d1, &cache);
    auto l2 = net.forward(x, Mode::training, &d2, &cache2);
    CHECK(l1 == l2);
    Tensor g({2, 4}, 0.1f);
    auto g1 = net.backward(cache, g);
    auto g2 = net.backward(cache2, g);
    for (std::size_t i = 0; i < g1.size(); ++i) {
        CHECK(g1[i] == g2[i]);
    }

    ForwardCache<float> inference_cache;
    net.forward(x, Mode::inference, nullptr, &inference_cache);
    CHECK_THROWS_AS(net.backward(inference_cache, g), std::invalid_argument);
    CHECK_THROWS_AS(net.forward(Tensor({1, 15, 16, 3}), Mode::inference), std::invalid_argument);
}

TEST_CASE("adamax") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        Tensor p({3}, {1, -2, 3});
        const Tensor before = p;
        std::vector<Tensor *> params{&p};
        AdamaxState state(params, 1e-3);
        adamax_step(params, {Tensor({3}, 0.0f)}, state);
        CHECK(p == before);
        CHECK(state.t == 1);
    }
    SUBCASE("first step moves by about lr * sign(g)") {
        for (float g : {0.5f, -3.0f}) {
            Tensor p({1}, 1.0f);
            std::vector<Tensor *> params{&p};
            AdamaxState state(params, 1e-3);
            adamax_step(params, {Tensor({1}, g)}, state);
            CHECK(1.0f - p[0] == doctest::Approx(1e-3 * (g > 0 ? 1 : -1)).epsilon(1e-4));
            CHECK(state.u[0][0] == std::abs(g));
        }
    }
    SUBCASE("step is linear in the learning rate") {
        Tensor p1({2}, 0.0f), p2({2}, 0.0f);
        std::vector<Tensor *> a{&p1}, b{&p2};
        AdamaxState s1(a, 2e-3), s2(b, 1e-3);
        const std::vector<Tensor> g{Tensor({2}, {0.3f, -0.7f})};
        adamax_step(a, g, s1);
        adamax_step(b, g, s2);
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(p1[i] == doctest::Approx(2.0 * p2[i]).epsilon(1e-6));
        }
    }
    SUBCASE("shape mismatch is rejected") {
        Tensor p({3});
        std::vector<Tensor *> params{&p};
        AdamaxState state(params, 1e-3);
        CHECK_THROWS_AS(adamax_step(params, {Tensor({2})}, state), std::invalid_argument);
    }
}

TEST_CASE("weight files") {
    const auto dir = scratch_dir("weights");
    auto net = build_network(small_config(), 17);
    const auto path = dir / "model.lwcnn";
    save_weights(net, path);

    SUBCASE("roundtrip reproduces outputs bit-exactly") {
        auto loaded = load_weights(path);
        CHECK(loaded.config() == net.config());
        Rng rng(2);
        auto x = random_tensor<float>({3, 16, 16, 3}, rng, 0, 1);
        CHECK(loaded.forward(x, Mode::inference) == net.forward(x, Mode::inference));
    }

    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto write = [&](const std::vector<char> &b) {
        std::ofstream out(dir / "bad.lwcnn", std::ios::binary | std::ios::trunc);
        out.write(b.data(), static_cast<std::streamsize>(b.size()));
    };

    SUBCASE("corrupted magic") {
        auto bad = bytes;
        bad[0] = 'X';
        write(bad);
        CHECK_THROWS_WITH_AS(load_weights(dir / "bad.lwcnn"), doctest::Contains("bad magic"), std::runtime_error);
    }
    SUBCASE("truncated payload names expected and actual sizes") {
        auto bad = bytes;
        bad.resize(bad.size() - 10);
        write(bad);
        const std::string expected = "expected " + std::to_string(bytes.size()) + " bytes, got " +
                                     std::to_string(bytes.size() - 10);
        CHECK_THROWS_WITH_AS(load_weights(dir / "bad.lwcnn"), doctest::Contains(expected.c_str()), std::runtime_error);
    }
    SUBCASE("trailing bytes are a length mismatch") {
        auto bad = bytes;
        bad.push_back(0);
        write(bad);
        CHECK_THROWS_WITH_AS(load_weights(dir / "bad.lwcnn"), doctest::Contains("mismatch"), std::runtime_error);
    }
}
