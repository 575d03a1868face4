// Parallel kernels vs the serial direct-loop reference, plus one full
// training step of the default network.

#include <benchmark/benchmark.h>

#include "lwcnn/adamax.hpp"
#include "lwcnn/kernels.hpp"
#include "lwcnn/network.hpp"
#include "lwcnn/reference.hpp"

namespace {

using lwcnn::Rng;
using lwcnn::Tensor;

Tensor random_tensor(lwcnn::Shape shape, Rng &rng) {
    Tensor t(std::move(shape));
    for (auto &v : t.values()) {
        v = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
    return t;
}

// args: spatial size, Cin, Cout, k
void conv_args(benchmark::internal::Benchmark *b) {
    b->Args({37, 128, 128, 3})->Args({75, 32, 128, 4})->Args({150, 3, 32, 3});
}

void BM_ConvForwardKernel(benchmark::State &state) {
    Rng rng(1);
    const auto s = static_cast<std::size_t>(state.range(0));
    auto in = random_tensor({1, s, s, static_cast<std::size_t>(state.range(1))}, rng);
    auto k = static_cast<std::size_t>(state.range(3));
    auto ker = random_tensor({k, k, static_cast<std::size_t>(state.range(1)), static_cast<std::size_t>(state.range(2))}, rng);
    auto bias = random_tensor({static_cast<std::size_t>(state.range(2))}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lwcnn::kernels::conv2d_forward(in, ker, bias));
    }
    state.counters["MACs"] = benchmark::Counter(static_cast<double>(s * s * k * k * state.range(1) * state.range(2)),
                                                benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_ConvForwardKernel)->Apply(conv_args)->Unit(benchmark::kMillisecond);

void BM_ConvForwardReference(benchmark::State &state) {
    Rng rng(1);
    const auto s = static_cast<std::size_t>(state.range(0));
    auto in = random_tensor({1, s, s, static_cast<std::size_t>(state.range(1))}, rng);
    auto k = static_cast<std::size_t>(state.range(3));
    auto ker = random_tensor({k, k, static_cast<std::size_t>(state.range(1)), static_cast<std::size_t>(state.range(2))}, rng);
    auto bias = random_tensor({static_cast<std::size_t>(state.range(2))}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lwcnn::reference::conv2d_forward(in, ker, bias));
    }
    state.counters["MACs"] = benchmark::Counter(static_cast<double>(s * s * k * k * state.range(1) * state.range(2)),
                                                benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_ConvForwardReference)->Apply(conv_args)->Unit(benchmark::kMillisecond);

void BM_ConvBackwardKernel(benchmark::State &state) {
    Rng rng(2);
    auto in = random_tensor({1, 37, 37, 128}, rng);
    auto ker = random_tensor({3, 3, 128, 128}, rng);
    auto go = random_tensor({1, 37, 37, 128}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lwcnn::kernels::conv2d_backward(in, ker, go));
    }
}
BENCHMARK(BM_ConvBackwardKernel)->Unit(benchmark::kMillisecond);

void BM_ConvBackwardReference(benchmark::State &state) {
    Rng rng(2);
    auto in = random_tensor({1, 37, 37, 128}, rng);
    auto ker = random_tensor({3, 3, 128, 128}, rng);
    auto go = random_tensor({1, 37, 37, 128}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lwcnn::reference::conv2d_backward(in, ker, go));
    }
}
BENCHMARK(BM_ConvBackwardReference)->Unit(benchmark::kMillisecond);

void BM_DenseForwardKernel(benchmark::State &state) {
    Rng rng(3);
    auto x = random_tensor({32, 10368}, rng);
    auto w = random_tensor({10368, 384}, rng);
    auto b = random_tensor({384}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lwcnn::kernels::dense_forward(x, w, b));
    }
}
BENCHMARK(BM_DenseForwardKernel)->Unit(benchmark::kMillisecond);

void BM_DenseForwardReference(benchmark::State &state) {
    Rng rng(3);
    auto x = random_tensor({32, 10368}, rng);
    auto w = random_tensor({10368, 384}, rng);
    auto b = random_tensor({384}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lwcnn::reference::dense_forward(x, w, b));
    }
}
BENCHMARK(BM_DenseForwardReference)->Unit(benchmark::kMillisecond);

// One forward/backward/update on a batch of the default 150x150 network.
void BM_TrainStepDefaultNetwork(benchmark::State &state) {
    lwcnn::NetworkConfig config;
    auto net = lwcnn::build_network(config, 1);
    Rng rng(4);
    const auto batch = static_cast<std::size_t>(state.range(0));
    auto x = random_tensor({batch, 150, 150, 3}, rng);
    Tensor y({batch, 4});
    for (std::size_t i = 0; i < batch; ++i) {
        y[i * 4 + i % 4] = 1.0f;
    }
    auto params = net.parameters();
    lwcnn::AdamaxState opt(params, config.learning_rate);
    for (auto _ : state) {
        lwcnn::ForwardCache<float> cache;
        Rng drop(5);
        auto logits = net.forward(x, lwcnn::Mode::training, &drop, &cache);
        auto ce = lwcnn::softmax_cross_entropy(logits, y);
        lwcnn::adamax_step(params, net.backward(cache, ce.grad_logits), opt);
    }
}
BENCHMARK(BM_TrainStepDefaultNetwork)->Arg(4)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();
