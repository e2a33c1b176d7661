#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "whatif/error.hpp"
#include "whatif/ops.hpp"

using namespace whatif;

TEST_CASE("conv2d: identity kernel and constant input") {
    Xoshiro256 rng(1);
    const TensorF32 x = oracle::random_tensor(rng, {1, 3, 5, 6}, -1, 1);
    TensorF32 w({3, 3, 1, 1}, 0.0f);
    for (int c = 0; c < 3; ++c) w.at(c, c, 0, 0) = 1.0f;
    CHECK(nn::conv2d(x, w, TensorF32({3}, 0.0f), 1, 0).data()[7] == x.data()[7]);
    CHECK(nn::conv2d(x, w, TensorF32({3}, 0.0f), 1, 0) == x);

    const TensorF32 flat({1, 2, 6, 6}, 0.5f);
    const TensorF32 k = oracle::random_tensor(rng, {1, 2, 3, 3}, -1, 1);
    double s = 0;
    for (float v : k.data()) s += v;
    const TensorF32 y = nn::conv2d(flat, k, TensorF32({1}, 0.25f), 1, 1);
    CHECK(y.at(0, 0, 3, 3) == doctest::Approx(0.5 * s + 0.25).epsilon(1e-6));
}

TEST_CASE("conv2d: random cases match the direct oracle") {
    Xoshiro256 rng(100);
    double worst_seen = 0;
    for (int i = 0; i < 150; ++i) {
        const int c = 1 + static_cast<int>(rng.below(4)), f = 1 + static_cast<int>(rng.below(5));
        const int k = 1 + static_cast<int>(rng.below(4)), stride = 1 + static_cast<int>(rng.below(3));
        const int pad = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        const int h = k + static_cast<int>(rng.below(8)), w = k + static_cast<int>(rng.below(8));
        const TensorF32 x = oracle::random_tensor(rng, {1, c, h, w}, -2, 2);
        const TensorF32 wt = oracle::random_tensor(rng, {f, c, k, k}, -1, 1);
        const TensorF32 b = oracle::random_tensor(rng, {f}, -1, 1);
        const bool relu = rng.below(2) == 1;
        double worst = 0;
        CHECK(oracle::matches(nn::conv2d(x, wt, b, stride, pad, relu), oracle::conv2d(x, wt, b, stride, pad, relu),
                              1e-5, &worst));
        worst_seen = std::max(worst_seen, worst);
    }
    MESSAGE("conv2d worst relative error " << worst_seen);
}

TEST_CASE("conv2d: channel mismatch is a shape error") {
    try {
        nn::conv2d(TensorF32({1, 2, 4, 4}), TensorF32({1, 3, 3, 3}), TensorF32({1}), 1, 0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::shape);
    }
}

TEST_CASE("maxpool2d: random cases match the oracle, floor and ceil sizing") {
    Xoshiro256 rng(200);
    for (int i = 0; i < 150; ++i) {
        const int k = 1 + static_cast<int>(rng.below(4)), stride = 1 + static_cast<int>(rng.below(3));
        const int pad = static_cast<int>(rng.below(static_cast<std::uint64_t>(k / 2 + 1)));
        const int h = k + static_cast<int>(rng.below(9)), w = k + static_cast<int>(rng.below(9));
        const bool ceil_mode = rng.below(2) == 1;
        const TensorF32 x = oracle::random_tensor(rng, {1, 1 + static_cast<int>(rng.below(3)), h, w}, -3, 3);
        CHECK(oracle::matches(nn::maxpool2d(x, k, stride, pad, ceil_mode), oracle::maxpool(x, k, stride, pad, ceil_mode),
                              1e-5));
    }
    CHECK(nn::window_output_size(55, 3, 2, 0, false) == 27);
    CHECK(nn::window_output_size(55, 3, 2, 0, true) == 27);
    CHECK(nn::window_output_size(56, 3, 2, 0, true) == 28);
    CHECK(nn::window_output_size(56, 3, 2, 0, false) == 27);
    CHECK(nn::window_output_size(2, 3, 1, 0, false) == 0);
}

TEST_CASE("global_avg_pool and softmax: random cases match the oracle") {
    Xoshiro256 rng(300);
    for (int i = 0; i < 120; ++i) {
        const TensorF32 x = oracle::random_tensor(
            rng, {1, 1 + static_cast<int>(rng.below(12)), 1 + static_cast<int>(rng.below(7)), 1 + static_cast<int>(rng.below(7))},
            -4, 4);
        CHECK(oracle::matches(nn::global_avg_pool(x), oracle::global_avg_pool(x), 1e-5));
        CHECK(oracle::matches(nn::softmax(x), oracle::softmax(x), 1e-5));
    }
}

TEST_CASE("softmax: uniform, extended-precision reference, large logits") {
    const TensorF32 eq({1, 10, 1, 1}, 3.0f);
    const TensorF32 uniform = nn::softmax(eq);
    for (float p : uniform.data()) CHECK(p == doctest::Approx(0.1).epsilon(1e-7));

    const TensorF32 x({1, 3, 1, 1}, std::vector<float>{1, 2, 3});
    const auto want = oracle::softmax(x);
    const TensorF32 got = nn::softmax(x);
    for (int i = 0; i < 3; ++i) CHECK(std::fabs(got.data()[i] - static_cast<double>(want.values[i])) <= 1e-7);

    const TensorF32 big({1, 2, 1, 1}, std::vector<float>{1000, 1000});
    const TensorF32 halves = nn::softmax(big);
    for (float p : halves.data()) CHECK(p == doctest::Approx(0.5));
}

TEST_CASE("relu and concat") {
    const TensorF32 x({1, 3, 1, 1}, std::vector<float>{-1, 0, 2});
    CHECK(nn::relu(x) == TensorF32({1, 3, 1, 1}, std::vector<float>{0, 0, 2}));

    Xoshiro256 rng(4);
    const TensorF32 a = oracle::random_tensor(rng, {1, 2, 3, 4}, -1, 1);
    const TensorF32 b = oracle::random_tensor(rng, {1, 3, 3, 4}, -1, 1);
    const TensorF32* parts[] = {&a, &b};
    const TensorF32 c = nn::concat_channels(parts);
    CHECK(c.shape() == Shape{1, 5, 3, 4});
    CHECK(c.at(0, 1, 2, 3) == a.at(0, 1, 2, 3));
    CHECK(c.at(0, 4, 1, 0) == b.at(0, 2, 1, 0));
    const TensorF32 bad({1, 1, 2, 4});
    const TensorF32* mismatched[] = {&a, &bad};
    CHECK_THROWS_AS(nn::concat_channels(mismatched), Error);
}

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(TensorF32({2, 2}, std::vector<float>{1, 2, 3}), Error);
    CHECK_THROWS_AS(TensorF32({1}, std::vector<float>{INFINITY}), Error);
}
