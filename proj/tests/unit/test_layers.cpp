#include <doctest.h>

#include <cmath>
#include <random>

#include "ricenet/layers3d.hpp"

using namespace ricenet;
using namespace ricenet::layers;

namespace {

template <typename T>
Tensor<T> random_tensor(std::vector<int> shape, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data) {
        v = static_cast<T>(d(gen));
    }
    return t;
}

} // namespace

TEST_CASE("im2col convolution matches the nested-loop reference")
{
    const std::vector<ConvGeom> geoms{{2, 3, 3, 1, 1}, {3, 4, 3, 2, 1}, {1, 2, 7, 2, 3}, {4, 2, 1, 2, 0}, {2, 2, 3, 1, 0}};
    int seed = 0;
    for (const auto& g : geoms) {
        const auto in = random_tensor<double>({2, g.cin, 7, 6, 9}, seed++);
        const auto w = random_tensor<double>({g.cout, g.cin, g.k, g.k, g.k}, seed++);
        std::vector<double> scratch;
        const auto fast = conv3d_forward(in, std::span<const double>(w.data), g, scratch);
        const auto ref = conv3d_reference(in, std::span<const double>(w.data), g);
        REQUIRE(fast.shape == ref.shape);
        for (std::size_t i = 0; i < ref.numel(); ++i) {
            CHECK(fast.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("conv backward input gradient is the adjoint of forward")
{
    const ConvGeom g{2, 3, 3, 2, 1};
    const auto in = random_tensor<double>({1, 2, 5, 6, 7}, 1);
    const auto w = random_tensor<double>({3, 2, 3, 3, 3}, 2);
    std::vector<double> scratch;
    const auto out = conv3d_forward(in, std::span<const double>(w.data), g, scratch);
    const auto dout = random_tensor<double>(out.shape, 3);
    std::vector<double> dw(w.numel(), 0.0);
    Tensor<double> din;
    conv3d_backward(in, std::span<const double>(w.data), g, dout, std::span<double>(dw), &din, scratch);
    // <dout, conv(in)> == <din, in> and == <dw, w> for a bias-free linear map.
    double lhs = 0;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        lhs += dout.data[i] * out.data[i];
    }
    double rhs_in = 0;
    for (std::size_t i = 0; i < in.numel(); ++i) {
        rhs_in += din.data[i] * in.data[i];
    }
    double rhs_w = 0;
    for (std::size_t i = 0; i < w.numel(); ++i) {
        rhs_w += dw[i] * w.data[i];
    }
    CHECK(rhs_in == doctest::Approx(lhs).epsilon(1e-10));
    CHECK(rhs_w == doctest::Approx(lhs).epsilon(1e-10));
}

TEST_CASE("batch norm train output is standardized per channel")
{
    const auto x = random_tensor<double>({3, 2, 2, 3, 4}, 5);
    const std::vector<double> gamma{1.0, 2.0};
    const std::vector<double> beta{0.0, -1.0};
    BatchNormCache<double> cache;
    const auto y = batchnorm_train(x, std::span<const double>(gamma), std::span<const double>(beta), 1e-5, cache);
    const std::size_t plane = 2 * 3 * 4;
    for (int c = 0; c < 2; ++c) {
        double s = 0;
        double ss = 0;
        for (int n = 0; n < 3; ++n) {
            for (std::size_t i = 0; i < plane; ++i) {
                const double v = y.data[(n * 2 + c) * plane + i];
                s += v;
                ss += v * v;
            }
        }
        const double cnt = 3.0 * plane;
        const double mean = s / cnt;
        CHECK(mean == doctest::Approx(beta[c]).epsilon(1e-9));
        CHECK(std::sqrt(ss / cnt - mean * mean) == doctest::Approx(gamma[c]).epsilon(1e-4));
    }
    CHECK(cache.count == 3 * plane);
}

TEST_CASE("max pool picks window maxima and never padding")
{
    Tensor<double> x({1, 1, 1, 1, 4}, -5.0);
    x.data = {-5.0, -1.0, -3.0, -2.0};
    std::vector<std::int32_t> argmax;
    const auto y = maxpool3d_forward(x, 3, 2, 1, argmax);
    REQUIRE(y.shape == std::vector<int>{1, 1, 1, 1, 2});
    CHECK(y.data[0] == -1.0);
    CHECK(y.data[1] == -1.0);
    Tensor<double> dy(y.shape, 1.0);
    const auto dx = maxpool3d_backward(dy, x.shape, argmax);
    CHECK(dx.data == std::vector<double>{0.0, 2.0, 0.0, 0.0});
}

TEST_CASE("global average pool and linear layer")
{
    Tensor<double> x({1, 2, 1, 1, 2});
    x.data = {1.0, 3.0, -2.0, 4.0};
    const auto p = global_avg_pool(x);
    CHECK(p.data == std::vector<double>{2.0, 1.0});
    const std::vector<double> w{1.0, 0.0, 0.5, -1.0};
    const std::vector<double> b{0.25, 0.0};
    const auto y = linear_forward(p, std::span<const double>(w), std::span<const double>(b), 2);
    CHECK(y.data[0] == doctest::Approx(2.25));
    CHECK(y.data[1] == doctest::Approx(0.0));
}
