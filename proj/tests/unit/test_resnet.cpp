#include <doctest.h>

#include <cmath>

#include "../common/gradcheck.hpp"
#include "helpers.hpp"
#include "ricenet/checkpoint.hpp"
#include "ricenet/errors.hpp"
#include "ricenet/resnet3d.hpp"

using namespace ricenet;

TEST_CASE("ResNet-18 parameter layout")
{
    ResNet3DConfig cfg;
    cfg.in_channels = 3;
    cfg.base_width = 8;
    const auto specs = param_specs(cfg);
    CHECK(specs.front().name == "stem.conv.weight");
    CHECK(specs.front().shape == std::vector<int>{8, 3, 7, 7, 7});
    CHECK(specs.back().name == "fc.bias");
    int convs = 0;
    int downsample = 0;
    for (const auto& s : specs) {
        if (s.name.size() > 7 && s.name.substr(s.name.size() - 7) == ".weight" && s.shape.size() == 5) {
            ++convs;
        }
        if (s.name.find("downsample.conv") != std::string::npos) {
            ++downsample;
            CHECK(s.shape[2] == 1);
        }
        CHECK(s.trainable == (s.name.find("running") == std::string::npos));
    }
    // 1 stem + 16 block convs + 3 projections.
    CHECK(convs == 20);
    CHECK(downsample == 3);
    CHECK(final_feature_shape(cfg) == Index3{2, 2, 2});
    cfg.input_shape = {48, 48, 48};
    CHECK(final_feature_shape(cfg) == Index3{2, 2, 2});
}

TEST_CASE("softmax of (ln 3, 0) is (0.75, 0.25)")
{
    Tensor<double> logits({1, 2});
    logits.data = {std::log(3.0), 0.0};
    const auto p = predict_prob(logits);
    CHECK(p.data[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(p.data[1] == doctest::Approx(0.25).epsilon(1e-12));
    logits.data = {1000.0, 0.0};
    const auto q = predict_prob(logits);
    CHECK(std::isfinite(q.data[0]));
    CHECK(q.data[0] == doctest::Approx(1.0));
    const std::vector<int> lab{0};
    logits.data = {std::log(3.0), 0.0};
    CHECK(cross_entropy(logits, std::span<const int>(lab)) == doctest::Approx(-std::log(0.75)));
}

TEST_CASE("fresh model loss is near ln 2 on a balanced batch")
{
    ResNet3DConfig cfg;
    cfg.in_channels = 2;
    cfg.input_shape = {16, 16, 16};
    cfg.stem_kernel = 3;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        Rng rng(seed);
        const auto params = init_model<float>(cfg, rng);
        Tensor<float> x({4, 2, 16, 16, 16});
        for (auto& v : x.data) {
            v = static_cast<float>(rng.normal());
        }
        const std::vector<int> labels{0, 1, 0, 1};
        const auto lg = backward(cfg, params, x, std::span<const int>(labels));
        CHECK(lg.loss > 0.6f);
        CHECK(lg.loss < 0.8f);
    }
}

TEST_CASE("train-mode forward leaves params untouched; running stats update")
{
    ResNet3DConfig cfg;
    cfg.in_channels = 1;
    cfg.base_width = 2;
    cfg.input_shape = {8, 8, 8};
    cfg.stem_kernel = 3;
    Rng rng(1);
    auto params = init_model<double>(cfg, rng);
    const auto before = params;
    Tensor<double> x({2, 1, 8, 8, 8});
    for (auto& v : x.data) {
        v = rng.normal(2.0, 1.0);
    }
    forward(cfg, params, x, Mode::Train);
    CHECK(params == before);
    const std::vector<int> labels{0, 1};
    const auto lg = backward(cfg, params, x, std::span<const int>(labels));
    update_running_stats(params, lg.batch_stats, cfg.bn_momentum);
    const auto& rm = params.at("stem.bn.running_mean").data;
    const auto& entry = lg.batch_stats.layers.front();
    CHECK(rm[0] == doctest::Approx(0.1 * entry.mean[0]));
    const auto& rv = params.at("stem.bn.running_var").data;
    const double n = static_cast<double>(entry.count);
    CHECK(rv[0] == doctest::Approx(0.9 + 0.1 * entry.var[0] * n / (n - 1)));
}

TEST_CASE("analytic gradients match central differences")
{
    ResNet3DConfig cfg;
    cfg.in_channels = 2;
    cfg.base_width = 2;
    cfg.input_shape = {8, 8, 8};
    for (std::uint64_t draw = 0; draw < 2; ++draw) {
        const auto r = gradcheck::check_draw(cfg, draw, 4);
        CHECK(r.checked > 40);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("eval mode is deterministic and batch-independent")
{
    ResNet3DConfig cfg;
    cfg.in_channels = 1;
    cfg.base_width = 4;
    cfg.input_shape = {12, 12, 12};
    cfg.stem_kernel = 3;
    Rng rng(3);
    const auto params = init_model<float>(cfg, rng);
    Tensor<float> x({2, 1, 12, 12, 12});
    for (auto& v : x.data) {
        v = static_cast<float>(rng.normal());
    }
    const auto both = forward(cfg, params, x, Mode::Eval);
    Tensor<float> first({1, 1, 12, 12, 12});
    std::copy(x.data.begin(), x.data.begin() + first.numel(), first.data.begin());
    const auto one = forward(cfg, params, first, Mode::Eval);
    CHECK(one.data[0] == doctest::Approx(both.data[0]).epsilon(1e-5));
    CHECK(one.data[1] == doctest::Approx(both.data[1]).epsilon(1e-5));
    CHECK(forward(cfg, params, x, Mode::Eval).data == both.data);
}

TEST_CASE("checkpoint round trip and audit")
{
    testutil::TempDir dir("ckpt");
    ResNet3DConfig cfg;
    cfg.in_channels = 2;
    cfg.base_width = 4;
    cfg.input_shape = {16, 16, 16};
    Rng rng(8);
    Checkpoint ck{cfg, init_model<float>(cfg, rng)};
    write_checkpoint(ck, dir / "m");
    const auto back = read_checkpoint(dir / "m");
    CHECK(back.config == cfg);
    CHECK(back.params == ck.params);

    ResNet3DConfig other = cfg;
    other.in_channels = 3;
    CHECK_THROWS_AS(audit_params(ck.params, other), ShapeMismatchError);
    ck.params.tensors[0].data[0] = std::nanf("");
    CHECK_THROWS_AS(audit_params(ck.params, cfg), NonFiniteError);
}
