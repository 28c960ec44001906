#include <doctest.h>

#include "helpers.hpp"
#include "ricenet/config.hpp"
#include "ricenet/errors.hpp"
#include "ricenet/volume_io.hpp"

using namespace ricenet;
using nlohmann::json;

TEST_CASE("empty config yields the defaults")
{
    const RunConfig c = config_from_json(json::object());
    CHECK(config_to_json(c) == config_to_json(RunConfig{}));
    CHECK(c.train.epochs == 60);
    CHECK(c.train.learning_rate == 1e-3);
    CHECK(c.train.batch_size == 4);
    CHECK(c.occlusion.map.cube_size_vox == 8);
    CHECK(c.occlusion.map.stride_vox == 4);
    CHECK(c.augment.rotation_probability == 0.2);
    CHECK(c.preprocess.dose_max_gy == 80.0);
}

TEST_CASE("config round trip and seed propagation")
{
    json j = json::parse(R"({"seed": 9, "train": {"epochs": 3}, "augment": {"scaling_min": 0.8},
                              "occlusion": {"aggregation": "trilinear", "single_channel": 1},
                              "preprocess": {"crop_shape": [40, 40, 40]}})");
    const RunConfig c = config_from_json(j);
    CHECK(c.phantom.seed == 9);
    CHECK(c.train.seed == 9);
    CHECK(c.train.epochs == 3);
    CHECK(c.augment.scaling_min == 0.8);
    CHECK(c.occlusion.map.aggregation == OcclusionAggregation::Trilinear);
    CHECK(c.occlusion.map.single_channel == 1);
    CHECK(c.preprocess.crop_shape == Index3{40, 40, 40});
    CHECK(config_to_json(config_from_json(config_to_json(c))) == config_to_json(c));
}

TEST_CASE("every schema key appears in the serialised defaults")
{
    const json d = config_to_json(RunConfig{});
    for (const auto& f : config_schema()) {
        const auto dot = f.key.find('.');
        const json& v = dot == std::string::npos ? d.at(f.key) : d.at(f.key.substr(0, dot)).at(f.key.substr(dot + 1));
        CHECK(v == f.get(RunConfig{}));
    }
}

TEST_CASE("bad configs name the offending key")
{
    auto message = [](const char* text) {
        try {
            config_from_json(json::parse(text));
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message(R"({"train": {"epochs": 1.5}})").find("train.epochs") != std::string::npos);
    CHECK(message(R"({"train": {"epochs": "ten"}})").find("train.epochs") != std::string::npos);
    CHECK(message(R"({"train": {"epoch": 10}})").find("train.epoch") != std::string::npos);
    CHECK(message(R"({"nonsense": 1})").find("nonsense") != std::string::npos);
    CHECK(message(R"({"augment": {"rotation_probability": 2}})") != "no error");
    CHECK(message(R"({"augment": {"scaling_min": 1.2}})") != "no error");
    CHECK(message(R"({"occlusion": {"stride_vox": 9}})") != "no error");
    CHECK(message(R"({"preprocess": {"dose_normalization": "log"}})").find("dose_normalization") != std::string::npos);
    CHECK(message(R"({"phantom": {"grid_shape": [64, 64]}})").find("phantom.grid_shape") != std::string::npos);
    CHECK(message(R"({"train": {"learning_rate": -1}})") != "no error");
    CHECK(message(R"({"train": {"ensemble_checkpoint": "last"}})") != "no error");
}

TEST_CASE("read_config from disk")
{
    testutil::TempDir dir("cfg");
    write_text_file(dir / "c.json", R"({"workers": 2})");
    CHECK(read_config(dir / "c.json").workers == 2);
    write_text_file(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(read_config(dir / "bad.json"), ConfigError);
}
