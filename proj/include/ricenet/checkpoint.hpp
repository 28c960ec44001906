#pragma once

#include <filesystem>

#include <json.hpp>

#include "ricenet/model_params.hpp"
#include "ricenet/resnet3d.hpp"

namespace ricenet {

struct Checkpoint {
    ResNet3DConfig config;
    ModelParams<float> params;
};

nlohmann::json model_config_to_json(const ResNet3DConfig& cfg);
ResNet3DConfig model_config_from_json(const nlohmann::json& j);

// `<base>.json` (config + tensor index) and `<base>.raw` (all tensors as
// little-endian float32, concatenated in index order).
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& base);
Checkpoint read_checkpoint(const std::filesystem::path& base);

} // namespace ricenet
