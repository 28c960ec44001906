#include "ricenet/checkpoint.hpp"

#include "ricenet/errors.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

namespace fs = std::filesystem;
using nlohmann::json;

json model_config_to_json(const ResNet3DConfig& cfg)
{
    json j;
    j["in_channels"] = cfg.in_channels;
    j["num_classes"] = cfg.num_classes;
    j["base_width"] = cfg.base_width;
    j["blocks_per_stage"] = cfg.blocks_per_stage;
    j["stem_kernel"] = cfg.stem_kernel;
    j["input_shape"] = cfg.input_shape;
    j["bn_epsilon"] = cfg.bn_epsilon;
    j["bn_momentum"] = cfg.bn_momentum;
    return j;
}

ResNet3DConfig model_config_from_json(const json& j)
{
    ResNet3DConfig cfg;
    cfg.in_channels = j.at("in_channels").get<int>();
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.base_width = j.at("base_width").get<int>();
    cfg.blocks_per_stage = j.at("blocks_per_stage").get<std::array<int, 4>>();
    cfg.stem_kernel = j.at("stem_kernel").get<int>();
    cfg.input_shape = j.at("input_shape").get<Index3>();
    cfg.bn_epsilon = j.at("bn_epsilon").get<double>();
    cfg.bn_momentum = j.at("bn_momentum").get<double>();
    cfg.validate();
    return cfg;
}

void write_checkpoint(const Checkpoint& ckpt, const fs::path& base)
{
    audit_params(ckpt.params, ckpt.config);
    json j;
    j["format"] = "ricenet-checkpoint";
    j["dtype"] = "f32le";
    j["config"] = model_config_to_json(ckpt.config);
    j["tensors"] = json::array();
    std::vector<float> flat;
    flat.reserve(ckpt.params.scalar_count());
    for (const auto& t : ckpt.params.tensors) {
        json e;
        e["name"] = t.name;
        e["shape"] = t.shape;
        e["trainable"] = t.trainable;
        e["offset"] = flat.size();
        e["count"] = t.data.size();
        j["tensors"].push_back(e);
        flat.insert(flat.end(), t.data.begin(), t.data.end());
    }
    write_text_file(volume_header_path(base), j.dump(2) + "\n");
    write_file_bytes(volume_payload_path(base), encode_f32le(flat));
}

Checkpoint read_checkpoint(const fs::path& base)
{
    const auto header_path = volume_header_path(base);
    json j;
    try {
        j = json::parse(read_text_file(header_path));
    } catch (const json::parse_error& e) {
        throw FormatError("checkpoint header '" + header_path.string() + "': " + e.what());
    }
    if (j.value("dtype", "") != "f32le") {
        throw FormatError("checkpoint '" + header_path.string() + "': unsupported dtype");
    }
    Checkpoint ckpt;
    try {
        ckpt.config = model_config_from_json(j.at("config"));
        const auto flat = decode_f32le(read_file_bytes(volume_payload_path(base)));
        for (const auto& e : j.at("tensors")) {
            ParamTensor<float> t;
            t.name = e.at("name").get<std::string>();
            t.shape = e.at("shape").get<std::vector<int>>();
            t.trainable = e.at("trainable").get<bool>();
            const auto offset = e.at("offset").get<std::size_t>();
            const auto count = e.at("count").get<std::size_t>();
            if (offset + count > flat.size() || count != shape_numel(t.shape)) {
                throw SizeMismatchError("checkpoint tensor '" + t.name + "' exceeds payload or mismatches its shape");
            }
            t.data.assign(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                          flat.begin() + static_cast<std::ptrdiff_t>(offset + count));
            ckpt.params.tensors.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw FormatError("checkpoint header '" + header_path.string() + "': " + e.what());
    }
    audit_params(ckpt.params, ckpt.config);
    return ckpt;
}

} // namespace ricenet
