#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ricenet/augment.hpp"
#include "ricenet/occlusion.hpp"
#include "ricenet/phantom.hpp"
#include "ricenet/pipeline.hpp"
#include "ricenet/resnet3d.hpp"
#include "ricenet/trainer.hpp"

namespace ricenet {

struct PathsConfig {
    std::string workdir = "run";
    // Empty entries fall back to the layout under workdir: raw/manifest.json,
    // cohort/manifest.json, folds.json beside the cohort manifest.
    std::string raw_manifest;
    std::string manifest;
    std::string folds;
};

struct OcclusionRunConfig {
    OcclusionConfig map;
    std::string target = "predicted"; // or RECURRENCE / RICE
    double opacity = 0.6;
    int slice = -1; // axial index; -1 = slice through the strongest |delta p|
};

struct RunConfig {
    std::uint64_t seed = 0;
    int workers = 1;
    PhantomConfig phantom;
    CohortCounts counts;
    PreprocessConfig preprocess;
    ResNet3DConfig model;
    TrainConfig train;
    AugmentConfig augment;
    OcclusionRunConfig occlusion;
    PathsConfig paths;

    // Copies the global seed into the module configs and validates them all.
    void finalize();

    std::filesystem::path raw_manifest_path() const;
    std::filesystem::path manifest_path() const;
    std::filesystem::path folds_path() const;
};

struct ConfigField {
    std::string key; // "section.name" or a top-level name
    std::string help;
    std::function<nlohmann::json(const RunConfig&)> get;
    std::function<void(RunConfig&, const nlohmann::json&)> set;
};

// Every configurable key, in documentation order.
const std::vector<ConfigField>& config_schema();

// Unknown keys and type mismatches raise ConfigError naming the key. An empty
// object yields the defaults.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig read_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& cfg);

// One line per key: "  section.key = <default json>  help".
std::string config_reference_text();

} // namespace ricenet
