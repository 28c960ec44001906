#include "ricenet/config.hpp"

#include "ricenet/errors.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const Range& r)
{
    j = json::array({r.lo, r.hi});
}
void from_json(const json& j, Range& r)
{
    r.lo = j.at(0).get<double>();
    r.hi = j.at(1).get<double>();
}
void to_json(json& j, const NormalParams& p)
{
    j = json::array({p.mean, p.sd});
}
void from_json(const json& j, NormalParams& p)
{
    p.mean = j.at(0).get<double>();
    p.sd = j.at(1).get<double>();
}

namespace {

const char* kind(const json& j)
{
    if (j.is_boolean()) {
        return "boolean";
    }
    if (j.is_number_integer()) {
        return "integer";
    }
    if (j.is_number()) {
        return "number";
    }
    if (j.is_string()) {
        return "string";
    }
    if (j.is_array()) {
        return "array";
    }
    if (j.is_null()) {
        return "null";
    }
    return "object";
}

bool like(const json& value, const json& def)
{
    if (def.is_boolean()) {
        return value.is_boolean();
    }
    if (def.is_number_unsigned()) {
        return value.is_number_unsigned();
    }
    if (def.is_number_integer()) {
        return value.is_number_integer();
    }
    if (def.is_number()) {
        return value.is_number();
    }
    if (def.is_string()) {
        return value.is_string();
    }
    if (def.is_array()) {
        if (!value.is_array() || value.size() != def.size()) {
            return false;
        }
        for (std::size_t i = 0; i < def.size(); ++i) {
            if (!like(value[i], def[i])) {
                return false;
            }
        }
        return true;
    }
    return false;
}

std::string expectation(const json& def)
{
    if (def.is_array()) {
        return "array of " + std::to_string(def.size()) + " " + (def.empty() ? "values" : std::string(kind(def[0])) + "s");
    }
    if (def.is_number_unsigned()) {
        return "non-negative integer";
    }
    return kind(def);
}

template <typename T, typename Ref>
ConfigField field(std::string key, std::string help, Ref ref)
{
    ConfigField f;
    f.key = key;
    f.help = std::move(help);
    f.get = [ref](const RunConfig& c) { return json(ref(const_cast<RunConfig&>(c))); };
    f.set = [ref, key](RunConfig& c, const json& j) {
        const json def = json(ref(c));
        if (!like(j, def)) {
            throw ConfigError(key + ": expected " + expectation(def) + ", got " + j.dump());
        }
        ref(c) = j.get<T>();
    };
    return f;
}

template <typename E, typename Ref, typename Name, typename Parse>
ConfigField enum_field(std::string key, std::string help, Ref ref, Name name, Parse parse)
{
    ConfigField f;
    f.key = key;
    f.help = std::move(help);
    f.get = [ref, name](const RunConfig& c) { return json(name(ref(const_cast<RunConfig&>(c)))); };
    f.set = [ref, parse, key](RunConfig& c, const json& j) {
        if (!j.is_string()) {
            throw ConfigError(key + ": expected string, got " + j.dump());
        }
        ref(c) = parse(j.get<std::string>());
    };
    return f;
}

std::vector<ConfigField> build_schema()
{
    std::vector<ConfigField> s;
    s.push_back(field<std::uint64_t>("seed", "global seed (cohort, folds, training)",
                                     [](RunConfig& c) -> auto& { return c.seed; }));
    s.push_back(field<int>("workers", "worker threads", [](RunConfig& c) -> auto& { return c.workers; }));

    s.push_back(field<Index3>("phantom.grid_shape", "voxels per axis",
                              [](RunConfig& c) -> auto& { return c.phantom.grid_shape; }));
    s.push_back(field<double>("phantom.spacing_mm", "isotropic voxel size",
                              [](RunConfig& c) -> auto& { return c.phantom.spacing_mm; }));
    s.push_back(field<Vec3>("phantom.brain_semi_axes_vox", "brain ellipsoid semi-axes",
                            [](RunConfig& c) -> auto& { return c.phantom.brain_semi_axes_vox; }));
    s.push_back(field<Range>("phantom.cavity_radius_vox", "[lo, hi] uniform",
                             [](RunConfig& c) -> auto& { return c.phantom.cavity_radius_vox; }));
    s.push_back(field<Range>("phantom.lesion_radius_vox", "[lo, hi] uniform",
                             [](RunConfig& c) -> auto& { return c.phantom.lesion_radius_vox; }));
    s.push_back(field<Range>("phantom.dose_sigma_vox", "[lo, hi] uniform, dose fall-off width",
                             [](RunConfig& c) -> auto& { return c.phantom.dose_sigma_vox; }));
    s.push_back(field<Range>("phantom.dose_anisotropy", "[lo, hi] uniform per-axis sigma factor",
                             [](RunConfig& c) -> auto& { return c.phantom.dose_anisotropy; }));
    s.push_back(field<NormalParams>("phantom.dmax_gy_recurrence", "[mean, sd] Gy",
                                    [](RunConfig& c) -> auto& { return c.phantom.dmax_gy_recurrence; }));
    s.push_back(field<NormalParams>("phantom.dmax_gy_rice", "[mean, sd] Gy",
                                    [](RunConfig& c) -> auto& { return c.phantom.dmax_gy_rice; }));
    s.push_back(field<NormalParams>("phantom.rim_thickness_recurrence_vox", "[mean, sd]",
                                    [](RunConfig& c) -> auto& { return c.phantom.rim_thickness_recurrence_vox; }));
    s.push_back(field<NormalParams>("phantom.rim_thickness_rice_vox", "[mean, sd]",
                                    [](RunConfig& c) -> auto& { return c.phantom.rim_thickness_rice_vox; }));
    s.push_back(field<double>("phantom.lesion_distance_overlap", "0 = separable lesion placement, 1 = identical",
                              [](RunConfig& c) -> auto& { return c.phantom.lesion_distance_overlap; }));
    s.push_back(field<double>("phantom.noise_sigma", "MRI noise sd",
                              [](RunConfig& c) -> auto& { return c.phantom.noise_sigma; }));
    s.push_back(field<double>("phantom.texture_amplitude", "MRI texture amplitude",
                              [](RunConfig& c) -> auto& { return c.phantom.texture_amplitude; }));
    s.push_back(field<double>("phantom.recurrence_margin_vox", "recurrence annulus width beyond the cavity",
                              [](RunConfig& c) -> auto& { return c.phantom.recurrence_margin_vox; }));
    s.push_back(field<double>("phantom.single_fraction_probability", "share of single-fraction dose maps",
                              [](RunConfig& c) -> auto& { return c.phantom.single_fraction_probability; }));
    s.push_back(field<int>("phantom.fractions_per_course", "fraction count",
                           [](RunConfig& c) -> auto& { return c.phantom.fractions_per_course; }));
    s.push_back(field<int>("phantom.train_recurrence", "TRAIN subjects, recurrence",
                           [](RunConfig& c) -> auto& { return c.counts.train_recurrence; }));
    s.push_back(field<int>("phantom.train_rice", "TRAIN subjects, RICE",
                           [](RunConfig& c) -> auto& { return c.counts.train_rice; }));
    s.push_back(field<int>("phantom.test_recurrence", "TEST subjects, recurrence",
                           [](RunConfig& c) -> auto& { return c.counts.test_recurrence; }));
    s.push_back(field<int>("phantom.test_rice", "TEST subjects, RICE",
                           [](RunConfig& c) -> auto& { return c.counts.test_rice; }));

    s.push_back(field<double>("preprocess.target_spacing_mm", "isotropic resampling target",
                              [](RunConfig& c) -> auto& { return c.preprocess.target_spacing_mm; }));
    {
        ConfigField f;
        f.key = "preprocess.crop_shape";
        f.help = "crop/pad target [nx, ny, nz]; null = cohort grid at the new spacing";
        f.get = [](const RunConfig& c) { return c.preprocess.crop_shape ? json(*c.preprocess.crop_shape) : json(nullptr); };
        f.set = [](RunConfig& c, const json& j) {
            if (j.is_null()) {
                c.preprocess.crop_shape.reset();
                return;
            }
            if (!like(j, json::array({1, 1, 1}))) {
                throw ConfigError("preprocess.crop_shape: expected null or array of 3 integers, got " + j.dump());
            }
            c.preprocess.crop_shape = j.get<Index3>();
        };
        s.push_back(f);
    }
    s.push_back(enum_field<DoseNormalization>(
        "preprocess.dose_normalization", "rescale (divide by dose_max_gy) or zscore",
        [](RunConfig& c) -> auto& { return c.preprocess.dose_normalization; }, dose_normalization_name,
        parse_dose_normalization));
    s.push_back(field<double>("preprocess.dose_max_gy", "dose rescale divisor",
                              [](RunConfig& c) -> auto& { return c.preprocess.dose_max_gy; }));
    s.push_back(field<bool>("preprocess.mask_background", "z-score MRI inside the brain and keep background at 0",
                            [](RunConfig& c) -> auto& { return c.preprocess.mask_background; }));

    s.push_back(field<int>("model.base_width", "channels of the first stage",
                           [](RunConfig& c) -> auto& { return c.model.base_width; }));
    s.push_back(field<std::array<int, 4>>("model.blocks_per_stage", "basic blocks per stage",
                                          [](RunConfig& c) -> auto& { return c.model.blocks_per_stage; }));
    s.push_back(field<int>("model.stem_kernel", "stem convolution size (7 or 3)",
                           [](RunConfig& c) -> auto& { return c.model.stem_kernel; }));
    s.push_back(field<double>("model.bn_epsilon", "batch-norm epsilon",
                              [](RunConfig& c) -> auto& { return c.model.bn_epsilon; }));
    s.push_back(field<double>("model.bn_momentum", "running-statistics momentum",
                              [](RunConfig& c) -> auto& { return c.model.bn_momentum; }));

    s.push_back(field<int>("train.epochs", "epochs per fold", [](RunConfig& c) -> auto& { return c.train.epochs; }));
    s.push_back(field<double>("train.learning_rate", "Adam step size",
                              [](RunConfig& c) -> auto& { return c.train.learning_rate; }));
    s.push_back(field<int>("train.batch_size", "samples per step",
                           [](RunConfig& c) -> auto& { return c.train.batch_size; }));
    s.push_back(field<double>("train.beta1", "Adam beta1", [](RunConfig& c) -> auto& { return c.train.beta1; }));
    s.push_back(field<double>("train.beta2", "Adam beta2", [](RunConfig& c) -> auto& { return c.train.beta2; }));
    s.push_back(field<double>("train.epsilon", "Adam epsilon", [](RunConfig& c) -> auto& { return c.train.epsilon; }));
    s.push_back(field<int>("train.folds", "cross-validation folds (fixed at 5)",
                           [](RunConfig& c) -> auto& { return c.train.folds; }));
    s.push_back(field<std::string>("train.ensemble_checkpoint", "best or final checkpoint per fold for voting",
                                   [](RunConfig& c) -> auto& { return c.train.ensemble_checkpoint; }));

    s.push_back(field<bool>("augment.enabled", "master switch", [](RunConfig& c) -> auto& { return c.augment.enabled; }));
    s.push_back(field<double>("augment.elastic_probability", "",
                              [](RunConfig& c) -> auto& { return c.augment.elastic_probability; }));
    s.push_back(field<double>("augment.elastic_grid_spacing_vox", "control-grid spacing",
                              [](RunConfig& c) -> auto& { return c.augment.elastic_grid_spacing_vox; }));
    s.push_back(field<double>("augment.elastic_max_displacement_vox", "max control-point displacement",
                              [](RunConfig& c) -> auto& { return c.augment.elastic_max_displacement_vox; }));
    s.push_back(field<double>("augment.rotation_probability", "",
                              [](RunConfig& c) -> auto& { return c.augment.rotation_probability; }));
    s.push_back(field<double>("augment.rotation_max_deg", "per axis",
                              [](RunConfig& c) -> auto& { return c.augment.rotation_max_deg; }));
    s.push_back(field<double>("augment.scaling_probability", "",
                              [](RunConfig& c) -> auto& { return c.augment.scaling_probability; }));
    s.push_back(field<double>("augment.scaling_min", "", [](RunConfig& c) -> auto& { return c.augment.scaling_min; }));
    s.push_back(field<double>("augment.scaling_max", "", [](RunConfig& c) -> auto& { return c.augment.scaling_max; }));
    s.push_back(field<double>("augment.noise_probability", "",
                              [](RunConfig& c) -> auto& { return c.augment.noise_probability; }));
    s.push_back(field<double>("augment.noise_sigma_min", "",
                              [](RunConfig& c) -> auto& { return c.augment.noise_sigma_min; }));
    s.push_back(field<double>("augment.noise_sigma_max", "",
                              [](RunConfig& c) -> auto& { return c.augment.noise_sigma_max; }));
    s.push_back(field<double>("augment.brightness_probability", "",
                              [](RunConfig& c) -> auto& { return c.augment.brightness_probability; }));
    s.push_back(field<double>("augment.brightness_min", "",
                              [](RunConfig& c) -> auto& { return c.augment.brightness_min; }));
    s.push_back(field<double>("augment.brightness_max", "",
                              [](RunConfig& c) -> auto& { return c.augment.brightness_max; }));
    s.push_back(field<double>("augment.gamma_probability", "",
                              [](RunConfig& c) -> auto& { return c.augment.gamma_probability; }));
    s.push_back(field<double>("augment.gamma_min", "", [](RunConfig& c) -> auto& { return c.augment.gamma_min; }));
    s.push_back(field<double>("augment.gamma_max", "", [](RunConfig& c) -> auto& { return c.augment.gamma_max; }));

    s.push_back(field<int>("occlusion.cube_size_vox", "occluding cube edge",
                           [](RunConfig& c) -> auto& { return c.occlusion.map.cube_size_vox; }));
    s.push_back(field<int>("occlusion.stride_vox", "cube step",
                           [](RunConfig& c) -> auto& { return c.occlusion.map.stride_vox; }));
    s.push_back(field<double>("occlusion.fill_value", "value written into the cube",
                              [](RunConfig& c) -> auto& { return c.occlusion.map.fill_value; }));
    s.push_back(field<std::string>("occlusion.target", "predicted, RECURRENCE or RICE",
                                   [](RunConfig& c) -> auto& { return c.occlusion.target; }));
    s.push_back(enum_field<OcclusionAggregation>(
        "occlusion.aggregation", "average (overlapping cubes) or trilinear (cell centres)",
        [](RunConfig& c) -> auto& { return c.occlusion.map.aggregation; }, aggregation_name, parse_aggregation));
    {
        ConfigField f;
        f.key = "occlusion.single_channel";
        f.help = "diagnostic: occlude only this channel index; -1 = all channels together";
        f.get = [](const RunConfig& c) { return json(c.occlusion.map.single_channel.value_or(-1)); };
        f.set = [](RunConfig& c, const json& j) {
            if (!j.is_number_integer()) {
                throw ConfigError("occlusion.single_channel: expected integer, got " + j.dump());
            }
            const int v = j.get<int>();
            if (v < 0) {
                c.occlusion.map.single_channel.reset();
            } else {
                c.occlusion.map.single_channel = v;
            }
        };
        s.push_back(f);
    }
    s.push_back(field<double>("occlusion.opacity", "overlay opacity at max |delta p|",
                              [](RunConfig& c) -> auto& { return c.occlusion.opacity; }));
    s.push_back(field<int>("occlusion.slice", "axial slice; -1 = strongest response",
                           [](RunConfig& c) -> auto& { return c.occlusion.slice; }));

    s.push_back(field<std::string>("paths.workdir", "run directory",
                                   [](RunConfig& c) -> auto& { return c.paths.workdir; }));
    s.push_back(field<std::string>("paths.raw_manifest", "generated cohort; empty = <workdir>/raw/manifest.json",
                                   [](RunConfig& c) -> auto& { return c.paths.raw_manifest; }));
    s.push_back(field<std::string>("paths.manifest", "preprocessed cohort; empty = <workdir>/cohort/manifest.json",
                                   [](RunConfig& c) -> auto& { return c.paths.manifest; }));
    s.push_back(field<std::string>("paths.folds", "fold file; empty = folds.json beside the cohort manifest",
                                   [](RunConfig& c) -> auto& { return c.paths.folds; }));
    return s;
}

} // namespace

const std::vector<ConfigField>& config_schema()
{
    static const std::vector<ConfigField> schema = build_schema();
    return schema;
}

void RunConfig::finalize()
{
    if (workers < 1) {
        throw ConfigError("workers: must be >= 1");
    }
    phantom.seed = seed;
    train.seed = seed;
    if (occlusion.target == "predicted") {
        occlusion.map.target_class.reset();
    } else {
        try {
            occlusion.map.target_class = static_cast<int>(parse_label(occlusion.target));
        } catch (const Error&) {
            throw ConfigError("occlusion.target: expected predicted, RECURRENCE or RICE, got '" + occlusion.target + "'");
        }
    }
    if (!(occlusion.opacity >= 0.0 && occlusion.opacity <= 1.0)) {
        throw ConfigError("occlusion.opacity: must be in [0,1]");
    }
    if (counts.train_recurrence < 0 || counts.train_rice < 0 || counts.test_recurrence < 0 || counts.test_rice < 0) {
        throw ConfigError("phantom subject counts must be >= 0");
    }
    phantom.validate();
    preprocess.validate();
    augment.validate();
    train.validate();
    occlusion.map.validate();
    try {
        ResNet3DConfig probe = model;
        probe.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

fs::path RunConfig::raw_manifest_path() const
{
    return paths.raw_manifest.empty() ? fs::path(paths.workdir) / "raw" / "manifest.json" : fs::path(paths.raw_manifest);
}

fs::path RunConfig::manifest_path() const
{
    return paths.manifest.empty() ? fs::path(paths.workdir) / "cohort" / "manifest.json" : fs::path(paths.manifest);
}

fs::path RunConfig::folds_path() const
{
    return paths.folds.empty() ? manifest_path().parent_path() / "folds.json" : fs::path(paths.folds);
}

RunConfig config_from_json(const json& j)
{
    if (!j.is_object()) {
        throw ConfigError("config: top level must be an object");
    }
    RunConfig cfg;
    const auto& schema = config_schema();
    auto find = [&](const std::string& key) -> const ConfigField* {
        for (const auto& f : schema) {
            if (f.key == key) {
                return &f;
            }
        }
        return nullptr;
    };
    for (const auto& [name, value] : j.items()) {
        if (value.is_object()) {
            for (const auto& [sub, v] : value.items()) {
                const std::string key = name + "." + sub;
                const auto* f = find(key);
                if (!f) {
                    throw ConfigError(key + ": unknown configuration key");
                }
                f->set(cfg, v);
            }
        } else {
            const auto* f = find(name);
            if (!f || name.find('.') != std::string::npos) {
                throw ConfigError(name + ": unknown configuration key");
            }
            f->set(cfg, value);
        }
    }
    cfg.finalize();
    return cfg;
}

RunConfig read_config(const fs::path& path)
{
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return config_from_json(j);
}

json config_to_json(const RunConfig& cfg)
{
    json j = json::object();
    for (const auto& f : config_schema()) {
        const auto dot = f.key.find('.');
        if (dot == std::string::npos) {
            j[f.key] = f.get(cfg);
        } else {
            j[f.key.substr(0, dot)][f.key.substr(dot + 1)] = f.get(cfg);
        }
    }
    return j;
}

std::string config_reference_text()
{
    const RunConfig def;
    std::string s;
    std::size_t width = 0;
    for (const auto& f : config_schema()) {
        width = std::max(width, f.key.size());
    }
    for (const auto& f : config_schema()) {
        std::string line = "  " + f.key + std::string(width - f.key.size(), ' ') + " = " + f.get(def).dump();
        if (!f.help.empty()) {
            line += "  # " + f.help;
        }
        s += line + "\n";
    }
    return s;
}

} // namespace ricenet
