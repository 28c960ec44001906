#include "ricenet/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "ricenet/errors.hpp"
#include "ricenet/parallel.hpp"
#include "ricenet/preprocess.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

namespace fs = std::filesystem;

const char* dose_normalization_name(DoseNormalization d) noexcept
{
    return d == DoseNormalization::Rescale ? "rescale" : "zscore";
}

DoseNormalization parse_dose_normalization(const std::string& s)
{
    if (s == "rescale") {
        return DoseNormalization::Rescale;
    }
    if (s == "zscore") {
        return DoseNormalization::ZScore;
    }
    throw ConfigError("preprocess.dose_normalization: expected 'rescale' or 'zscore', got '" + s + "'");
}

void PreprocessConfig::validate() const
{
    if (!(target_spacing_mm > 0.0) || !std::isfinite(target_spacing_mm)) {
        throw ConfigError("preprocess.target_spacing_mm must be positive");
    }
    if (!(dose_max_gy > 0.0) || !std::isfinite(dose_max_gy)) {
        throw ConfigError("preprocess.dose_max_gy must be positive");
    }
    if (crop_shape) {
        for (int n : *crop_shape) {
            if (n < 1) {
                throw ConfigError("preprocess.crop_shape entries must be positive");
            }
        }
    }
}

PreprocessedSubject preprocess_subject(const Volume& post_op, const Volume& event, const Volume& dose,
                                       int n_fractions, const PreprocessConfig& cfg, const Index3& crop_shape)
{
    const Volume total = scale_fraction_dose(dose, n_fractions);
    const Volume p = resample_isotropic(post_op, cfg.target_spacing_mm);
    const Volume e = resample_isotropic(event, cfg.target_spacing_mm);
    const Volume d = resample_isotropic(total, cfg.target_spacing_mm);
    if (!p.same_grid(e) || !p.same_grid(d)) {
        throw ShapeMismatchError("preprocess: channels are not co-registered");
    }

    Volume mask = p;
    for (auto& v : mask.values()) {
        v = v != 0.0F ? 1.0F : 0.0F;
    }
    const Volume* m = cfg.mask_background ? &mask : nullptr;

    auto norm_mri = [&](const Volume& v) {
        Volume z = zscore(v, m);
        return m ? apply_mask(z, mask) : z;
    };
    Volume dn = cfg.dose_normalization == DoseNormalization::Rescale ? rescale_dose(d, cfg.dose_max_gy) : zscore(d);

    PreprocessedSubject out{center_crop_pad(norm_mri(p), crop_shape), center_crop_pad(norm_mri(e), crop_shape),
                            center_crop_pad(dn, crop_shape)};
    return out;
}

fs::path preprocess_cohort(const fs::path& manifest_path, const fs::path& out_dir, const PreprocessConfig& cfg,
                           int workers)
{
    cfg.validate();
    const CohortManifest in = read_manifest(manifest_path);
    if (in.stage == CohortStage::Preprocessed) {
        return manifest_path;
    }
    CohortManifest out = in;
    out.stage = CohortStage::Preprocessed;
    out.target_spacing_mm = cfg.target_spacing_mm;
    if (cfg.crop_shape) {
        out.crop_shape = *cfg.crop_shape;
    } else {
        for (int a = 0; a < 3; ++a) {
            const double n = std::round(in.crop_shape[a] * in.target_spacing_mm / cfg.target_spacing_mm);
            out.crop_shape[a] = std::max(1, static_cast<int>(n));
        }
    }

    parallel_for(in.subjects.size(), workers, [&](std::size_t i) {
        const auto& rec = in.subjects[i];
        const auto res = preprocess_subject(read_volume(channel_path(manifest_path, rec, Modality::PostOp)),
                                            read_volume(channel_path(manifest_path, rec, Modality::Event)),
                                            read_volume(channel_path(manifest_path, rec, Modality::Dose)),
                                            rec.n_fractions, cfg, out.crop_shape);
        auto& orec = out.subjects[i];
        const std::array<std::pair<Modality, const Volume*>, 3> chans{
            {{Modality::PostOp, &res.post_op}, {Modality::Event, &res.event}, {Modality::Dose, &res.dose}}};
        for (const auto& [mod, vol] : chans) {
            const std::string rel = "subjects/" + rec.subject_id + "/" + modality_key(mod) + ".json";
            write_volume(*vol, out_dir / rel);
            orec.channel_paths[mod] = rel;
        }
    });

    const fs::path folds_src = manifest_path.parent_path() / "folds.json";
    if (fs::exists(folds_src)) {
        write_text_file(out_dir / "folds.json", read_text_file(folds_src));
    }
    const fs::path out_manifest = out_dir / "manifest.json";
    write_manifest(out, out_manifest);
    return out_manifest;
}

} // namespace ricenet
