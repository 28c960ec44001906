#pragma once

#include <filesystem>
#include <optional>

#include "ricenet/manifest.hpp"
#include "ricenet/volume.hpp"

namespace ricenet {

enum class DoseNormalization { Rescale, ZScore };

const char* dose_normalization_name(DoseNormalization d) noexcept;
DoseNormalization parse_dose_normalization(const std::string& s);

struct PreprocessConfig {
    double target_spacing_mm = 1.0;
    // Crop/pad target; when absent, the cohort grid (manifest crop_shape) at the
    // new spacing.
    std::optional<Index3> crop_shape;
    DoseNormalization dose_normalization = DoseNormalization::Rescale;
    double dose_max_gy = 80.0;
    // z-score MRI over the brain (post-op nonzero) and re-zero the background.
    bool mask_background = true;

    void validate() const;
};

// Single subject: fraction scaling, isotropic resampling, normalisation, crop.
struct PreprocessedSubject {
    Volume post_op;
    Volume event;
    Volume dose;
};
PreprocessedSubject preprocess_subject(const Volume& post_op, const Volume& event, const Volume& dose,
                                       int n_fractions, const PreprocessConfig& cfg, const Index3& crop_shape);

// Preprocesses every subject of a raw cohort into out_dir (manifest.json,
// subjects/, and a copy of folds.json when present). A manifest already at the
// preprocessed stage is returned untouched. Returns the manifest path in use.
std::filesystem::path preprocess_cohort(const std::filesystem::path& manifest_path,
                                        const std::filesystem::path& out_dir, const PreprocessConfig& cfg,
                                        int workers = 1);

} // namespace ricenet
