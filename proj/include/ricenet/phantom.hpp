#pragma once

#include <cstdint>
#include <filesystem>

#include "ricenet/manifest.hpp"
#include "ricenet/rng.hpp"
#include "ricenet/volume.hpp"

namespace ricenet {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    double draw(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
};

struct NormalParams {
    double mean = 0.0;
    double sd = 0.0;
};

// Synthetic co-registered cohort model. Class signal is routed per modality:
// dose carries it through the D_max shift, post-op through rim thickness of the
// resection cavity, event only through lesion placement (weak, tunable).
struct PhantomConfig {
    Index3 grid_shape{64, 64, 64};
    double spacing_mm = 1.0;
    Vec3 brain_semi_axes_vox{26.0, 28.0, 24.0};
    Range cavity_radius_vox{4.0, 6.0};
    Range lesion_radius_vox{2.5, 4.0};
    Range dose_sigma_vox{13.0, 15.0};
    Range dose_anisotropy{0.9, 1.15};
    NormalParams dmax_gy_recurrence{58.0, 4.0};
    NormalParams dmax_gy_rice{66.0, 4.0};
    NormalParams rim_thickness_recurrence_vox{2.6, 0.6};
    NormalParams rim_thickness_rice_vox{1.7, 0.6};
    double lesion_distance_overlap = 0.5;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;

    // Knobs beyond the core generative description.
    double texture_amplitude = 0.08;
    double recurrence_margin_vox = 3.0;   // width of the cavity-margin annulus
    double single_fraction_probability = 0.25;
    int fractions_per_course = 30;

    void validate() const;
};

struct SubjectTruth {
    Index3 cavity_center_vox{};
    Index3 lesion_center_vox{};
    Index3 isocenter_vox{};
    double dmax_gy = 0.0;
    double dose_at_lesion_gy = 0.0;
    Label label = Label::Recurrence;

    double cavity_radius_vox = 0.0;
    double rim_thickness_vox = 0.0;       // post-op rim
    double event_rim_thickness_vox = 0.0; // label-independent
    double lesion_radius_vox = 0.0;
    double dose_sigma_vox = 0.0;
    Vec3 dose_anisotropy{};
    bool lesion_from_other_class = false;
};

struct PhantomSubject {
    Volume post_op;
    Volume event;
    Volume dose; // total dose in Gy, noise-free
    SubjectTruth truth;
};

PhantomSubject generate_subject(const PhantomConfig& cfg, Rng& rng, Label label);

struct CohortCounts {
    int train_recurrence = 48;
    int train_rice = 32;
    int test_recurrence = 7;
    int test_rice = 5;
};

// Writes subjects/<id>/{post_op,event,dose}.{json,raw} plus truth.json, the
// manifest and (when TRAIN subjects exist) folds.json. Subject i draws from
// Rng::derive({cfg.seed, i}); output does not depend on `workers`.
CohortManifest generate_cohort(const PhantomConfig& cfg, const CohortCounts& counts,
                               const std::filesystem::path& out_dir, int workers = 1);

std::string truth_to_json_text(const SubjectTruth& truth);
SubjectTruth read_truth(const std::filesystem::path& path);

} // namespace ricenet
