#pragma once

#include <array>
#include <optional>
#include <vector>

#include "ricenet/modality.hpp"
#include "ricenet/preprocess.hpp"
#include "ricenet/rng.hpp"

namespace ricenet {

struct AugmentConfig {
    bool enabled = true;

    double elastic_probability = 0.2;
    double elastic_grid_spacing_vox = 8.0;
    double elastic_max_displacement_vox = 4.0;

    double rotation_probability = 0.2;
    double rotation_max_deg = 15.0;

    double scaling_probability = 0.2;
    double scaling_min = 0.9;
    double scaling_max = 1.1;

    double noise_probability = 0.2;
    double noise_sigma_min = 0.0;
    double noise_sigma_max = 0.1;

    double brightness_probability = 0.2;
    double brightness_min = -0.1;
    double brightness_max = 0.1;

    double gamma_probability = 0.2;
    double gamma_min = 0.7;
    double gamma_max = 1.5;

    void validate() const;
};

// Output voxel p samples the input at centre + linear * (p - centre) + elastic(p).
struct SpatialTransform {
    std::array<std::array<double, 3>, 3> linear{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    // Control-point displacements on a regular grid (x-fastest, 3 comps each).
    double grid_spacing = 0.0;
    Index3 grid_nodes{};
    std::vector<Vec3> node_displacement;

    bool has_elastic() const noexcept { return !node_displacement.empty(); }
    Vec3 source_position(const Index3& shape, double x, double y, double z) const;
};

// Resamples every channel through the same transform (trilinear, zero outside).
Sample apply_spatial(const Sample& sample, const SpatialTransform& t);

// Random spatial transform composed of rotation, isotropic scaling and elastic
// deformation, each included with its configured probability; empty when none
// was drawn.
std::optional<SpatialTransform> draw_spatial(const Index3& shape, Rng& rng, const AugmentConfig& cfg);

// Spatial transforms move all channels together; intensity transforms (gamma,
// brightness, noise) touch MRI channels only, never the dose channel.
Sample augment_sample(const Sample& sample, const std::vector<Modality>& channel_modalities, Rng& rng,
                      const AugmentConfig& cfg);

} // namespace ricenet
