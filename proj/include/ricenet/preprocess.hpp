#pragma once

#include <map>
#include <span>
#include <vector>

#include "ricenet/modality.hpp"
#include "ricenet/volume.hpp"

namespace ricenet {

// Channel-stacked network input, C x nx x ny x nz, each channel x-fastest and
// channels contiguous one after another.
struct Sample {
    int channels = 0;
    Index3 shape{};
    Vec3 spacing_mm{1.0, 1.0, 1.0};
    Vec3 origin_mm{};
    std::vector<float> data;

    std::size_t voxels() const noexcept { return voxel_count(shape); }
    std::span<const float> channel(int c) const { return std::span(data).subspan(c * voxels(), voxels()); }
    std::span<float> channel(int c) { return std::span(data).subspan(c * voxels(), voxels()); }
    Volume channel_volume(int c) const;
};

// Output spacing (t,t,t); per axis size round(n * s / t), at least 1. The output
// grid covers the same physical extent; samples outside the input are clamped
// to the boundary voxel.
Volume resample_isotropic(const Volume& vol, double target_spacing_mm);

// (v - mean) / std with population statistics over mask-nonzero voxels (or all
// voxels without a mask). The transform is applied to every voxel.
Volume zscore(const Volume& vol, const Volume* mask = nullptr);

// Centered crop or zero-pad to `target_shape`; origin moves so retained
// voxels keep their world coordinates.
Volume center_crop_pad(const Volume& vol, const Index3& target_shape);

// Total dose from a single-fraction map.
Volume scale_fraction_dose(const Volume& vol, int n_fractions);

// Linear dose normalisation v / dose_max_gy.
Volume rescale_dose(const Volume& vol, double dose_max_gy);

// Zero every voxel where mask is zero.
Volume apply_mask(const Volume& vol, const Volume& mask);

// Volumes keyed by modality; the combo picks channels in canonical order.
using SubjectVolumes = std::map<Modality, Volume>;
Sample stack_channels(const SubjectVolumes& volumes, const ModalityCombo& combo);

} // namespace ricenet
