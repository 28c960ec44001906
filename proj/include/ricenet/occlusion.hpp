#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ricenet/model_params.hpp"
#include "ricenet/preprocess.hpp"
#include "ricenet/resnet3d.hpp"

namespace ricenet {

enum class OcclusionAggregation { Average, Trilinear };

struct OcclusionConfig {
    int cube_size_vox = 8;
    int stride_vox = 4;
    double fill_value = 0.0;
    // Class whose probability is tracked; the baseline prediction when absent.
    std::optional<int> target_class;
    OcclusionAggregation aggregation = OcclusionAggregation::Average;
    // Diagnostic extension: occlude only this channel instead of all of them.
    std::optional<int> single_channel;

    void validate() const;
};

const char* aggregation_name(OcclusionAggregation a) noexcept;
OcclusionAggregation parse_aggregation(const std::string& s);

struct OcclusionMap {
    Volume map; // delta p = p0 - p_occluded, on the sample grid
    Index3 cells{};
    std::vector<double> cell_delta; // coarse grid, x-fastest
    double baseline_prob = 0.0;
    int target_class = 0;
    OcclusionConfig config;
    std::string subject_id;
    std::string model_id;
};

// Coarse cells per axis: floor((dim - cube) / stride) + 1.
Index3 occlusion_cells(const Index3& shape, int cube, int stride);

// One eval-mode forward per cell, each on its own; cells are spread over
// `workers` threads and the result does not depend on the worker count.
OcclusionMap occlusion_map(const ResNet3DConfig& cfg, const ModelParams<float>& params, const Sample& sample,
                           const OcclusionConfig& occ, int workers = 1);

void write_occlusion_map(const OcclusionMap& m, const std::filesystem::path& path);

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Colour layer of |delta p| on axial slice z: rgb plus per-pixel alpha in [0,1]
// (opacity * |dp| / max|dp| over the whole map). Depends on the map only.
struct OverlayLayer {
    int width = 0;
    int height = 0;
    std::vector<std::array<double, 3>> color;
    std::vector<double> alpha;

    friend bool operator==(const OverlayLayer&, const OverlayLayer&) = default;
};
OverlayLayer overlay_layer(const OcclusionMap& m, int axial_index, double opacity);

// Grayscale (volume min..max -> 0..255) slice with the overlay layer blended on.
RgbImage render_overlay(const OcclusionMap& m, const Volume& underlay, int axial_index, double opacity = 0.6);
RgbImage render_grayscale(const Volume& underlay, int axial_index);

// Binary PPM (P6).
void write_ppm(const RgbImage& img, const std::filesystem::path& path);
void overlay_export(const OcclusionMap& m, const Volume& underlay, int axial_index, const std::filesystem::path& path,
                    double opacity = 0.6);

} // namespace ricenet
