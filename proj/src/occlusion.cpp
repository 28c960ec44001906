#include "ricenet/occlusion.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ricenet/errors.hpp"
#include "ricenet/parallel.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

namespace fs = std::filesystem;

void OcclusionConfig::validate() const
{
    if (cube_size_vox < 1) {
        throw ConfigError("occlusion.cube_size_vox must be >= 1");
    }
    if (stride_vox < 1 || stride_vox > cube_size_vox) {
        throw ConfigError("occlusion.stride_vox must be in [1, cube_size_vox]");
    }
    if (!std::isfinite(fill_value)) {
        throw ConfigError("occlusion.fill_value must be finite");
    }
    if (target_class && *target_class != 0 && *target_class != 1) {
        throw ConfigError("occlusion.target_class must be 0 or 1");
    }
}

const char* aggregation_name(OcclusionAggregation a) noexcept
{
    return a == OcclusionAggregation::Average ? "average" : "trilinear";
}

OcclusionAggregation parse_aggregation(const std::string& s)
{
    if (s == "average") {
        return OcclusionAggregation::Average;
    }
    if (s == "trilinear") {
        return OcclusionAggregation::Trilinear;
    }
    throw ConfigError("occlusion.aggregation: expected 'average' or 'trilinear', got '" + s + "'");
}

Index3 occlusion_cells(const Index3& shape, int cube, int stride)
{
    Index3 n{};
    for (int a = 0; a < 3; ++a) {
        if (cube > shape[a]) {
            throw PreconditionError("occlusion: cube of " + std::to_string(cube) + " voxels exceeds volume dimension " +
                                    std::to_string(shape[a]));
        }
        n[a] = (shape[a] - cube) / stride + 1;
    }
    return n;
}

namespace {

double class_prob(const ResNet3DConfig& cfg, const ModelParams<float>& params, const Sample& s, int cls)
{
    const auto prob = predict_prob(forward(cfg, params, make_batch<float>(s), Mode::Eval));
    return prob.data[static_cast<std::size_t>(cls)];
}

// Cells covering coordinate x along one axis; the nearest cell when none does.
std::pair<int, int> covering(int x, int n, int cube, int stride)
{
    int lo = x - cube + 1 <= 0 ? 0 : (x - cube + 1 + stride - 1) / stride;
    int hi = std::min(x / stride, n - 1);
    if (lo > hi) {
        lo = hi = std::clamp(lo, 0, n - 1);
    }
    return {lo, hi};
}

} // namespace

OcclusionMap occlusion_map(const ResNet3DConfig& cfg, const ModelParams<float>& params, const Sample& sample,
                           const OcclusionConfig& occ, int workers)
{
    occ.validate();
    if (sample.channels != cfg.in_channels) {
        throw ShapeMismatchError("occlusion_map: sample has " + std::to_string(sample.channels) +
                                 " channels, model expects " + std::to_string(cfg.in_channels));
    }
    if (occ.single_channel && (*occ.single_channel < 0 || *occ.single_channel >= sample.channels)) {
        throw PreconditionError("occlusion_map: single_channel out of range");
    }
    const auto& sh = sample.shape;
    OcclusionMap out{Volume::filled(sh, sample.spacing_mm, sample.origin_mm), {}, {}, 0.0, 0, occ, {}, {}};
    out.cells = occlusion_cells(sh, occ.cube_size_vox, occ.stride_vox);

    const auto base_prob = predict_prob(forward(cfg, params, make_batch<float>(sample), Mode::Eval));
    out.target_class = occ.target_class.value_or(base_prob.data[1] > 0.5 ? 1 : 0);
    out.baseline_prob = base_prob.data[static_cast<std::size_t>(out.target_class)];

    const std::size_t ncell = voxel_count(out.cells);
    out.cell_delta.assign(ncell, 0.0);
    const auto fill = static_cast<float>(occ.fill_value);
    const std::size_t nvox = sample.voxels();
    parallel_for(ncell, workers, [&](std::size_t c) {
        const int cx = static_cast<int>(c % out.cells[0]);
        const int cy = static_cast<int>((c / out.cells[0]) % out.cells[1]);
        const int cz = static_cast<int>(c / (static_cast<std::size_t>(out.cells[0]) * out.cells[1]));
        Sample s = sample;
        for (int ch = 0; ch < s.channels; ++ch) {
            if (occ.single_channel && *occ.single_channel != ch) {
                continue;
            }
            float* d = s.data.data() + ch * nvox;
            for (int z = cz * occ.stride_vox; z < cz * occ.stride_vox + occ.cube_size_vox; ++z) {
                for (int y = cy * occ.stride_vox; y < cy * occ.stride_vox + occ.cube_size_vox; ++y) {
                    for (int x = cx * occ.stride_vox; x < cx * occ.stride_vox + occ.cube_size_vox; ++x) {
                        d[static_cast<std::size_t>(x) + static_cast<std::size_t>(sh[0]) *
                                                            (y + static_cast<std::size_t>(sh[1]) * z)] = fill;
                    }
                }
            }
        }
        if (s.data == sample.data) {
            out.cell_delta[c] = 0.0;
            return;
        }
        out.cell_delta[c] = out.baseline_prob - class_prob(cfg, params, s, out.target_class);
    });

    auto cell = [&](int i, int j, int k) {
        return out.cell_delta[static_cast<std::size_t>(i) +
                              static_cast<std::size_t>(out.cells[0]) * (j + static_cast<std::size_t>(out.cells[1]) * k)];
    };
    auto vals = out.map.values();
    std::size_t o = 0;
    for (int z = 0; z < sh[2]; ++z) {
        for (int y = 0; y < sh[1]; ++y) {
            for (int x = 0; x < sh[0]; ++x, ++o) {
                double v = 0.0;
                if (occ.aggregation == OcclusionAggregation::Average) {
                    const auto [x0, x1] = covering(x, out.cells[0], occ.cube_size_vox, occ.stride_vox);
                    const auto [y0, y1] = covering(y, out.cells[1], occ.cube_size_vox, occ.stride_vox);
                    const auto [z0, z1] = covering(z, out.cells[2], occ.cube_size_vox, occ.stride_vox);
                    double sum = 0.0;
                    for (int k = z0; k <= z1; ++k) {
                        for (int j = y0; j <= y1; ++j) {
                            for (int i = x0; i <= x1; ++i) {
                                sum += cell(i, j, k);
                            }
                        }
                    }
                    v = sum / static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1) * (z1 - z0 + 1));
                } else {
                    const std::array<int, 3> p{x, y, z};
                    std::array<int, 3> i0{};
                    std::array<double, 3> f{};
                    for (int a = 0; a < 3; ++a) {
                        const double g = std::clamp((p[a] - (occ.cube_size_vox - 1) / 2.0) / occ.stride_vox, 0.0,
                                                    static_cast<double>(out.cells[a] - 1));
                        i0[a] = std::min(static_cast<int>(g), std::max(out.cells[a] - 2, 0));
                        f[a] = g - i0[a];
                    }
                    for (int dz = 0; dz < 2; ++dz) {
                        for (int dy = 0; dy < 2; ++dy) {
                            for (int dx = 0; dx < 2; ++dx) {
                                const double w = (dx ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dz ? f[2] : 1 - f[2]);
                                if (w == 0.0) {
                                    continue;
                                }
                                v += w * cell(std::min(i0[0] + dx, out.cells[0] - 1),
                                              std::min(i0[1] + dy, out.cells[1] - 1),
                                              std::min(i0[2] + dz, out.cells[2] - 1));
                            }
                        }
                    }
                }
                vals[o] = static_cast<float>(v);
            }
        }
    }
    return out;
}

void write_occlusion_map(const OcclusionMap& m, const fs::path& path)
{
    write_volume(m.map, path);
    nlohmann::json j;
    j["subject_id"] = m.subject_id;
    j["model_id"] = m.model_id;
    j["baseline_prob"] = m.baseline_prob;
    j["target_class"] = m.target_class;
    j["cells"] = m.cells;
    j["cube_size_vox"] = m.config.cube_size_vox;
    j["stride_vox"] = m.config.stride_vox;
    j["fill_value"] = m.config.fill_value;
    j["aggregation"] = aggregation_name(m.config.aggregation);
    j["mode"] = m.config.single_channel ? "single_channel" : "synchronous";
    if (m.config.single_channel) {
        j["single_channel"] = *m.config.single_channel;
    }
    fs::path meta = volume_header_path(path);
    meta.replace_extension(".meta.json");
    write_text_file(meta, j.dump(2) + "\n");
}

OverlayLayer overlay_layer(const OcclusionMap& m, int axial_index, double opacity)
{
    const auto& sh = m.map.shape();
    if (axial_index < 0 || axial_index >= sh[2]) {
        throw PreconditionError("overlay: axial index " + std::to_string(axial_index) + " outside [0, " +
                                std::to_string(sh[2]) + ")");
    }
    double max_abs = 0.0;
    for (float v : m.map.values()) {
        max_abs = std::max(max_abs, static_cast<double>(std::fabs(v)));
    }
    OverlayLayer layer;
    layer.width = sh[0];
    layer.height = sh[1];
    for (int y = 0; y < sh[1]; ++y) {
        for (int x = 0; x < sh[0]; ++x) {
            const double t = max_abs > 0.0 ? std::fabs(m.map.at(x, y, axial_index)) / max_abs : 0.0;
            layer.color.push_back({std::clamp(3.0 * t, 0.0, 1.0), std::clamp(3.0 * t - 1.0, 0.0, 1.0),
                                   std::clamp(3.0 * t - 2.0, 0.0, 1.0)});
            layer.alpha.push_back(opacity * t);
        }
    }
    return layer;
}

RgbImage render_grayscale(const Volume& underlay, int axial_index)
{
    const auto& sh = underlay.shape();
    if (axial_index < 0 || axial_index >= sh[2]) {
        throw PreconditionError("overlay: axial index " + std::to_string(axial_index) + " outside [0, " +
                                std::to_string(sh[2]) + ")");
    }
    const auto [mn_it, mx_it] = std::minmax_element(underlay.values().begin(), underlay.values().end());
    const double mn = *mn_it;
    const double range = *mx_it - mn;
    RgbImage img{sh[0], sh[1], {}};
    img.rgb.reserve(static_cast<std::size_t>(sh[0]) * sh[1] * 3);
    for (int y = 0; y < sh[1]; ++y) {
        for (int x = 0; x < sh[0]; ++x) {
            const double g = range > 0.0 ? (underlay.at(x, y, axial_index) - mn) / range : 0.0;
            const auto b = static_cast<std::uint8_t>(std::lround(255.0 * g));
            img.rgb.insert(img.rgb.end(), {b, b, b});
        }
    }
    return img;
}

RgbImage render_overlay(const OcclusionMap& m, const Volume& underlay, int axial_index, double opacity)
{
    if (underlay.shape() != m.map.shape()) {
        throw ShapeMismatchError("overlay: underlay and map shapes differ");
    }
    RgbImage img = render_grayscale(underlay, axial_index);
    const OverlayLayer layer = overlay_layer(m, axial_index, opacity);
    for (std::size_t p = 0; p < layer.alpha.size(); ++p) {
        const double a = layer.alpha[p];
        if (a == 0.0) {
            continue;
        }
        for (int c = 0; c < 3; ++c) {
            const double base = img.rgb[p * 3 + c];
            img.rgb[p * 3 + c] = static_cast<std::uint8_t>(std::lround((1 - a) * base + a * 255.0 * layer.color[p][c]));
        }
    }
    return img;
}

void write_ppm(const RgbImage& img, const fs::path& path)
{
    const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), img.rgb.begin(), img.rgb.end());
    write_file_bytes(path, bytes);
}

void overlay_export(const OcclusionMap& m, const Volume& underlay, int axial_index, const fs::path& path,
                    double opacity)
{
    write_ppm(render_overlay(m, underlay, axial_index, opacity), path);
}

} // namespace ricenet
