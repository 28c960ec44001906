#include "ricenet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ricenet/errors.hpp"

namespace ricenet {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 matmul(const Mat3& a, const Mat3& b)
{
    Mat3 r{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                r[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    return r;
}

Mat3 axis_rotation(int axis, double rad)
{
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const int a = (axis + 1) % 3;
    const int b = (axis + 2) % 3;
    Mat3 r{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    r[a][a] = c;
    r[a][b] = -s;
    r[b][a] = s;
    r[b][b] = c;
    return r;
}

void check_prob(double p, const char* name)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError(std::string("augment.") + name + " must be in [0,1]");
    }
}

void check_order(double lo, double hi, const char* name)
{
    if (!(lo <= hi)) {
        throw ConfigError(std::string("augment.") + name + ": range must be ordered (min <= max)");
    }
}

} // namespace

void AugmentConfig::validate() const
{
    check_prob(elastic_probability, "elastic_probability");
    check_prob(rotation_probability, "rotation_probability");
    check_prob(scaling_probability, "scaling_probability");
    check_prob(noise_probability, "noise_probability");
    check_prob(brightness_probability, "brightness_probability");
    check_prob(gamma_probability, "gamma_probability");
    check_order(scaling_min, scaling_max, "scaling");
    check_order(noise_sigma_min, noise_sigma_max, "noise_sigma");
    check_order(brightness_min, brightness_max, "brightness");
    check_order(gamma_min, gamma_max, "gamma");
    if (!(elastic_grid_spacing_vox > 0.0) || !(elastic_max_displacement_vox >= 0.0) || !(rotation_max_deg >= 0.0) ||
        !(scaling_min > 0.0) || !(noise_sigma_min >= 0.0) || !(gamma_min > 0.0)) {
        throw ConfigError("augment: magnitudes out of range");
    }
}

Vec3 SpatialTransform::source_position(const Index3& shape, double x, double y, double z) const
{
    const Vec3 c{(shape[0] - 1) / 2.0, (shape[1] - 1) / 2.0, (shape[2] - 1) / 2.0};
    const Vec3 d{x - c[0], y - c[1], z - c[2]};
    Vec3 q{};
    for (int i = 0; i < 3; ++i) {
        q[i] = c[i] + linear[i][0] * d[0] + linear[i][1] * d[1] + linear[i][2] * d[2];
    }
    if (has_elastic()) {
        const Vec3 p{x, y, z};
        std::array<int, 3> i0{};
        std::array<double, 3> f{};
        for (int a = 0; a < 3; ++a) {
            const double g = std::clamp(p[a] / grid_spacing, 0.0, static_cast<double>(grid_nodes[a] - 1));
            i0[a] = std::min(static_cast<int>(g), grid_nodes[a] - 2 < 0 ? 0 : grid_nodes[a] - 2);
            f[a] = g - i0[a];
        }
        for (int cz = 0; cz < 2; ++cz) {
            for (int cy = 0; cy < 2; ++cy) {
                for (int cx = 0; cx < 2; ++cx) {
                    const int nx = std::min(i0[0] + cx, grid_nodes[0] - 1);
                    const int ny = std::min(i0[1] + cy, grid_nodes[1] - 1);
                    const int nz = std::min(i0[2] + cz, grid_nodes[2] - 1);
                    const double w = (cx ? f[0] : 1 - f[0]) * (cy ? f[1] : 1 - f[1]) * (cz ? f[2] : 1 - f[2]);
                    const auto& disp = node_displacement[static_cast<std::size_t>(nx) +
                                                         static_cast<std::size_t>(grid_nodes[0]) *
                                                             (ny + static_cast<std::size_t>(grid_nodes[1]) * nz)];
                    for (int a = 0; a < 3; ++a) {
                        q[a] += w * disp[a];
                    }
                }
            }
        }
    }
    return q;
}

Sample apply_spatial(const Sample& sample, const SpatialTransform& t)
{
    Sample out = sample;
    const auto& sh = sample.shape;
    const std::size_t nvox = sample.voxels();
    auto in_range = [&](int i, int a) { return i >= 0 && i < sh[a]; };
    std::size_t o = 0;
    for (int z = 0; z < sh[2]; ++z) {
        for (int y = 0; y < sh[1]; ++y) {
            for (int x = 0; x < sh[0]; ++x, ++o) {
                const Vec3 q = t.source_position(sh, x, y, z);
                std::array<int, 3> i0{};
                std::array<double, 3> f{};
                for (int a = 0; a < 3; ++a) {
                    i0[a] = static_cast<int>(std::floor(q[a]));
                    f[a] = q[a] - i0[a];
                }
                for (int c = 0; c < sample.channels; ++c) {
                    const float* src = sample.data.data() + c * nvox;
                    double acc = 0.0;
                    for (int cz = 0; cz < 2; ++cz) {
                        const int iz = i0[2] + cz;
                        const double wz = cz ? f[2] : 1 - f[2];
                        if (wz == 0.0 || !in_range(iz, 2)) {
                            continue;
                        }
                        for (int cy = 0; cy < 2; ++cy) {
                            const int iy = i0[1] + cy;
                            const double wy = cy ? f[1] : 1 - f[1];
                            if (wy == 0.0 || !in_range(iy, 1)) {
                                continue;
                            }
                            for (int cx = 0; cx < 2; ++cx) {
                                const int ix = i0[0] + cx;
                                const double wx = cx ? f[0] : 1 - f[0];
                                if (wx == 0.0 || !in_range(ix, 0)) {
                                    continue;
                                }
                                acc += wz * wy * wx *
                                       src[static_cast<std::size_t>(ix) +
                                           static_cast<std::size_t>(sh[0]) * (iy + static_cast<std::size_t>(sh[1]) * iz)];
                            }
                        }
                    }
                    out.data[c * nvox + o] = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

std::optional<SpatialTransform> draw_spatial(const Index3& shape, Rng& rng, const AugmentConfig& cfg)
{
    SpatialTransform t;
    bool any = false;
    if (rng.bernoulli(cfg.rotation_probability)) {
        Mat3 r{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
        for (int axis = 0; axis < 3; ++axis) {
            const double deg = rng.uniform(-cfg.rotation_max_deg, cfg.rotation_max_deg);
            r = matmul(r, axis_rotation(axis, deg * std::numbers::pi / 180.0));
        }
        t.linear = r;
        any = true;
    }
    if (rng.bernoulli(cfg.scaling_probability)) {
        // Zoom by s: output voxel p reads input at centre + (p - centre) / s.
        const double s = rng.uniform(cfg.scaling_min, cfg.scaling_max);
        for (auto& row : t.linear) {
            for (auto& v : row) {
                v /= s;
            }
        }
        any = true;
    }
    if (rng.bernoulli(cfg.elastic_probability)) {
        t.grid_spacing = cfg.elastic_grid_spacing_vox;
        for (int a = 0; a < 3; ++a) {
            t.grid_nodes[a] = static_cast<int>(std::ceil((shape[a] - 1) / t.grid_spacing)) + 1;
            t.grid_nodes[a] = std::max(t.grid_nodes[a], 2);
        }
        t.node_displacement.resize(voxel_count(t.grid_nodes));
        const double m = cfg.elastic_max_displacement_vox;
        for (auto& d : t.node_displacement) {
            for (auto& v : d) {
                v = rng.uniform(-m, m);
            }
        }
        any = true;
    }
    if (!any) {
        return std::nullopt;
    }
    return t;
}

Sample augment_sample(const Sample& sample, const std::vector<Modality>& channel_modalities, Rng& rng,
                      const AugmentConfig& cfg)
{
    if (static_cast<int>(channel_modalities.size()) != sample.channels) {
        throw ShapeMismatchError("augment_sample: channel modality list does not match sample channels");
    }
    if (!cfg.enabled) {
        return sample;
    }
    Sample out = sample;
    if (const auto t = draw_spatial(sample.shape, rng, cfg)) {
        out = apply_spatial(sample, *t);
    }

    for (int c = 0; c < out.channels; ++c) {
        if (channel_modalities[c] == Modality::Dose) {
            continue;
        }
        auto ch = out.channel(c);
        if (rng.bernoulli(cfg.gamma_probability)) {
            const double gamma = rng.uniform(cfg.gamma_min, cfg.gamma_max);
            const auto [mn_it, mx_it] = std::minmax_element(ch.begin(), ch.end());
            const double mn = *mn_it;
            const double range = *mx_it - mn;
            if (range > 0.0) {
                for (auto& v : ch) {
                    v = static_cast<float>(mn + range * std::pow((v - mn) / range, gamma));
                }
            }
        }
        if (rng.bernoulli(cfg.brightness_probability)) {
            const auto shift = static_cast<float>(rng.uniform(cfg.brightness_min, cfg.brightness_max));
            for (auto& v : ch) {
                v += shift;
            }
        }
        if (rng.bernoulli(cfg.noise_probability)) {
            const double sigma = rng.uniform(cfg.noise_sigma_min, cfg.noise_sigma_max);
            if (sigma > 0.0) {
                for (auto& v : ch) {
                    v += static_cast<float>(rng.normal(0.0, sigma));
                }
            }
        }
    }
    return out;
}

} // namespace ricenet
