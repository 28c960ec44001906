#include "ricenet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ricenet/errors.hpp"

namespace ricenet {

Volume Sample::channel_volume(int c) const
{
    const auto ch = channel(c);
    return Volume(shape, spacing_mm, origin_mm, std::vector<float>(ch.begin(), ch.end()));
}

namespace {

struct AxisSample {
    int i0;
    int i1;
    double w1; // weight of i1; exactly 0 on grid points
};

AxisSample axis_sample(double pos, int n)
{
    pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    const int i0 = static_cast<int>(std::floor(pos));
    const double f = pos - i0;
    if (f == 0.0 || i0 + 1 >= n) {
        return {i0, i0, 0.0};
    }
    return {i0, i0 + 1, f};
}

} // namespace

Volume resample_isotropic(const Volume& vol, double target_spacing_mm)
{
    if (!(target_spacing_mm > 0.0) || !std::isfinite(target_spacing_mm)) {
        throw PreconditionError("resample_isotropic: target spacing must be > 0");
    }
    const auto& in_shape = vol.shape();
    const auto& sp = vol.spacing();
    Index3 out_shape{};
    Vec3 out_origin{};
    std::array<std::vector<AxisSample>, 3> taps;
    for (int a = 0; a < 3; ++a) {
        const long n = std::lround(in_shape[a] * sp[a] / target_spacing_mm);
        out_shape[a] = static_cast<int>(std::max(1L, n));
        // Continuous input index of output voxel i: i * r + (r - 1) / 2 with r = t / s.
        const double r = target_spacing_mm / sp[a];
        const double offset = (r - 1.0) / 2.0;
        out_origin[a] = vol.origin()[a] + offset * sp[a];
        taps[a].reserve(out_shape[a]);
        for (int i = 0; i < out_shape[a]; ++i) {
            taps[a].push_back(axis_sample(i * r + offset, in_shape[a]));
        }
    }

    std::vector<float> out(voxel_count(out_shape));
    const auto src = vol.values();
    std::size_t o = 0;
    for (int z = 0; z < out_shape[2]; ++z) {
        const auto tz = taps[2][z];
        for (int y = 0; y < out_shape[1]; ++y) {
            const auto ty = taps[1][y];
            for (int x = 0; x < out_shape[0]; ++x, ++o) {
                const auto tx = taps[0][x];
                if (tx.w1 == 0.0 && ty.w1 == 0.0 && tz.w1 == 0.0) {
                    out[o] = src[vol.index(tx.i0, ty.i0, tz.i0)];
                    continue;
                }
                double acc = 0.0;
                for (int cz = 0; cz < 2; ++cz) {
                    const double wz = cz ? tz.w1 : 1.0 - tz.w1;
                    if (wz == 0.0) {
                        continue;
                    }
                    const int iz = cz ? tz.i1 : tz.i0;
                    for (int cy = 0; cy < 2; ++cy) {
                        const double wy = cy ? ty.w1 : 1.0 - ty.w1;
                        if (wy == 0.0) {
                            continue;
                        }
                        const int iy = cy ? ty.i1 : ty.i0;
                        for (int cx = 0; cx < 2; ++cx) {
                            const double wx = cx ? tx.w1 : 1.0 - tx.w1;
                            if (wx == 0.0) {
                                continue;
                            }
                            const int ix = cx ? tx.i1 : tx.i0;
                            acc += wz * wy * wx * src[vol.index(ix, iy, iz)];
                        }
                    }
                }
                out[o] = static_cast<float>(acc);
            }
        }
    }
    return Volume(out_shape, {target_spacing_mm, target_spacing_mm, target_spacing_mm}, out_origin, std::move(out));
}

Volume zscore(const Volume& vol, const Volume* mask)
{
    const auto v = vol.values();
    if (mask != nullptr && mask->shape() != vol.shape()) {
        throw ShapeMismatchError("zscore: mask shape differs from volume shape");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask == nullptr || mask->values()[i] != 0.0f) {
            sum += v[i];
            ++count;
        }
    }
    if (count < 2) {
        throw PreconditionError("zscore: normalisation region needs at least 2 voxels");
    }
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask == nullptr || mask->values()[i] != 0.0f) {
            const double d = v[i] - mean;
            ss += d * d;
        }
    }
    const double sd = std::sqrt(ss / static_cast<double>(count));
    if (!(sd > 0.0)) {
        throw DegenerateInputError("zscore: zero standard deviation over the normalisation region");
    }
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = static_cast<float>((v[i] - mean) / sd);
    }
    Volume result(vol.shape(), vol.spacing(), vol.origin(), std::move(out));
    require_finite(result, "zscore");
    return result;
}

Volume center_crop_pad(const Volume& vol, const Index3& target_shape)
{
    Index3 offset{};
    Vec3 origin = vol.origin();
    for (int a = 0; a < 3; ++a) {
        if (target_shape[a] < 1) {
            throw PreconditionError("center_crop_pad: target shape must be positive");
        }
        const int n = vol.shape()[a];
        const int t = target_shape[a];
        // Output index j reads input index j + offset.
        offset[a] = n > t ? (n - t) / 2 : -((t - n) / 2);
        origin[a] += offset[a] * vol.spacing()[a];
    }
    if (target_shape == vol.shape()) {
        return vol;
    }
    auto out = Volume::filled(target_shape, vol.spacing(), origin, 0.0f);
    const auto& in_shape = vol.shape();
    for (int z = 0; z < target_shape[2]; ++z) {
        const int iz = z + offset[2];
        if (iz < 0 || iz >= in_shape[2]) {
            continue;
        }
        for (int y = 0; y < target_shape[1]; ++y) {
            const int iy = y + offset[1];
            if (iy < 0 || iy >= in_shape[1]) {
                continue;
            }
            for (int x = 0; x < target_shape[0]; ++x) {
                const int ix = x + offset[0];
                if (ix >= 0 && ix < in_shape[0]) {
                    out.at(x, y, z) = vol.at(ix, iy, iz);
                }
            }
        }
    }
    return out;
}

Volume scale_fraction_dose(const Volume& vol, int n_fractions)
{
    if (n_fractions < 1) {
        throw PreconditionError("scale_fraction_dose: fraction count must be positive");
    }
    std::vector<float> out(vol.size());
    const auto v = vol.values();
    const float k = static_cast<float>(n_fractions);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 0.0f) {
            throw InvalidDoseError("scale_fraction_dose: negative dose value " + std::to_string(v[i]));
        }
        out[i] = v[i] * k;
    }
    Volume result(vol.shape(), vol.spacing(), vol.origin(), std::move(out));
    require_finite(result, "scale_fraction_dose");
    return result;
}

Volume rescale_dose(const Volume& vol, double dose_max_gy)
{
    if (!(dose_max_gy > 0.0)) {
        throw PreconditionError("rescale_dose: dose_max_gy must be > 0");
    }
    std::vector<float> out(vol.size());
    const auto v = vol.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 0.0f) {
            throw InvalidDoseError("rescale_dose: negative dose value");
        }
        out[i] = static_cast<float>(v[i] / dose_max_gy);
    }
    return Volume(vol.shape(), vol.spacing(), vol.origin(), std::move(out));
}

Volume apply_mask(const Volume& vol, const Volume& mask)
{
    if (mask.shape() != vol.shape()) {
        throw ShapeMismatchError("apply_mask: mask shape differs from volume shape");
    }
    std::vector<float> out(vol.values().begin(), vol.values().end());
    const auto m = mask.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (m[i] == 0.0f) {
            out[i] = 0.0f;
        }
    }
    return Volume(vol.shape(), vol.spacing(), vol.origin(), std::move(out));
}

Sample stack_channels(const SubjectVolumes& volumes, const ModalityCombo& combo)
{
    const auto mods = combo.modalities();
    const Volume* first = nullptr;
    for (auto m : mods) {
        const auto it = volumes.find(m);
        if (it == volumes.end()) {
            throw PreconditionError(std::string("stack_channels: missing ") + modality_key(m) + " volume");
        }
        if (first == nullptr) {
            first = &it->second;
        } else if (it->second.shape() != first->shape() || it->second.spacing() != first->spacing()) {
            throw ShapeMismatchError(std::string("stack_channels: ") + modality_key(m) +
                                     " grid differs from the first selected channel");
        }
    }
    Sample s;
    s.channels = static_cast<int>(mods.size());
    s.shape = first->shape();
    s.spacing_mm = first->spacing();
    s.origin_mm = first->origin();
    s.data.reserve(s.voxels() * mods.size());
    for (auto m : mods) {
        const auto v = volumes.at(m).values();
        s.data.insert(s.data.end(), v.begin(), v.end());
    }
    return s;
}

} // namespace ricenet
