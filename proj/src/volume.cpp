#include "ricenet/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "ricenet/errors.hpp"

namespace ricenet {

std::size_t voxel_count(const Index3& shape) noexcept
{
    return static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1]) *
           static_cast<std::size_t>(shape[2]);
}

Volume::Volume(Index3 shape, Vec3 spacing_mm, Vec3 origin_mm, std::vector<float> values)
    : shape_(shape), spacing_(spacing_mm), origin_(origin_mm), values_(std::move(values))
{
    for (int a = 0; a < 3; ++a) {
        if (shape_[a] < 1) {
            throw ShapeMismatchError("volume shape components must be positive");
        }
        if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a])) {
            throw PreconditionError("volume spacing components must be finite and > 0");
        }
        if (!std::isfinite(origin_[a])) {
            throw PreconditionError("volume origin must be finite");
        }
    }
    if (values_.size() != voxel_count(shape_)) {
        throw SizeMismatchError("volume payload holds " + std::to_string(values_.size()) + " values, shape needs " +
                                std::to_string(voxel_count(shape_)));
    }
}

Volume Volume::filled(Index3 shape, Vec3 spacing_mm, Vec3 origin_mm, float value)
{
    for (int s : shape) {
        if (s < 1) {
            throw ShapeMismatchError("volume shape components must be positive");
        }
    }
    return Volume(shape, spacing_mm, origin_mm, std::vector<float>(voxel_count(shape), value));
}

bool Volume::all_finite() const noexcept
{
    return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

bool Volume::same_grid(const Volume& other) const noexcept
{
    return shape_ == other.shape_ && spacing_ == other.spacing_ && origin_ == other.origin_;
}

bool operator==(const Volume& a, const Volume& b) noexcept
{
    if (a.shape_ != b.shape_) {
        return false;
    }
    if (std::memcmp(a.spacing_.data(), b.spacing_.data(), sizeof(Vec3)) != 0 ||
        std::memcmp(a.origin_.data(), b.origin_.data(), sizeof(Vec3)) != 0) {
        return false;
    }
    return std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0;
}

void require_finite(const Volume& vol, const char* what)
{
    if (!vol.all_finite()) {
        throw NonFiniteError(std::string(what) + ": volume contains non-finite values");
    }
}

} // namespace ricenet
