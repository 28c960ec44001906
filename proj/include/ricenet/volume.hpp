#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace ricenet {

using Index3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

// Dense scalar grid with world-space metadata. Values are stored x-fastest:
// index = x + nx * (y + ny * z). Voxel (i,j,k) sits at origin + (i,j,k) * spacing.
class Volume {
public:
    Volume(Index3 shape, Vec3 spacing_mm, Vec3 origin_mm, std::vector<float> values);

    static Volume filled(Index3 shape, Vec3 spacing_mm, Vec3 origin_mm, float value = 0.0f);

    const Index3& shape() const noexcept { return shape_; }
    const Vec3& spacing() const noexcept { return spacing_; }
    const Vec3& origin() const noexcept { return origin_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const float> values() const noexcept { return values_; }
    std::span<float> values() noexcept { return values_; }

    std::size_t index(int x, int y, int z) const noexcept
    {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(shape_[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(shape_[1]) * static_cast<std::size_t>(z));
    }
    float at(int x, int y, int z) const noexcept { return values_[index(x, y, z)]; }
    float& at(int x, int y, int z) noexcept { return values_[index(x, y, z)]; }

    bool all_finite() const noexcept;
    // Shape, spacing and origin all equal.
    bool same_grid(const Volume& other) const noexcept;

    // Bitwise equality of metadata and payload.
    friend bool operator==(const Volume& a, const Volume& b) noexcept;

private:
    Index3 shape_;
    Vec3 spacing_;
    Vec3 origin_;
    std::vector<float> values_;
};

std::size_t voxel_count(const Index3& shape) noexcept;

// Throws NonFiniteError naming `what` when any voxel is NaN or Inf.
void require_finite(const Volume& vol, const char* what);

} // namespace ricenet
