#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "ricenet/volume.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("ricenet-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline ricenet::Volume random_volume(ricenet::Index3 shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                                     ricenet::Vec3 spacing = {1.0, 1.0, 1.0})
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<float> v(ricenet::voxel_count(shape));
    for (auto& x : v) {
        x = static_cast<float>(d(gen));
    }
    return ricenet::Volume(shape, spacing, {0.0, 0.0, 0.0}, std::move(v));
}

} // namespace testutil
