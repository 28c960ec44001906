#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace ricenet {

inline std::size_t shape_numel(const std::vector<int>& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

std::string shape_string(const std::vector<int>& shape);

// Dense row-major tensor; the last dimension is fastest. Network activations
// use (N, C, Z, Y, X) so that each channel plane is x-fastest like a Volume.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, T fill = T{}) : shape(std::move(s)), data(shape_numel(shape), fill) {}
    Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {}

    std::size_t numel() const noexcept { return data.size(); }
    int dim(std::size_t i) const { return shape.at(i); }

    template <typename U>
    Tensor<U> cast() const
    {
        return Tensor<U>(shape, std::vector<U>(data.begin(), data.end()));
    }
};

} // namespace ricenet
