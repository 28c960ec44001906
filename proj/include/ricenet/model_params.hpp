#pragma once

#include <string>
#include <vector>

#include "ricenet/errors.hpp"
#include "ricenet/tensor.hpp"

namespace ricenet {

template <typename T>
struct ParamTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<T> data;
    bool trainable = true; // false for normalisation running statistics
};

// Ordered, named weight set. Order and shapes are fixed by the network config.
template <typename T>
class ModelParams {
public:
    std::vector<ParamTensor<T>> tensors;

    std::size_t size() const noexcept { return tensors.size(); }

    std::size_t index_of(const std::string& name) const
    {
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            if (tensors[i].name == name) {
                return i;
            }
        }
        throw PreconditionError("no parameter named '" + name + "'");
    }
    ParamTensor<T>& at(const std::string& name) { return tensors[index_of(name)]; }
    const ParamTensor<T>& at(const std::string& name) const { return tensors[index_of(name)]; }

    std::size_t scalar_count(bool trainable_only = false) const
    {
        std::size_t n = 0;
        for (const auto& t : tensors) {
            if (!trainable_only || t.trainable) {
                n += t.data.size();
            }
        }
        return n;
    }

    ModelParams zeros_like() const
    {
        ModelParams out;
        out.tensors.reserve(tensors.size());
        for (const auto& t : tensors) {
            out.tensors.push_back({t.name, t.shape, std::vector<T>(t.data.size(), T{}), t.trainable});
        }
        return out;
    }

    template <typename U>
    ModelParams<U> cast() const
    {
        ModelParams<U> out;
        out.tensors.reserve(tensors.size());
        for (const auto& t : tensors) {
            out.tensors.push_back({t.name, t.shape, std::vector<U>(t.data.begin(), t.data.end()), t.trainable});
        }
        return out;
    }

    bool all_finite() const;

    friend bool operator==(const ModelParams& a, const ModelParams& b)
    {
        if (a.tensors.size() != b.tensors.size()) {
            return false;
        }
        for (std::size_t i = 0; i < a.tensors.size(); ++i) {
            const auto& x = a.tensors[i];
            const auto& y = b.tensors[i];
            if (x.name != y.name || x.shape != y.shape || x.data != y.data || x.trainable != y.trainable) {
                return false;
            }
        }
        return true;
    }
};

extern template class ModelParams<float>;
extern template class ModelParams<double>;

} // namespace ricenet
