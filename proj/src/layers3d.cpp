#include "ricenet/layers3d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#include "ricenet/errors.hpp"

namespace ricenet {

std::string shape_string(const std::vector<int>& shape)
{
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += (i ? "," : "") + std::to_string(shape[i]);
    }
    return s + ")";
}

} // namespace ricenet

namespace ricenet::layers {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dims {
    int n, c, d, h, w;
};

Dims dims5(const std::vector<int>& s, const char* what)
{
    if (s.size() != 5) {
        throw ShapeMismatchError(std::string(what) + ": expected a 5-d tensor, got " + shape_string(s));
    }
    return {s[0], s[1], s[2], s[3], s[4]};
}

// Valid output range [lo, hi) along one axis for kernel tap `kt`.
inline void valid_range(int out_n, int in_n, int kt, int stride, int pad, int& lo, int& hi)
{
    // i = o * stride - pad + kt must lie in [0, in_n)
    lo = 0;
    while (lo < out_n && lo * stride - pad + kt < 0) {
        ++lo;
    }
    hi = out_n;
    while (hi > lo && (hi - 1) * stride - pad + kt >= in_n) {
        --hi;
    }
}

template <typename T>
void im2col(const T* in, const Dims& id, const ConvGeom& g, int od, int oh, int ow, T* col)
{
    const std::size_t plane = static_cast<std::size_t>(od) * oh * ow;
    const int k = g.k;
    for (int c = 0; c < g.cin; ++c) {
        for (int kd = 0; kd < k; ++kd) {
            int d_lo, d_hi;
            valid_range(od, id.d, kd, g.stride, g.pad, d_lo, d_hi);
            for (int kh = 0; kh < k; ++kh) {
                int h_lo, h_hi;
                valid_range(oh, id.h, kh, g.stride, g.pad, h_lo, h_hi);
                for (int kw = 0; kw < k; ++kw) {
                    int w_lo, w_hi;
                    valid_range(ow, id.w, kw, g.stride, g.pad, w_lo, w_hi);
                    const std::size_t row = ((static_cast<std::size_t>(c) * k + kd) * k + kh) * k + kw;
                    T* dst_row = col + row * plane;
                    for (int z = 0; z < od; ++z) {
                        T* dst_plane = dst_row + static_cast<std::size_t>(z) * oh * ow;
                        if (z < d_lo || z >= d_hi) {
                            std::fill(dst_plane, dst_plane + static_cast<std::size_t>(oh) * ow, T{});
                            continue;
                        }
                        const int iz = z * g.stride - g.pad + kd;
                        for (int y = 0; y < oh; ++y) {
                            T* dst = dst_plane + static_cast<std::size_t>(y) * ow;
                            if (y < h_lo || y >= h_hi) {
                                std::fill(dst, dst + ow, T{});
                                continue;
                            }
                            const int iy = y * g.stride - g.pad + kh;
                            const T* src = in + ((static_cast<std::size_t>(c) * id.d + iz) * id.h + iy) * id.w;
                            std::fill(dst, dst + w_lo, T{});
                            if (g.stride == 1) {
                                const T* s = src + (w_lo - g.pad + kw);
                                std::copy(s, s + (w_hi - w_lo), dst + w_lo);
                            } else {
                                for (int x = w_lo; x < w_hi; ++x) {
                                    dst[x] = src[x * g.stride - g.pad + kw];
                                }
                            }
                            std::fill(dst + w_hi, dst + ow, T{});
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, const Dims& id, const ConvGeom& g, int od, int oh, int ow, T* din)
{
    const std::size_t plane = static_cast<std::size_t>(od) * oh * ow;
    const int k = g.k;
    for (int c = 0; c < g.cin; ++c) {
        for (int kd = 0; kd < k; ++kd) {
            int d_lo, d_hi;
            valid_range(od, id.d, kd, g.stride, g.pad, d_lo, d_hi);
            for (int kh = 0; kh < k; ++kh) {
                int h_lo, h_hi;
                valid_range(oh, id.h, kh, g.stride, g.pad, h_lo, h_hi);
                for (int kw = 0; kw < k; ++kw) {
                    int w_lo, w_hi;
                    valid_range(ow, id.w, kw, g.stride, g.pad, w_lo, w_hi);
                    const std::size_t row = ((static_cast<std::size_t>(c) * k + kd) * k + kh) * k + kw;
                    const T* src_row = col + row * plane;
                    for (int z = d_lo; z < d_hi; ++z) {
                        const int iz = z * g.stride - g.pad + kd;
                        for (int y = h_lo; y < h_hi; ++y) {
                            const int iy = y * g.stride - g.pad + kh;
                            const T* src = src_row + (static_cast<std::size_t>(z) * oh + y) * ow;
                            T* dst = din + ((static_cast<std::size_t>(c) * id.d + iz) * id.h + iy) * id.w;
                            for (int x = w_lo; x < w_hi; ++x) {
                                dst[x * g.stride - g.pad + kw] += src[x];
                            }
                        }
                    }
                }
            }
        }
    }
}

} // namespace

template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& in, std::span<const T> weight, const ConvGeom& g, std::vector<T>& scratch)
{
    const Dims id = dims5(in.shape, "conv3d");
    if (id.c != g.cin) {
        throw ShapeMismatchError("conv3d: input has " + std::to_string(id.c) + " channels, weight expects " +
                                 std::to_string(g.cin));
    }
    const int od = conv_out_dim(id.d, g.k, g.stride, g.pad);
    const int oh = conv_out_dim(id.h, g.k, g.stride, g.pad);
    const int ow = conv_out_dim(id.w, g.k, g.stride, g.pad);
    if (od < 1 || oh < 1 || ow < 1) {
        throw ShapeMismatchError("conv3d: input " + shape_string(in.shape) + " too small for kernel");
    }
    const std::size_t ck = static_cast<std::size_t>(g.cin) * g.k * g.k * g.k;
    const std::size_t plane = static_cast<std::size_t>(od) * oh * ow;
    if (weight.size() != static_cast<std::size_t>(g.cout) * ck) {
        throw ShapeMismatchError("conv3d: weight size does not match geometry");
    }
    Tensor<T> out({id.n, g.cout, od, oh, ow});
    scratch.resize(ck * plane);
    const Eigen::Map<const MatR<T>> W(weight.data(), g.cout, static_cast<Eigen::Index>(ck));
    const std::size_t in_stride = static_cast<std::size_t>(id.c) * id.d * id.h * id.w;
    for (int n = 0; n < id.n; ++n) {
        im2col(in.data.data() + n * in_stride, id, g, od, oh, ow, scratch.data());
        const Eigen::Map<const MatR<T>> C(scratch.data(), static_cast<Eigen::Index>(ck),
                                          static_cast<Eigen::Index>(plane));
        Eigen::Map<MatR<T>> O(out.data.data() + static_cast<std::size_t>(n) * g.cout * plane, g.cout,
                              static_cast<Eigen::Index>(plane));
        O.noalias() = W * C;
    }
    return out;
}

template <typename T>
void conv3d_backward(const Tensor<T>& in, std::span<const T> weight, const ConvGeom& g, const Tensor<T>& dout,
                     std::span<T> dweight, Tensor<T>* din, std::vector<T>& scratch)
{
    const Dims id = dims5(in.shape, "conv3d_backward");
    const Dims od5 = dims5(dout.shape, "conv3d_backward");
    const int od = od5.d, oh = od5.h, ow = od5.w;
    const std::size_t ck = static_cast<std::size_t>(g.cin) * g.k * g.k * g.k;
    const std::size_t plane = static_cast<std::size_t>(od) * oh * ow;
    const std::size_t in_stride = static_cast<std::size_t>(id.c) * id.d * id.h * id.w;

    scratch.resize(ck * plane);
    std::vector<T> dcol;
    if (din != nullptr) {
        *din = Tensor<T>(in.shape);
        dcol.resize(ck * plane);
    }
    const Eigen::Map<const MatR<T>> W(weight.data(), g.cout, static_cast<Eigen::Index>(ck));
    Eigen::Map<MatR<T>> dW(dweight.data(), g.cout, static_cast<Eigen::Index>(ck));
    for (int n = 0; n < id.n; ++n) {
        const Eigen::Map<const MatR<T>> dO(dout.data.data() + static_cast<std::size_t>(n) * g.cout * plane, g.cout,
                                           static_cast<Eigen::Index>(plane));
        im2col(in.data.data() + n * in_stride, id, g, od, oh, ow, scratch.data());
        const Eigen::Map<const MatR<T>> C(scratch.data(), static_cast<Eigen::Index>(ck),
                                          static_cast<Eigen::Index>(plane));
        dW.noalias() += dO * C.transpose();
        if (din != nullptr) {
            Eigen::Map<MatR<T>> dC(dcol.data(), static_cast<Eigen::Index>(ck), static_cast<Eigen::Index>(plane));
            dC.noalias() = W.transpose() * dO;
            col2im_add(dcol.data(), id, g, od, oh, ow, din->data.data() + n * in_stride);
        }
    }
}

template <typename T>
Tensor<T> conv3d_reference(const Tensor<T>& in, std::span<const T> weight, const ConvGeom& g)
{
    const Dims id = dims5(in.shape, "conv3d_reference");
    const int od = conv_out_dim(id.d, g.k, g.stride, g.pad);
    const int oh = conv_out_dim(id.h, g.k, g.stride, g.pad);
    const int ow = conv_out_dim(id.w, g.k, g.stride, g.pad);
    Tensor<T> out({id.n, g.cout, od, oh, ow});
    auto in_at = [&](int n, int c, int z, int y, int x) {
        return in.data[(((static_cast<std::size_t>(n) * id.c + c) * id.d + z) * id.h + y) * id.w + x];
    };
    std::size_t o = 0;
    for (int n = 0; n < id.n; ++n) {
        for (int co = 0; co < g.cout; ++co) {
            for (int z = 0; z < od; ++z) {
                for (int y = 0; y < oh; ++y) {
                    for (int x = 0; x < ow; ++x, ++o) {
                        double acc = 0.0;
                        for (int ci = 0; ci < g.cin; ++ci) {
                            for (int kd = 0; kd < g.k; ++kd) {
                                const int iz = z * g.stride - g.pad + kd;
                                if (iz < 0 || iz >= id.d) {
                                    continue;
                                }
                                for (int kh = 0; kh < g.k; ++kh) {
                                    const int iy = y * g.stride - g.pad + kh;
                                    if (iy < 0 || iy >= id.h) {
                                        continue;
                                    }
                                    for (int kw = 0; kw < g.k; ++kw) {
                                        const int ix = x * g.stride - g.pad + kw;
                                        if (ix < 0 || ix >= id.w) {
                                            continue;
                                        }
                                        const std::size_t wi =
                                            (((static_cast<std::size_t>(co) * g.cin + ci) * g.k + kd) * g.k + kh) *
                                                g.k +
                                            kw;
                                        acc += static_cast<double>(weight[wi]) * in_at(n, ci, iz, iy, ix);
                                    }
                                }
                            }
                        }
                        out.data[o] = static_cast<T>(acc);
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
Tensor<T> batchnorm_train(const Tensor<T>& x, std::span<const T> gamma, std::span<const T> beta, double eps,
                          BatchNormCache<T>& cache)
{
    const Dims d = dims5(x.shape, "batchnorm");
    const std::size_t plane = static_cast<std::size_t>(d.d) * d.h * d.w;
    const std::size_t m = plane * d.n;
    cache.count = m;
    cache.xhat.resize(x.numel());
    cache.inv_std.assign(d.c, T{});
    cache.batch_mean.assign(d.c, T{});
    cache.batch_var.assign(d.c, T{});
    Tensor<T> y(x.shape);
    for (int c = 0; c < d.c; ++c) {
        double sum = 0.0;
        for (int n = 0; n < d.n; ++n) {
            const T* p = x.data.data() + (static_cast<std::size_t>(n) * d.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum += p[i];
            }
        }
        const double mean = sum / static_cast<double>(m);
        double ss = 0.0;
        for (int n = 0; n < d.n; ++n) {
            const T* p = x.data.data() + (static_cast<std::size_t>(n) * d.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                const double dv = p[i] - mean;
                ss += dv * dv;
            }
        }
        const double var = ss / static_cast<double>(m);
        const double inv = 1.0 / std::sqrt(var + eps);
        cache.batch_mean[c] = static_cast<T>(mean);
        cache.batch_var[c] = static_cast<T>(var);
        cache.inv_std[c] = static_cast<T>(inv);
        const T tm = static_cast<T>(mean);
        const T ti = static_cast<T>(inv);
        for (int n = 0; n < d.n; ++n) {
            const std::size_t off = (static_cast<std::size_t>(n) * d.c + c) * plane;
            const T* p = x.data.data() + off;
            T* xh = cache.xhat.data() + off;
            T* q = y.data.data() + off;
            for (std::size_t i = 0; i < plane; ++i) {
                xh[i] = (p[i] - tm) * ti;
                q[i] = gamma[c] * xh[i] + beta[c];
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& x, std::span<const T> gamma, std::span<const T> beta,
                         std::span<const T> running_mean, std::span<const T> running_var, double eps)
{
    const Dims d = dims5(x.shape, "batchnorm");
    const std::size_t plane = static_cast<std::size_t>(d.d) * d.h * d.w;
    Tensor<T> y(x.shape);
    for (int c = 0; c < d.c; ++c) {
        const T scale = static_cast<T>(gamma[c] / std::sqrt(static_cast<double>(running_var[c]) + eps));
        const T shift = beta[c] - running_mean[c] * scale;
        for (int n = 0; n < d.n; ++n) {
            const std::size_t off = (static_cast<std::size_t>(n) * d.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                y.data[off + i] = x.data[off + i] * scale + shift;
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& dy, std::span<const T> gamma, const BatchNormCache<T>& cache,
                             std::span<T> dgamma, std::span<T> dbeta)
{
    const Dims d = dims5(dy.shape, "batchnorm_backward");
    const std::size_t plane = static_cast<std::size_t>(d.d) * d.h * d.w;
    const double m = static_cast<double>(cache.count);
    Tensor<T> dx(dy.shape);
    for (int c = 0; c < d.c; ++c) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (int n = 0; n < d.n; ++n) {
            const std::size_t off = (static_cast<std::size_t>(n) * d.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_dy += dy.data[off + i];
                sum_dy_xhat += static_cast<double>(dy.data[off + i]) * cache.xhat[off + i];
            }
        }
        dgamma[c] += static_cast<T>(sum_dy_xhat);
        dbeta[c] += static_cast<T>(sum_dy);
        const T k = static_cast<T>(gamma[c] * cache.inv_std[c]);
        const T mean_dy = static_cast<T>(sum_dy / m);
        const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / m);
        for (int n = 0; n < d.n; ++n) {
            const std::size_t off = (static_cast<std::size_t>(n) * d.c + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                dx.data[off + i] = k * (dy.data[off + i] - mean_dy - cache.xhat[off + i] * mean_dy_xhat);
            }
        }
    }
    return dx;
}

template <typename T>
void relu_inplace(Tensor<T>& x)
{
    for (auto& v : x.data) {
        v = v > T{} ? v : T{};
    }
}

template <typename T>
void relu_backward_inplace(Tensor<T>& dy, const Tensor<T>& y)
{
    for (std::size_t i = 0; i < dy.data.size(); ++i) {
        if (!(y.data[i] > T{})) {
            dy.data[i] = T{};
        }
    }
}

template <typename T>
Tensor<T> maxpool3d_forward(const Tensor<T>& x, int k, int stride, int pad, std::vector<std::int32_t>& argmax)
{
    const Dims d = dims5(x.shape, "maxpool3d");
    const int od = conv_out_dim(d.d, k, stride, pad);
    const int oh = conv_out_dim(d.h, k, stride, pad);
    const int ow = conv_out_dim(d.w, k, stride, pad);
    Tensor<T> y({d.n, d.c, od, oh, ow});
    argmax.assign(y.numel(), -1);
    std::size_t o = 0;
    for (int nc = 0; nc < d.n * d.c; ++nc) {
        const std::size_t base = static_cast<std::size_t>(nc) * d.d * d.h * d.w;
        for (int z = 0; z < od; ++z) {
            for (int yy = 0; yy < oh; ++yy) {
                for (int xx = 0; xx < ow; ++xx, ++o) {
                    T best = -std::numeric_limits<T>::infinity();
                    std::int32_t best_i = -1;
                    for (int kd = 0; kd < k; ++kd) {
                        const int iz = z * stride - pad + kd;
                        if (iz < 0 || iz >= d.d) {
                            continue;
                        }
                        for (int kh = 0; kh < k; ++kh) {
                            const int iy = yy * stride - pad + kh;
                            if (iy < 0 || iy >= d.h) {
                                continue;
                            }
                            for (int kw = 0; kw < k; ++kw) {
                                const int ix = xx * stride - pad + kw;
                                if (ix < 0 || ix >= d.w) {
                                    continue;
                                }
                                const std::size_t idx = base + (static_cast<std::size_t>(iz) * d.h + iy) * d.w + ix;
                                if (best_i < 0 || x.data[idx] > best) {
                                    best = x.data[idx];
                                    best_i = static_cast<std::int32_t>(idx);
                                }
                            }
                        }
                    }
                    y.data[o] = best;
                    argmax[o] = best_i;
                }
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> maxpool3d_backward(const Tensor<T>& dy, const std::vector<int>& in_shape,
                             const std::vector<std::int32_t>& argmax)
{
    Tensor<T> dx(in_shape);
    for (std::size_t o = 0; o < dy.data.size(); ++o) {
        dx.data[static_cast<std::size_t>(argmax[o])] += dy.data[o];
    }
    return dx;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x)
{
    const Dims d = dims5(x.shape, "global_avg_pool");
    const std::size_t plane = static_cast<std::size_t>(d.d) * d.h * d.w;
    Tensor<T> y({d.n, d.c});
    for (int nc = 0; nc < d.n * d.c; ++nc) {
        double s = 0.0;
        const T* p = x.data.data() + static_cast<std::size_t>(nc) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            s += p[i];
        }
        y.data[nc] = static_cast<T>(s / static_cast<double>(plane));
    }
    return y;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dy, const std::vector<int>& in_shape)
{
    const Dims d = dims5(in_shape, "global_avg_pool_backward");
    const std::size_t plane = static_cast<std::size_t>(d.d) * d.h * d.w;
    Tensor<T> dx(in_shape);
    const T inv = static_cast<T>(1.0 / static_cast<double>(plane));
    for (int nc = 0; nc < d.n * d.c; ++nc) {
        const T g = dy.data[nc] * inv;
        std::fill_n(dx.data.data() + static_cast<std::size_t>(nc) * plane, plane, g);
    }
    return dx;
}

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, std::span<const T> weight, std::span<const T> bias, int out_features)
{
    if (x.shape.size() != 2) {
        throw ShapeMismatchError("linear: expected (N, features) input");
    }
    const int n = x.shape[0];
    const int in_features = x.shape[1];
    if (weight.size() != static_cast<std::size_t>(out_features) * in_features) {
        throw ShapeMismatchError("linear: weight does not match input features");
    }
    Tensor<T> y({n, out_features});
    for (int i = 0; i < n; ++i) {
        for (int o = 0; o < out_features; ++o) {
            double acc = bias[o];
            for (int f = 0; f < in_features; ++f) {
                acc += static_cast<double>(weight[static_cast<std::size_t>(o) * in_features + f]) *
                       x.data[static_cast<std::size_t>(i) * in_features + f];
            }
            y.data[static_cast<std::size_t>(i) * out_features + o] = static_cast<T>(acc);
        }
    }
    return y;
}

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, std::span<const T> weight, const Tensor<T>& dy, std::span<T> dweight,
                          std::span<T> dbias)
{
    const int n = x.shape[0];
    const int in_features = x.shape[1];
    const int out_features = dy.shape[1];
    Tensor<T> dx(x.shape);
    for (int i = 0; i < n; ++i) {
        for (int o = 0; o < out_features; ++o) {
            const T g = dy.data[static_cast<std::size_t>(i) * out_features + o];
            dbias[o] += g;
            for (int f = 0; f < in_features; ++f) {
                dweight[static_cast<std::size_t>(o) * in_features + f] +=
                    g * x.data[static_cast<std::size_t>(i) * in_features + f];
                dx.data[static_cast<std::size_t>(i) * in_features + f] +=
                    g * weight[static_cast<std::size_t>(o) * in_features + f];
            }
        }
    }
    return dx;
}

#define RICENET_INSTANTIATE_LAYERS(T)                                                                                 \
    template Tensor<T> conv3d_forward<T>(const Tensor<T>&, std::span<const T>, const ConvGeom&, std::vector<T>&);    \
    template void conv3d_backward<T>(const Tensor<T>&, std::span<const T>, const ConvGeom&, const Tensor<T>&,        \
                                     std::span<T>, Tensor<T>*, std::vector<T>&);                                      \
    template Tensor<T> conv3d_reference<T>(const Tensor<T>&, std::span<const T>, const ConvGeom&);                   \
    template Tensor<T> batchnorm_train<T>(const Tensor<T>&, std::span<const T>, std::span<const T>, double,           \
                                          BatchNormCache<T>&);                                                        \
    template Tensor<T> batchnorm_eval<T>(const Tensor<T>&, std::span<const T>, std::span<const T>,                   \
                                         std::span<const T>, std::span<const T>, double);                             \
    template Tensor<T> batchnorm_backward<T>(const Tensor<T>&, std::span<const T>, const BatchNormCache<T>&,         \
                                             std::span<T>, std::span<T>);                                             \
    template void relu_inplace<T>(Tensor<T>&);                                                                        \
    template void relu_backward_inplace<T>(Tensor<T>&, const Tensor<T>&);                                             \
    template Tensor<T> maxpool3d_forward<T>(const Tensor<T>&, int, int, int, std::vector<std::int32_t>&);             \
    template Tensor<T> maxpool3d_backward<T>(const Tensor<T>&, const std::vector<int>&,                              \
                                             const std::vector<std::int32_t>&);                                       \
    template Tensor<T> global_avg_pool<T>(const Tensor<T>&);                                                          \
    template Tensor<T> global_avg_pool_backward<T>(const Tensor<T>&, const std::vector<int>&);                        \
    template Tensor<T> linear_forward<T>(const Tensor<T>&, std::span<const T>, std::span<const T>, int);             \
    template Tensor<T> linear_backward<T>(const Tensor<T>&, std::span<const T>, const Tensor<T>&, std::span<T>,      \
                                          std::span<T>);

RICENET_INSTANTIATE_LAYERS(float)
RICENET_INSTANTIATE_LAYERS(double)

#undef RICENET_INSTANTIATE_LAYERS

} // namespace ricenet::layers
