#include "ricenet/resnet3d.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "ricenet/errors.hpp"
#include "ricenet/layers3d.hpp"

namespace ricenet {

template <typename T>
bool ModelParams<T>::all_finite() const
{
    for (const auto& t : tensors) {
        for (const auto v : t.data) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
    }
    return true;
}

template class ModelParams<float>;
template class ModelParams<double>;

namespace {

struct BnIdx {
    std::size_t gamma, beta, mean, var;
};

struct ConvIdx {
    std::size_t weight;
    layers::ConvGeom geom;
};

struct BlockLayout {
    ConvIdx conv1;
    BnIdx bn1;
    ConvIdx conv2;
    BnIdx bn2;
    std::optional<ConvIdx> down_conv;
    std::optional<BnIdx> down_bn;
};

struct Layout {
    std::vector<ParamSpec> specs;
    ConvIdx stem;
    BnIdx stem_bn;
    std::vector<BlockLayout> blocks;
    std::size_t fc_weight = 0;
    std::size_t fc_bias = 0;
    int features = 0;
};

Layout build_layout(const ResNet3DConfig& cfg)
{
    Layout L;
    auto add = [&](std::string name, std::vector<int> shape, bool trainable = true) {
        L.specs.push_back({std::move(name), std::move(shape), trainable});
        return L.specs.size() - 1;
    };
    auto add_conv = [&](const std::string& name, int cin, int cout, int k, int stride, int pad) {
        ConvIdx c;
        c.weight = add(name + ".weight", {cout, cin, k, k, k});
        c.geom = {cin, cout, k, stride, pad};
        return c;
    };
    auto add_bn = [&](const std::string& name, int ch) {
        BnIdx b;
        b.gamma = add(name + ".weight", {ch});
        b.beta = add(name + ".bias", {ch});
        b.mean = add(name + ".running_mean", {ch}, false);
        b.var = add(name + ".running_var", {ch}, false);
        return b;
    };

    const int w = cfg.base_width;
    L.stem = add_conv("stem.conv", cfg.in_channels, w, cfg.stem_kernel, 2, cfg.stem_kernel / 2);
    L.stem_bn = add_bn("stem.bn", w);
    int in_ch = w;
    for (int s = 0; s < 4; ++s) {
        const int out_ch = w << s;
        for (int b = 0; b < cfg.blocks_per_stage[s]; ++b) {
            const int stride = (s > 0 && b == 0) ? 2 : 1;
            const std::string prefix = "layer" + std::to_string(s + 1) + "." + std::to_string(b);
            BlockLayout bl;
            bl.conv1 = add_conv(prefix + ".conv1", in_ch, out_ch, 3, stride, 1);
            bl.bn1 = add_bn(prefix + ".bn1", out_ch);
            bl.conv2 = add_conv(prefix + ".conv2", out_ch, out_ch, 3, 1, 1);
            bl.bn2 = add_bn(prefix + ".bn2", out_ch);
            if (stride != 1 || in_ch != out_ch) {
                bl.down_conv = add_conv(prefix + ".downsample.conv", in_ch, out_ch, 1, stride, 0);
                bl.down_bn = add_bn(prefix + ".downsample.bn", out_ch);
            }
            L.blocks.push_back(bl);
            in_ch = out_ch;
        }
    }
    L.features = in_ch;
    L.fc_weight = add("fc.weight", {cfg.num_classes, in_ch});
    L.fc_bias = add("fc.bias", {cfg.num_classes});
    return L;
}

template <typename T>
std::span<const T> cspan(const ModelParams<T>& p, std::size_t i)
{
    return std::span<const T>(p.tensors[i].data);
}

template <typename T>
std::span<T> mspan(ModelParams<T>& p, std::size_t i)
{
    return std::span<T>(p.tensors[i].data);
}

template <typename T>
std::vector<T>& conv_scratch()
{
    thread_local std::vector<T> scratch;
    return scratch;
}

template <typename T>
struct BlockTrace {
    Tensor<T> input;
    layers::BatchNormCache<T> bn1;
    Tensor<T> r1;
    layers::BatchNormCache<T> bn2;
    layers::BatchNormCache<T> bnd;
    Tensor<T> out;
};

template <typename T>
struct Trace {
    layers::BatchNormCache<T> stem_bn;
    Tensor<T> stem_act;
    std::vector<std::int32_t> pool_argmax;
    std::vector<BlockTrace<T>> blocks;
    Tensor<T> last;
    Tensor<T> features;
};

template <typename T>
Tensor<T> apply_bn(const Tensor<T>& x, const ModelParams<T>& p, const BnIdx& b, const ResNet3DConfig& cfg, Mode mode,
                   layers::BatchNormCache<T>* cache)
{
    if (mode == Mode::Train) {
        return layers::batchnorm_train(x, cspan(p, b.gamma), cspan(p, b.beta), cfg.bn_epsilon, *cache);
    }
    return layers::batchnorm_eval(x, cspan(p, b.gamma), cspan(p, b.beta), cspan(p, b.mean), cspan(p, b.var),
                                  cfg.bn_epsilon);
}

template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b)
{
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        a.data[i] += b.data[i];
    }
}

void check_input(const ResNet3DConfig& cfg, const std::vector<int>& shape)
{
    if (shape.size() != 5 || shape[1] != cfg.in_channels || shape[2] != cfg.input_shape[2] ||
        shape[3] != cfg.input_shape[1] || shape[4] != cfg.input_shape[0] || shape[0] < 1) {
        throw ShapeMismatchError("network input " + shape_string(shape) + " does not match config (C=" +
                                 std::to_string(cfg.in_channels) + ", nx,ny,nz=" + std::to_string(cfg.input_shape[0]) +
                                 "," + std::to_string(cfg.input_shape[1]) + "," +
                                 std::to_string(cfg.input_shape[2]) + ")");
    }
}

// Runs the network; in train mode `trace` must be non-null and receives every
// activation needed by the backward pass.
template <typename T>
Tensor<T> run_forward(const ResNet3DConfig& cfg, const Layout& L, const ModelParams<T>& p, const Tensor<T>& x,
                      Mode mode, Trace<T>* trace)
{
    check_input(cfg, x.shape);
    auto& scratch = conv_scratch<T>();
    const bool train = mode == Mode::Train;

    Tensor<T> h = layers::conv3d_forward(x, cspan(p, L.stem.weight), L.stem.geom, scratch);
    h = apply_bn(h, p, L.stem_bn, cfg, mode, train ? &trace->stem_bn : nullptr);
    layers::relu_inplace(h);
    std::vector<std::int32_t> argmax;
    Tensor<T> a = layers::maxpool3d_forward(h, 3, 2, 1, argmax);
    if (train) {
        trace->stem_act = std::move(h);
        trace->pool_argmax = std::move(argmax);
        trace->blocks.resize(L.blocks.size());
    }

    for (std::size_t bi = 0; bi < L.blocks.size(); ++bi) {
        const auto& bl = L.blocks[bi];
        BlockTrace<T>* bt = train ? &trace->blocks[bi] : nullptr;
        Tensor<T> r = layers::conv3d_forward(a, cspan(p, bl.conv1.weight), bl.conv1.geom, scratch);
        r = apply_bn(r, p, bl.bn1, cfg, mode, bt ? &bt->bn1 : nullptr);
        layers::relu_inplace(r);
        Tensor<T> o = layers::conv3d_forward(r, cspan(p, bl.conv2.weight), bl.conv2.geom, scratch);
        o = apply_bn(o, p, bl.bn2, cfg, mode, bt ? &bt->bn2 : nullptr);
        if (bl.down_conv) {
            Tensor<T> s = layers::conv3d_forward(a, cspan(p, bl.down_conv->weight), bl.down_conv->geom, scratch);
            s = apply_bn(s, p, *bl.down_bn, cfg, mode, bt ? &bt->bnd : nullptr);
            add_inplace(o, s);
        } else {
            add_inplace(o, a);
        }
        layers::relu_inplace(o);
        if (bt) {
            bt->input = std::move(a);
            bt->r1 = std::move(r);
            bt->out = o;
        }
        a = std::move(o);
    }

    Tensor<T> feats = layers::global_avg_pool(a);
    Tensor<T> logits = layers::linear_forward(feats, cspan(p, L.fc_weight), cspan(p, L.fc_bias), cfg.num_classes);
    if (train) {
        trace->last = std::move(a);
        trace->features = std::move(feats);
    }
    return logits;
}

template <typename T>
void collect_stats(const layers::BatchNormCache<T>& c, const BnIdx& b, BatchNormStats<T>& out)
{
    out.layers.push_back({b.mean, b.var, c.batch_mean, c.batch_var, c.count});
}

} // namespace

void ResNet3DConfig::validate() const
{
    if (in_channels < 1 || in_channels > 3) {
        throw ConfigError("model.in_channels must be 1, 2 or 3");
    }
    if (num_classes != 2) {
        throw ConfigError("model.num_classes is fixed at 2");
    }
    if (base_width < 1) {
        throw ConfigError("model.base_width must be >= 1");
    }
    if (blocks_per_stage != std::array<int, 4>{2, 2, 2, 2}) {
        throw ConfigError("model.blocks_per_stage must be [2,2,2,2] (ResNet-18)");
    }
    if (stem_kernel < 1 || stem_kernel % 2 == 0) {
        throw ConfigError("model.stem_kernel must be a positive odd integer");
    }
    if (!(bn_epsilon > 0.0) || !(bn_momentum > 0.0 && bn_momentum <= 1.0)) {
        throw ConfigError("model: bn_epsilon must be > 0 and bn_momentum in (0, 1]");
    }
    for (int a = 0; a < 3; ++a) {
        if (input_shape[a] < 1) {
            throw ConfigError("model.input_shape must be positive");
        }
    }
    const auto fs = final_feature_shape(*this);
    for (int a = 0; a < 3; ++a) {
        if (fs[a] < 1) {
            throw ConfigError("model.input_shape too small to survive five stride-2 reductions");
        }
    }
}

Index3 final_feature_shape(const ResNet3DConfig& cfg)
{
    Index3 out{};
    for (int a = 0; a < 3; ++a) {
        int n = layers::conv_out_dim(cfg.input_shape[a], cfg.stem_kernel, 2, cfg.stem_kernel / 2);
        if (n < 1) {
            out[a] = 0;
            continue;
        }
        n = layers::conv_out_dim(n, 3, 2, 1);
        for (int s = 1; s < 4 && n >= 1; ++s) {
            n = layers::conv_out_dim(n, 3, 2, 1);
        }
        out[a] = n;
    }
    return out;
}

std::vector<ParamSpec> param_specs(const ResNet3DConfig& cfg)
{
    return build_layout(cfg).specs;
}

template <typename T>
void audit_params(const ModelParams<T>& params, const ResNet3DConfig& cfg)
{
    const auto specs = param_specs(cfg);
    if (specs.size() != params.tensors.size()) {
        throw ShapeMismatchError("parameter set holds " + std::to_string(params.tensors.size()) +
                                 " tensors, config needs " + std::to_string(specs.size()));
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& t = params.tensors[i];
        if (t.name != specs[i].name || t.shape != specs[i].shape || t.trainable != specs[i].trainable ||
            t.data.size() != shape_numel(t.shape)) {
            throw ShapeMismatchError("parameter '" + t.name + "' " + shape_string(t.shape) + " does not match '" +
                                     specs[i].name + "' " + shape_string(specs[i].shape));
        }
    }
    if (!params.all_finite()) {
        throw NonFiniteError("parameter set contains non-finite values");
    }
}

template <typename T>
ModelParams<T> init_model(const ResNet3DConfig& cfg, Rng& rng)
{
    cfg.validate();
    ModelParams<T> p;
    for (const auto& s : param_specs(cfg)) {
        ParamTensor<T> t{s.name, s.shape, std::vector<T>(shape_numel(s.shape), T{}), s.trainable};
        const auto ends_with = [&](const char* suffix) {
            const std::string suf(suffix);
            return s.name.size() >= suf.size() && s.name.compare(s.name.size() - suf.size(), suf.size(), suf) == 0;
        };
        if (s.shape.size() == 5) {
            const int fan_in = s.shape[1] * s.shape[2] * s.shape[3] * s.shape[4];
            const double sd = std::sqrt(2.0 / fan_in);
            for (auto& v : t.data) {
                v = static_cast<T>(rng.normal(0.0, sd));
            }
        } else if (s.name == "fc.weight") {
            for (auto& v : t.data) {
                v = static_cast<T>(rng.normal(0.0, 0.01));
            }
        } else if (ends_with(".running_var") || (ends_with(".weight") && s.shape.size() == 1)) {
            std::fill(t.data.begin(), t.data.end(), T{1});
        }
        p.tensors.push_back(std::move(t));
    }
    return p;
}

template <typename T>
Tensor<T> make_batch(std::span<const Sample* const> samples)
{
    if (samples.empty()) {
        throw PreconditionError("make_batch: no samples");
    }
    const auto& first = *samples.front();
    Tensor<T> out({static_cast<int>(samples.size()), first.channels, first.shape[2], first.shape[1], first.shape[0]});
    std::size_t o = 0;
    for (const auto* s : samples) {
        if (s->channels != first.channels || s->shape != first.shape) {
            throw ShapeMismatchError("make_batch: samples differ in channels or shape");
        }
        for (float v : s->data) {
            out.data[o++] = static_cast<T>(v);
        }
    }
    return out;
}

template <typename T>
Tensor<T> make_batch(const Sample& sample)
{
    const Sample* one[] = {&sample};
    return make_batch<T>(std::span<const Sample* const>(one));
}

template <typename T>
Tensor<T> forward(const ResNet3DConfig& cfg, const ModelParams<T>& params, const Tensor<T>& batch, Mode mode)
{
    const Layout L = build_layout(cfg);
    if (mode == Mode::Train) {
        Trace<T> trace;
        return run_forward(cfg, L, params, batch, mode, &trace);
    }
    return run_forward(cfg, L, params, batch, mode, static_cast<Trace<T>*>(nullptr));
}

template <typename T>
Tensor<T> predict_prob(const Tensor<T>& logits)
{
    const int n = logits.shape.at(0);
    const int k = logits.shape.at(1);
    Tensor<T> out(logits.shape);
    for (int i = 0; i < n; ++i) {
        const T* row = logits.data.data() + static_cast<std::size_t>(i) * k;
        const T m = *std::max_element(row, row + k);
        double z = 0.0;
        for (int j = 0; j < k; ++j) {
            z += std::exp(static_cast<double>(row[j] - m));
        }
        for (int j = 0; j < k; ++j) {
            out.data[static_cast<std::size_t>(i) * k + j] = static_cast<T>(std::exp(static_cast<double>(row[j] - m)) / z);
        }
    }
    return out;
}

template <typename T>
T cross_entropy(const Tensor<T>& logits, std::span<const int> labels)
{
    const int n = logits.shape.at(0);
    const int k = logits.shape.at(1);
    if (static_cast<int>(labels.size()) != n) {
        throw ShapeMismatchError("cross_entropy: label count differs from batch size");
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= k) {
            throw PreconditionError("cross_entropy: label out of range");
        }
        const T* row = logits.data.data() + static_cast<std::size_t>(i) * k;
        const double m = *std::max_element(row, row + k);
        double z = 0.0;
        for (int j = 0; j < k; ++j) {
            z += std::exp(row[j] - m);
        }
        total += (m + std::log(z)) - row[labels[i]];
    }
    return static_cast<T>(total / n);
}

template <typename T>
LossAndGrads<T> backward(const ResNet3DConfig& cfg, const ModelParams<T>& params, const Tensor<T>& batch,
                         std::span<const int> labels)
{
    const Layout L = build_layout(cfg);
    Trace<T> tr;
    LossAndGrads<T> res;
    res.logits = run_forward(cfg, L, params, batch, Mode::Train, &tr);
    res.loss = cross_entropy(res.logits, labels);
    if (!std::isfinite(static_cast<double>(res.loss))) {
        throw DivergenceError("training diverged: non-finite cross-entropy loss");
    }
    res.grads = params.zeros_like();
    auto& g = res.grads;
    auto& scratch = conv_scratch<T>();

    const int n = batch.shape[0];
    const int k = cfg.num_classes;
    Tensor<T> dlogits = predict_prob(res.logits);
    for (int i = 0; i < n; ++i) {
        dlogits.data[static_cast<std::size_t>(i) * k + labels[i]] -= T{1};
    }
    for (auto& v : dlogits.data) {
        v /= static_cast<T>(n);
    }

    Tensor<T> dfeat = layers::linear_backward(tr.features, cspan(params, L.fc_weight), dlogits, mspan(g, L.fc_weight),
                                              mspan(g, L.fc_bias));
    Tensor<T> d = layers::global_avg_pool_backward(dfeat, tr.last.shape);

    for (std::size_t bi = L.blocks.size(); bi-- > 0;) {
        const auto& bl = L.blocks[bi];
        auto& bt = tr.blocks[bi];
        layers::relu_backward_inplace(d, bt.out);
        // Residual branch.
        Tensor<T> dh2 =
            layers::batchnorm_backward(d, cspan(params, bl.bn2.gamma), bt.bn2, mspan(g, bl.bn2.gamma), mspan(g, bl.bn2.beta));
        Tensor<T> dr1;
        layers::conv3d_backward(bt.r1, cspan(params, bl.conv2.weight), bl.conv2.geom, dh2, mspan(g, bl.conv2.weight),
                                &dr1, scratch);
        layers::relu_backward_inplace(dr1, bt.r1);
        Tensor<T> dh1 = layers::batchnorm_backward(dr1, cspan(params, bl.bn1.gamma), bt.bn1, mspan(g, bl.bn1.gamma),
                                                   mspan(g, bl.bn1.beta));
        Tensor<T> din;
        layers::conv3d_backward(bt.input, cspan(params, bl.conv1.weight), bl.conv1.geom, dh1, mspan(g, bl.conv1.weight),
                                &din, scratch);
        // Shortcut.
        if (bl.down_conv) {
            Tensor<T> dhd = layers::batchnorm_backward(d, cspan(params, bl.down_bn->gamma), bt.bnd,
                                                       mspan(g, bl.down_bn->gamma), mspan(g, bl.down_bn->beta));
            Tensor<T> dsc;
            layers::conv3d_backward(bt.input, cspan(params, bl.down_conv->weight), bl.down_conv->geom, dhd,
                                    mspan(g, bl.down_conv->weight), &dsc, scratch);
            add_inplace(din, dsc);
        } else {
            add_inplace(din, d);
        }
        d = std::move(din);
    }

    Tensor<T> dact = layers::maxpool3d_backward(d, tr.stem_act.shape, tr.pool_argmax);
    layers::relu_backward_inplace(dact, tr.stem_act);
    Tensor<T> dstem = layers::batchnorm_backward(dact, cspan(params, L.stem_bn.gamma), tr.stem_bn,
                                                 mspan(g, L.stem_bn.gamma), mspan(g, L.stem_bn.beta));
    layers::conv3d_backward(batch, cspan(params, L.stem.weight), L.stem.geom, dstem, mspan(g, L.stem.weight), static_cast<Tensor<T>*>(nullptr),
                            scratch);

    collect_stats(tr.stem_bn, L.stem_bn, res.batch_stats);
    for (std::size_t bi = 0; bi < L.blocks.size(); ++bi) {
        const auto& bl = L.blocks[bi];
        collect_stats(tr.blocks[bi].bn1, bl.bn1, res.batch_stats);
        collect_stats(tr.blocks[bi].bn2, bl.bn2, res.batch_stats);
        if (bl.down_bn) {
            collect_stats(tr.blocks[bi].bnd, *bl.down_bn, res.batch_stats);
        }
    }
    return res;
}

template <typename T>
void update_running_stats(ModelParams<T>& params, const BatchNormStats<T>& stats, double momentum)
{
    for (const auto& e : stats.layers) {
        auto& rm = params.tensors[e.running_mean_index].data;
        auto& rv = params.tensors[e.running_var_index].data;
        const double unbias = e.count > 1 ? static_cast<double>(e.count) / static_cast<double>(e.count - 1) : 1.0;
        for (std::size_t c = 0; c < rm.size(); ++c) {
            rm[c] = static_cast<T>((1.0 - momentum) * rm[c] + momentum * e.mean[c]);
            rv[c] = static_cast<T>((1.0 - momentum) * rv[c] + momentum * e.var[c] * unbias);
        }
    }
}

#define RICENET_INSTANTIATE_NET(T)                                                                                    \
    template void audit_params<T>(const ModelParams<T>&, const ResNet3DConfig&);                                     \
    template ModelParams<T> init_model<T>(const ResNet3DConfig&, Rng&);                                              \
    template Tensor<T> make_batch<T>(std::span<const Sample* const>);                                                \
    template Tensor<T> make_batch<T>(const Sample&);                                                                 \
    template Tensor<T> forward<T>(const ResNet3DConfig&, const ModelParams<T>&, const Tensor<T>&, Mode);             \
    template LossAndGrads<T> backward<T>(const ResNet3DConfig&, const ModelParams<T>&, const Tensor<T>&,             \
                                         std::span<const int>);                                                      \
    template void update_running_stats<T>(ModelParams<T>&, const BatchNormStats<T>&, double);                        \
    template Tensor<T> predict_prob<T>(const Tensor<T>&);                                                            \
    template T cross_entropy<T>(const Tensor<T>&, std::span<const int>);

RICENET_INSTANTIATE_NET(float)
RICENET_INSTANTIATE_NET(double)

#undef RICENET_INSTANTIATE_NET

} // namespace ricenet
