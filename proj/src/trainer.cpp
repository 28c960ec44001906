#include "ricenet/trainer.hpp"

#include <cstdio>
#include <limits>

#include "ricenet/checkpoint.hpp"
#include "ricenet/errors.hpp"
#include "ricenet/metrics.hpp"
#include "ricenet/sampler.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

namespace {

Rng derive_with(std::span<const std::uint64_t> key, std::initializer_list<std::uint64_t> extra)
{
    std::vector<std::uint64_t> k(key.begin(), key.end());
    k.insert(k.end(), extra);
    return Rng::derive(k);
}

std::string fmt_g17(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double score(const ResNet3DConfig& cfg, const ModelParams<float>& params, const LabeledSet& set, int batch)
{
    const auto p = predict_rice_prob(cfg, params, set.samples, batch);
    std::vector<int> pred(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        pred[i] = predict_label(p[i]);
    }
    return macro_f1(set.labels, pred);
}

} // namespace

void TrainConfig::validate() const
{
    if (epochs < 1) {
        throw ConfigError("train.epochs must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("train.learning_rate must be > 0");
    }
    if (batch_size < 1) {
        throw ConfigError("train.batch_size must be >= 1");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("train.beta1/beta2 must be in [0,1)");
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("train.epsilon must be > 0");
    }
    if (folds != kNumFolds) {
        throw ConfigError("train.folds is fixed at 5");
    }
    if (ensemble_checkpoint != "best" && ensemble_checkpoint != "final") {
        throw ConfigError("train.ensemble_checkpoint must be 'best' or 'final'");
    }
}

std::vector<double> predict_rice_prob(const ResNet3DConfig& cfg, const ModelParams<float>& params,
                                      std::span<const Sample> samples, int batch_size)
{
    std::vector<double> out;
    out.reserve(samples.size());
    for (std::size_t b = 0; b < samples.size(); b += static_cast<std::size_t>(batch_size)) {
        const std::size_t e = std::min(samples.size(), b + static_cast<std::size_t>(batch_size));
        std::vector<const Sample*> ptrs;
        for (std::size_t i = b; i < e; ++i) {
            ptrs.push_back(&samples[i]);
        }
        const auto batch = make_batch<float>(std::span<const Sample* const>(ptrs));
        const auto prob = predict_prob(forward(cfg, params, batch, Mode::Eval));
        for (std::size_t i = 0; i < ptrs.size(); ++i) {
            out.push_back(prob.data[i * 2 + 1]);
        }
    }
    return out;
}

FitResult fit(const ResNet3DConfig& model_cfg, const LabeledSet& train, const LabeledSet& val,
              const std::vector<Modality>& channel_modalities, const TrainConfig& tcfg, const AugmentConfig& acfg,
              std::span<const std::uint64_t> stream_key, const EpochHook& hook)
{
    tcfg.validate();
    acfg.validate();
    model_cfg.validate();
    if (train.samples.size() != train.labels.size() || val.samples.size() != val.labels.size()) {
        throw SizeMismatchError("fit: samples and labels differ in length");
    }
    if (train.samples.empty()) {
        throw PreconditionError("fit: empty training set");
    }

    std::vector<std::uint64_t> key{tcfg.seed};
    key.insert(key.end(), stream_key.begin(), stream_key.end());

    Rng init_rng = derive_with(key, {1});
    FitResult res;
    ModelParams<float> params = init_model<float>(model_cfg, init_rng);
    AdamState<float> state = adam_init(params);
    const AdamHyper hyper = tcfg.adam();
    double best_score = -std::numeric_limits<double>::infinity();

    const std::size_t n = train.samples.size();
    const auto bs = static_cast<std::size_t>(tcfg.batch_size);
    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        Rng srng = derive_with(key, {2, static_cast<std::uint64_t>(epoch)});
        const auto draws = weighted_index_stream(train.labels, srng, n);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < n; b += bs) {
            const std::size_t e = std::min(n, b + bs);
            std::vector<Sample> augmented;
            augmented.reserve(e - b);
            std::vector<const Sample*> ptrs;
            std::vector<int> labels;
            for (std::size_t j = b; j < e; ++j) {
                const Sample& src = train.samples[draws[j]];
                if (acfg.enabled) {
                    Rng arng = derive_with(key, {3, static_cast<std::uint64_t>(epoch), j});
                    augmented.push_back(augment_sample(src, channel_modalities, arng, acfg));
                    ptrs.push_back(&augmented.back());
                } else {
                    ptrs.push_back(&src);
                }
                labels.push_back(train.labels[draws[j]]);
            }
            const auto batch = make_batch<float>(std::span<const Sample* const>(ptrs));
            auto lg = backward(model_cfg, params, batch, std::span<const int>(labels));
            adam_step(params, lg.grads, state, hyper);
            update_running_stats(params, lg.batch_stats, model_cfg.bn_momentum);
            loss_sum += static_cast<double>(lg.loss) * static_cast<double>(e - b);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.val_macro_f1 = val.samples.empty() ? 0.0 : score(model_cfg, params, val, tcfg.batch_size);
        if (tcfg.track_train_f1) {
            rec.train_macro_f1 = score(model_cfg, params, train, tcfg.batch_size);
        }
        res.history.push_back(rec);
        if (rec.val_macro_f1 > best_score || val.samples.empty()) {
            best_score = rec.val_macro_f1;
            res.best = params;
            res.best_epoch = epoch;
        }
        if (hook && !hook(rec)) {
            break;
        }
    }
    res.final_params = std::move(params);
    return res;
}

ResNet3DConfig model_for(const ResNet3DConfig& base, const ModalityCombo& combo, const Index3& input_shape)
{
    ResNet3DConfig cfg = base;
    cfg.in_channels = combo.channels();
    cfg.input_shape = input_shape;
    cfg.validate();
    return cfg;
}

std::string history_to_csv(const std::vector<EpochRecord>& history)
{
    std::string s = "epoch,train_loss,val_macro_f1\n";
    for (const auto& r : history) {
        s += std::to_string(r.epoch) + "," + fmt_g17(r.train_loss) + "," + fmt_g17(r.val_macro_f1) + "\n";
    }
    return s;
}

FoldRun train_fold(const CohortData& cohort, const FoldAssignment& folds, int fold, const ModalityCombo& combo,
                   const ResNet3DConfig& base_model, const TrainConfig& tcfg, const AugmentConfig& acfg,
                   const std::filesystem::path& out_dir)
{
    if (fold < 0 || fold >= kNumFolds) {
        throw PreconditionError("train_fold: fold must be in [0, 5)");
    }
    check_folds_match(cohort.manifest, folds);

    FoldRun run;
    run.fold = fold;
    run.combo = combo;
    run.model = model_for(base_model, combo, cohort.manifest.crop_shape);

    LabeledSet train;
    LabeledSet val;
    for (std::size_t i = 0; i < cohort.manifest.subjects.size(); ++i) {
        const auto& rec = cohort.manifest.subjects[i];
        if (rec.split != Split::Train) {
            continue;
        }
        LabeledSet& dst = folds.fold_of.at(rec.subject_id) == fold ? val : train;
        dst.samples.push_back(cohort.sample(i, combo));
        dst.labels.push_back(cohort.label(i));
        if (&dst == &val) {
            run.val_subjects.push_back(rec.subject_id);
        }
    }

    const std::array<std::uint64_t, 3> key{0xF17ull, static_cast<std::uint64_t>(combo.index()),
                                           static_cast<std::uint64_t>(fold)};
    try {
        run.fit = fit(run.model, train, val, combo.modalities(), tcfg, acfg, key);
    } catch (const DivergenceError& e) {
        throw DivergenceError("combo " + combo.name() + ", fold " + std::to_string(fold) + ": " + e.what());
    }

    if (!out_dir.empty()) {
        write_text_file(out_dir / "history.csv", history_to_csv(run.fit.history));
        write_checkpoint({run.model, run.fit.best}, out_dir / "best");
        write_checkpoint({run.model, run.fit.final_params}, out_dir / "final");
    }
    return run;
}

} // namespace ricenet
