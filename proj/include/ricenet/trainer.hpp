#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ricenet/adam.hpp"
#include "ricenet/augment.hpp"
#include "ricenet/dataset.hpp"
#include "ricenet/folds.hpp"
#include "ricenet/resnet3d.hpp"

namespace ricenet {

struct TrainConfig {
    int epochs = 60;
    double learning_rate = 1e-3;
    int batch_size = 4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    int folds = kNumFolds;
    // Which per-fold checkpoint feeds the test ensemble: "best" or "final".
    std::string ensemble_checkpoint = "best";
    // Also score the (un-augmented) training set every epoch.
    bool track_train_f1 = false;

    void validate() const;
    AdamHyper adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_macro_f1 = 0.0;
    double train_macro_f1 = 0.0; // only with track_train_f1
};

struct FitResult {
    ModelParams<float> best;
    ModelParams<float> final_params;
    int best_epoch = 0;
    std::vector<EpochRecord> history;
};

struct LabeledSet {
    std::vector<Sample> samples;
    std::vector<int> labels;
};

// Called after every epoch; return false to stop early.
using EpochHook = std::function<bool(const EpochRecord&)>;

// Adam + cross-entropy. One epoch is train.size() class-balanced draws,
// augmented and consumed in batches of batch_size. Validation (eval-mode
// predictions, macro-F1) runs after every epoch; the best checkpoint is the
// earliest epoch with the highest validation score. Every random stream is
// derived from (train.seed, stream_key...).
FitResult fit(const ResNet3DConfig& model_cfg, const LabeledSet& train, const LabeledSet& val,
              const std::vector<Modality>& channel_modalities, const TrainConfig& tcfg, const AugmentConfig& acfg,
              std::span<const std::uint64_t> stream_key, const EpochHook& hook = {});

// p(RICE) per sample, eval mode.
std::vector<double> predict_rice_prob(const ResNet3DConfig& cfg, const ModelParams<float>& params,
                                      std::span<const Sample> samples, int batch_size = 4);

// Network config for a combo on a cohort: in_channels and input_shape filled in.
ResNet3DConfig model_for(const ResNet3DConfig& base, const ModalityCombo& combo, const Index3& input_shape);

struct FoldRun {
    int fold = 0;
    ModalityCombo combo = ModalityCombo::from_index(7);
    ResNet3DConfig model;
    FitResult fit;
    std::vector<std::string> val_subjects;

    double final_val_f1() const { return fit.history.empty() ? 0.0 : fit.history.back().val_macro_f1; }
};

// Trains on the TRAIN subjects outside `fold` and validates on `fold`.
// When out_dir is non-empty writes history.csv, best.{json,raw} and
// final.{json,raw} there.
FoldRun train_fold(const CohortData& cohort, const FoldAssignment& folds, int fold, const ModalityCombo& combo,
                   const ResNet3DConfig& base_model, const TrainConfig& tcfg, const AugmentConfig& acfg,
                   const std::filesystem::path& out_dir = {});

std::string history_to_csv(const std::vector<EpochRecord>& history);

} // namespace ricenet
