#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ricenet/checkpoint.hpp"
#include "ricenet/dataset.hpp"
#include "ricenet/trainer.hpp"

namespace ricenet {

// Test-split predictions of a set of models and their majority vote.
struct EnsembleEvaluation {
    std::vector<std::string> subjects;
    std::vector<int> labels;
    std::vector<std::vector<double>> prob_rice; // [model][subject]
    std::vector<std::vector<int>> preds;        // [model][subject]
    std::vector<double> model_f1;
    std::vector<int> votes;
    double ensemble_f1 = 0.0;
};

EnsembleEvaluation evaluate_ensemble(const CohortData& cohort, const std::vector<Checkpoint>& models,
                                     const ModalityCombo& combo, Split split = Split::Test);

struct ExperimentResult {
    ModalityCombo combo = ModalityCombo::from_index(7);
    std::string folds_digest; // of the folds file as read for this combo
    std::array<double, kNumFolds> fold_val_f1{};
    double mean = 0.0;
    double sd = 0.0; // population
    std::array<double, kNumFolds> fold_test_f1{};
    double test_f1 = 0.0;
    std::vector<std::string> test_subjects;
    std::vector<int> test_labels;
    std::vector<int> test_votes;
    std::vector<std::vector<double>> test_prob_rice;
};

struct AblationOutcome {
    std::string folds_digest;
    std::uint64_t seed = 0;
    std::vector<ExperimentResult> results;
};

// For each combo: five fold trainings against the fixed folds file, then the
// five selected checkpoints vote on the TEST split. Folds are read (and
// hash-checked) per combo and never regenerated. Fold runs are written to
// out_dir/combo-<i>/fold-<k>/, results to out_dir/ablation_results.{json,csv}
// when out_dir is non-empty. Output is independent of `workers`.
AblationOutcome run_ablation(const CohortData& cohort, const std::filesystem::path& folds_path,
                             const std::vector<ModalityCombo>& combos, const ResNet3DConfig& base_model,
                             const TrainConfig& tcfg, const AugmentConfig& acfg, const std::filesystem::path& out_dir,
                             int workers = 1);

nlohmann::json ablation_to_json(const AblationOutcome& outcome);
AblationOutcome ablation_from_json(const nlohmann::json& j);
AblationOutcome read_ablation(const std::filesystem::path& path);

} // namespace ricenet
