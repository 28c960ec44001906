#include "ricenet/ablation.hpp"

#include <map>

#include "ricenet/errors.hpp"
#include "ricenet/metrics.hpp"
#include "ricenet/parallel.hpp"
#include "ricenet/report.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

namespace fs = std::filesystem;
using nlohmann::json;

EnsembleEvaluation evaluate_ensemble(const CohortData& cohort, const std::vector<Checkpoint>& models,
                                     const ModalityCombo& combo, Split split)
{
    if (models.empty()) {
        throw PreconditionError("evaluate_ensemble: no models");
    }
    EnsembleEvaluation ev;
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < cohort.manifest.subjects.size(); ++i) {
        const auto& rec = cohort.manifest.subjects[i];
        if (rec.split == split) {
            ev.subjects.push_back(rec.subject_id);
            ev.labels.push_back(cohort.label(i));
            samples.push_back(cohort.sample(i, combo));
        }
    }
    if (samples.empty()) {
        throw PreconditionError(std::string("evaluate_ensemble: no ") + split_name(split) + " subjects");
    }
    for (const auto& m : models) {
        if (m.config.in_channels != combo.channels()) {
            throw ShapeMismatchError("evaluate_ensemble: model expects " + std::to_string(m.config.in_channels) +
                                     " channels, combo " + combo.name() + " has " + std::to_string(combo.channels()));
        }
        auto p = predict_rice_prob(m.config, m.params, samples);
        std::vector<int> pred(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            pred[i] = predict_label(p[i]);
        }
        ev.model_f1.push_back(macro_f1(ev.labels, pred));
        ev.prob_rice.push_back(std::move(p));
        ev.preds.push_back(std::move(pred));
    }
    ev.votes = majority_vote(ev.preds, ev.prob_rice);
    ev.ensemble_f1 = macro_f1(ev.labels, ev.votes);
    return ev;
}

AblationOutcome run_ablation(const CohortData& cohort, const fs::path& folds_path,
                             const std::vector<ModalityCombo>& combos, const ResNet3DConfig& base_model,
                             const TrainConfig& tcfg, const AugmentConfig& acfg, const fs::path& out_dir, int workers)
{
    tcfg.validate();
    if (combos.empty()) {
        throw PreconditionError("run_ablation: no combos selected");
    }
    AblationOutcome outcome;
    outcome.seed = tcfg.seed;
    outcome.folds_digest = file_digest(folds_path);

    std::vector<FoldAssignment> per_combo;
    std::vector<std::string> digests;
    for (const auto& combo : combos) {
        digests.push_back(file_digest(folds_path));
        if (digests.back() != outcome.folds_digest) {
            throw PreconditionError("run_ablation: folds file changed before combo " + combo.name());
        }
        per_combo.push_back(read_folds(folds_path));
        check_folds_match(cohort.manifest, per_combo.back());
    }

    const std::size_t jobs = combos.size() * kNumFolds;
    std::vector<FoldRun> runs(jobs);
    parallel_for(jobs, workers, [&](std::size_t j) {
        const std::size_t c = j / kNumFolds;
        const int fold = static_cast<int>(j % kNumFolds);
        const fs::path dir = out_dir.empty() ? fs::path{}
                                             : out_dir / ("combo-" + std::to_string(combos[c].index())) /
                                                   ("fold-" + std::to_string(fold));
        try {
            runs[j] = train_fold(cohort, per_combo[c], fold, combos[c], base_model, tcfg, acfg, dir);
        } catch (const DivergenceError&) {
            throw;
        } catch (const Error& e) {
            throw PreconditionError("combo " + combos[c].name() + ", fold " + std::to_string(fold) + ": " + e.what());
        }
    });

    for (std::size_t c = 0; c < combos.size(); ++c) {
        ExperimentResult r;
        r.combo = combos[c];
        r.folds_digest = digests[c];
        std::vector<Checkpoint> models;
        for (int k = 0; k < kNumFolds; ++k) {
            const auto& run = runs[c * kNumFolds + k];
            r.fold_val_f1[k] = run.final_val_f1();
            models.push_back(
                {run.model, tcfg.ensemble_checkpoint == "best" ? run.fit.best : run.fit.final_params});
        }
        r.mean = mean_of(r.fold_val_f1);
        r.sd = population_sd(r.fold_val_f1);
        const auto ev = evaluate_ensemble(cohort, models, combos[c]);
        std::copy(ev.model_f1.begin(), ev.model_f1.end(), r.fold_test_f1.begin());
        r.test_f1 = ev.ensemble_f1;
        r.test_subjects = ev.subjects;
        r.test_labels = ev.labels;
        r.test_votes = ev.votes;
        r.test_prob_rice = ev.prob_rice;
        outcome.results.push_back(std::move(r));
    }

    if (!out_dir.empty()) {
        write_text_file(out_dir / "ablation_results.json", ablation_to_json(outcome).dump(2) + "\n");
        write_text_file(out_dir / "ablation_results.csv", results_to_csv(outcome.results));
    }
    return outcome;
}

json ablation_to_json(const AblationOutcome& outcome)
{
    json j;
    j["folds_digest"] = outcome.folds_digest;
    j["seed"] = outcome.seed;
    j["results"] = json::array();
    for (const auto& r : outcome.results) {
        json e;
        e["combo_index"] = r.combo.index();
        e["combo"] = r.combo.name();
        e["folds_digest"] = r.folds_digest;
        e["fold_val_f1"] = r.fold_val_f1;
        e["mean"] = r.mean;
        e["sd"] = r.sd;
        e["fold_test_f1"] = r.fold_test_f1;
        e["test_f1"] = r.test_f1;
        e["test_subjects"] = r.test_subjects;
        e["test_labels"] = r.test_labels;
        e["test_votes"] = r.test_votes;
        e["test_prob_rice"] = r.test_prob_rice;
        j["results"].push_back(e);
    }
    return j;
}

AblationOutcome ablation_from_json(const json& j)
{
    AblationOutcome o;
    try {
        o.folds_digest = j.value("folds_digest", "");
        o.seed = j.value("seed", std::uint64_t{0});
        for (const auto& e : j.at("results")) {
            ExperimentResult r;
            r.combo = ModalityCombo::from_index(e.at("combo_index").get<int>());
            r.folds_digest = e.value("folds_digest", "");
            r.fold_val_f1 = e.at("fold_val_f1").get<std::array<double, kNumFolds>>();
            r.mean = e.at("mean").get<double>();
            r.sd = e.at("sd").get<double>();
            r.fold_test_f1 = e.value("fold_test_f1", std::array<double, kNumFolds>{});
            r.test_f1 = e.at("test_f1").get<double>();
            r.test_subjects = e.value("test_subjects", std::vector<std::string>{});
            r.test_labels = e.value("test_labels", std::vector<int>{});
            r.test_votes = e.value("test_votes", std::vector<int>{});
            r.test_prob_rice = e.value("test_prob_rice", std::vector<std::vector<double>>{});
            o.results.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("ablation results: ") + e.what());
    }
    return o;
}

AblationOutcome read_ablation(const fs::path& path)
{
    try {
        return ablation_from_json(json::parse(read_text_file(path)));
    } catch (const json::parse_error& e) {
        throw FormatError("ablation results '" + path.string() + "': " + e.what());
    }
}

} // namespace ricenet
