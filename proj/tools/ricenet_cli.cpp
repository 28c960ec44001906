#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ricenet/ablation.hpp"
#include "ricenet/checkpoint.hpp"
#include "ricenet/config.hpp"
#include "ricenet/dataset.hpp"
#include "ricenet/errors.hpp"
#include "ricenet/folds.hpp"
#include "ricenet/occlusion.hpp"
#include "ricenet/phantom.hpp"
#include "ricenet/pipeline.hpp"
#include "ricenet/report.hpp"
#include "ricenet/trainer.hpp"
#include "ricenet/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ricenet;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> workdir;
};

RunConfig load_config(const Globals& g)
{
    json j = json::object();
    if (!g.config.empty()) {
        try {
            j = json::parse(read_text_file(g.config));
        } catch (const json::parse_error& e) {
            throw ConfigError("config '" + g.config + "': " + e.what());
        } catch (const IoError& e) {
            throw ConfigError(e.what());
        }
        if (!j.is_object()) {
            throw ConfigError("config: top level must be an object");
        }
    }
    if (g.seed) {
        j["seed"] = *g.seed;
    }
    if (g.workers) {
        j["workers"] = *g.workers;
    }
    if (g.workdir) {
        j["paths"]["workdir"] = *g.workdir;
    }
    return config_from_json(j);
}

void snapshot(const RunConfig& cfg, const fs::path& dir)
{
    write_text_file(dir / "config.json", config_to_json(cfg).dump(2) + "\n");
}

std::vector<ModalityCombo> parse_combos(const std::vector<std::string>& items)
{
    std::vector<ModalityCombo> out;
    for (const auto& item : items) {
        try {
            out.push_back(ModalityCombo::parse(item));
        } catch (const Error& e) {
            throw ConfigError(std::string("--combos: ") + e.what());
        }
    }
    if (out.empty()) {
        const auto all = ModalityCombo::all();
        out.assign(all.begin(), all.end());
    }
    return out;
}

void print_json(const json& j)
{
    std::cout << j.dump(2) << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Synthetic multimodal cohort generation, 3D ResNet training, modality ablation and occlusion maps"};
    app.require_subcommand(1);
    app.footer("Configuration keys (JSON file, sections as below) and their defaults:\n" + config_reference_text());

    Globals g;
    app.add_option("--config", g.config, "JSON configuration file");
    app.add_option("--seed", g.seed, "override the global seed");
    app.add_option("--workers", g.workers, "override the worker thread count");
    app.add_option("--workdir", g.workdir, "override paths.workdir");

    auto* gen = app.add_subcommand("generate", "generate a synthetic phantom cohort");
    std::string gen_out;
    gen->add_option("--out", gen_out, "output directory (default <workdir>/raw)");

    auto* pre = app.add_subcommand("preprocess", "resample, normalise and crop a generated cohort");
    std::string pre_in;
    std::string pre_out;
    pre->add_option("--manifest", pre_in, "raw cohort manifest");
    pre->add_option("--out", pre_out, "output directory (default <workdir>/cohort)");

    auto* tr = app.add_subcommand("train", "train one cross-validation fold");
    int tr_fold = 0;
    std::string tr_combo = "7";
    std::string tr_out;
    tr->add_option("--fold", tr_fold, "held-out fold 0-4")->required();
    tr->add_option("--combo", tr_combo, "modality combination (index 1-7 or name like POST_OP+DOSE)");
    tr->add_option("--out", tr_out, "output directory (default <workdir>/train/combo-<i>/fold-<k>)");

    auto* ab = app.add_subcommand("ablate", "5-fold training and test majority vote per modality combination");
    std::vector<std::string> ab_combos;
    bool ab_ref = false;
    std::string ab_out;
    ab->add_option("--combos", ab_combos, "combinations to run (default all seven)")->delimiter(',');
    ab->add_flag("--paper-reference", ab_ref, "overlay the reference scores on the chart");
    ab->add_option("--out", ab_out, "output directory (default <workdir>/ablation)");

    auto* ev = app.add_subcommand("evaluate", "majority-vote evaluation of a checkpoint set");
    std::vector<std::string> ev_ckpts;
    std::string ev_combo = "7";
    std::string ev_run;
    std::string ev_split = "TEST";
    std::string ev_out;
    ev->add_option("--checkpoint", ev_ckpts, "checkpoint base path (repeatable)");
    ev->add_option("--combo", ev_combo, "modality combination of the checkpoints");
    ev->add_option("--run", ev_run, "ablation directory; evaluates its per-fold checkpoints for --combo");
    ev->add_option("--split", ev_split, "TRAIN or TEST");
    ev->add_option("--out", ev_out, "also write the JSON result here");

    auto* oc = app.add_subcommand("occlude", "occlusion sensitivity map and overlays for one subject");
    std::string oc_subject;
    std::string oc_ckpt;
    std::string oc_combo = "7";
    std::optional<int> oc_cube;
    std::optional<int> oc_stride;
    std::optional<double> oc_fill;
    std::optional<int> oc_slice;
    std::string oc_out;
    oc->add_option("--subject", oc_subject, "subject id")->required();
    oc->add_option("--checkpoint", oc_ckpt, "checkpoint base (default <workdir>/ablation/combo-<i>/fold-0/best)");
    oc->add_option("--combo", oc_combo, "modality combination of the checkpoint");
    oc->add_option("--cube", oc_cube, "override occlusion.cube_size_vox");
    oc->add_option("--stride", oc_stride, "override occlusion.stride_vox");
    oc->add_option("--fill", oc_fill, "override occlusion.fill_value");
    oc->add_option("--slice", oc_slice, "override occlusion.slice");
    oc->add_option("--out", oc_out, "output directory (default <workdir>/occlusion/<subject>)");

    auto* rp = app.add_subcommand("report", "CSV table and bar chart from ablation results");
    std::string rp_results;
    std::string rp_out;
    bool rp_ref = false;
    rp->add_option("--results", rp_results, "ablation_results.json (default <workdir>/ablation/ablation_results.json)");
    rp->add_option("--out", rp_out, "output directory (default: beside the results file)");
    rp->add_flag("--paper-reference", rp_ref, "overlay the reference scores on the chart");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = load_config(g);
        const fs::path workdir = cfg.paths.workdir;

        if (gen->parsed()) {
            const fs::path out = gen_out.empty() ? cfg.raw_manifest_path().parent_path() : fs::path(gen_out);
            generate_cohort(cfg.phantom, cfg.counts, out, cfg.workers);
            snapshot(cfg, workdir);
            std::cout << (out / "manifest.json").string() << "\n";
        } else if (pre->parsed()) {
            const fs::path in = pre_in.empty() ? cfg.raw_manifest_path() : fs::path(pre_in);
            const fs::path out = pre_out.empty() ? cfg.manifest_path().parent_path() : fs::path(pre_out);
            const fs::path result = preprocess_cohort(in, out, cfg.preprocess, cfg.workers);
            if (result == in) {
                std::cerr << "preprocess: '" << in.string() << "' is already preprocessed; nothing to do\n";
            }
            snapshot(cfg, workdir);
            std::cout << result.string() << "\n";
        } else if (tr->parsed()) {
            const auto combo = parse_combos({tr_combo}).front();
            const fs::path out = tr_out.empty() ? workdir / "train" / ("combo-" + std::to_string(combo.index())) /
                                                      ("fold-" + std::to_string(tr_fold))
                                                : fs::path(tr_out);
            const CohortData cohort = load_cohort(cfg.manifest_path(), cfg.workers);
            const FoldAssignment folds = read_folds(cfg.folds_path());
            const FoldRun run = train_fold(cohort, folds, tr_fold, combo, cfg.model, cfg.train, cfg.augment, out);
            snapshot(cfg, out);
            print_json({{"combo", combo.name()},
                        {"fold", tr_fold},
                        {"final_val_macro_f1", run.final_val_f1()},
                        {"best_epoch", run.fit.best_epoch},
                        {"out", out.string()}});
        } else if (ab->parsed()) {
            const auto combos = parse_combos(ab_combos);
            const fs::path out = ab_out.empty() ? workdir / "ablation" : fs::path(ab_out);
            const CohortData cohort = load_cohort(cfg.manifest_path(), cfg.workers);
            const AblationOutcome res =
                run_ablation(cohort, cfg.folds_path(), combos, cfg.model, cfg.train, cfg.augment, out, cfg.workers);
            emit_report(res.results, out, ab_ref);
            snapshot(cfg, out);
            std::cout << (out / "ablation_results.json").string() << "\n";
        } else if (ev->parsed()) {
            const auto combo = parse_combos({ev_combo}).front();
            Split split;
            try {
                split = parse_split(ev_split);
            } catch (const Error& e) {
                throw ConfigError(std::string("--split: ") + e.what());
            }
            std::vector<fs::path> bases(ev_ckpts.begin(), ev_ckpts.end());
            if (!ev_run.empty()) {
                for (int k = 0; k < kNumFolds; ++k) {
                    bases.push_back(fs::path(ev_run) / ("combo-" + std::to_string(combo.index())) /
                                    ("fold-" + std::to_string(k)) / cfg.train.ensemble_checkpoint);
                }
            }
            if (bases.empty()) {
                throw ConfigError("evaluate: give --checkpoint or --run");
            }
            std::vector<Checkpoint> models;
            for (const auto& b : bases) {
                models.push_back(read_checkpoint(b));
            }
            const CohortData cohort = load_cohort(cfg.manifest_path(), cfg.workers);
            const auto e = evaluate_ensemble(cohort, models, combo, split);
            const json j{{"combo", combo.name()},       {"split", split_name(split)},
                         {"subjects", e.subjects},      {"labels", e.labels},
                         {"votes", e.votes},            {"model_macro_f1", e.model_f1},
                         {"ensemble_macro_f1", e.ensemble_f1}, {"prob_rice", e.prob_rice}};
            if (!ev_out.empty()) {
                write_text_file(ev_out, j.dump(2) + "\n");
            }
            print_json(j);
        } else if (oc->parsed()) {
            if (oc_cube) {
                cfg.occlusion.map.cube_size_vox = *oc_cube;
            }
            if (oc_stride) {
                cfg.occlusion.map.stride_vox = *oc_stride;
            }
            if (oc_fill) {
                cfg.occlusion.map.fill_value = *oc_fill;
            }
            if (oc_slice) {
                cfg.occlusion.slice = *oc_slice;
            }
            cfg.occlusion.map.validate();
            const auto combo = parse_combos({oc_combo}).front();
            const fs::path ckpt = oc_ckpt.empty() ? workdir / "ablation" / ("combo-" + std::to_string(combo.index())) /
                                                        "fold-0" / "best"
                                                  : fs::path(oc_ckpt);
            const fs::path out = oc_out.empty() ? workdir / "occlusion" / oc_subject : fs::path(oc_out);
            const Checkpoint model = read_checkpoint(ckpt);
            const CohortData cohort = load_cohort(cfg.manifest_path(), cfg.workers);
            const std::size_t idx = cohort.index_of(oc_subject);
            OcclusionMap m =
                occlusion_map(model.config, model.params, cohort.sample(idx, combo), cfg.occlusion.map, cfg.workers);
            m.subject_id = oc_subject;
            m.model_id = ckpt.string();
            write_occlusion_map(m, out / "occlusion_map.json");

            int slice = cfg.occlusion.slice;
            if (slice < 0) {
                double best = -1.0;
                const auto& sh = m.map.shape();
                for (int z = 0; z < sh[2]; ++z) {
                    double s = 0.0;
                    for (int y = 0; y < sh[1]; ++y) {
                        for (int x = 0; x < sh[0]; ++x) {
                            s += std::fabs(m.map.at(x, y, z));
                        }
                    }
                    if (s > best) {
                        best = s;
                        slice = z;
                    }
                }
            }
            for (Modality mod : kAllModalities) {
                overlay_export(m, cohort.volumes[idx].at(mod), slice,
                               out / (std::string(modality_key(mod)) + "_overlay.ppm"), cfg.occlusion.opacity);
            }
            snapshot(cfg, out);
            print_json({{"subject", oc_subject},
                        {"target_class", m.target_class},
                        {"baseline_prob", m.baseline_prob},
                        {"slice", slice},
                        {"out", out.string()}});
        } else if (rp->parsed()) {
            const fs::path in =
                rp_results.empty() ? workdir / "ablation" / "ablation_results.json" : fs::path(rp_results);
            const fs::path out = rp_out.empty() ? in.parent_path() : fs::path(rp_out);
            const auto res = read_ablation(in);
            emit_report(res.results, out, rp_ref);
            std::cout << (out / "figure2.svg").string() << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << json{{"status", "error"}, {"kind", "config"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"status", "error"}, {"kind", "operation"}, {"message", e.what()}}.dump() << "\n";
        return 3;
    }
    return 0;
}
