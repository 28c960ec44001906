// Acceptance harness: one PASS/FAIL line per criterion. Tolerances are fixed here.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "../common/gradcheck.hpp"
#include "ricenet/ablation.hpp"
#include "ricenet/checkpoint.hpp"
#include "ricenet/dataset.hpp"
#include "ricenet/metrics.hpp"
#include "ricenet/occlusion.hpp"
#include "ricenet/phantom.hpp"
#include "ricenet/pipeline.hpp"
#include "ricenet/sampler.hpp"
#include "ricenet/trainer.hpp"
#include "ricenet/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ricenet;

namespace {

// Tolerances and budgets.
constexpr double kMacroF1Tol = 1e-12;
constexpr double kCrit1Seconds = 5.0;
constexpr double kGradTol = 1e-4;
constexpr int kGradDraws = 20;
constexpr double kCrit2Seconds = 120.0;
constexpr int kOverfitEpochs = 200;
constexpr double kCrit3Seconds = 600.0;
constexpr double kDoseOverEventMargin = 0.10;
constexpr double kMultimodalSlack = 0.05;
constexpr double kCrit4Seconds = 4.0 * 3600.0;
constexpr double kEnsembleSlack = 0.02;
constexpr double kFocusFraction = 0.60;
constexpr double kTopShare = 0.05;
constexpr double kHighDoseShare = 0.5;
constexpr int kFocusSubjects = 5;
constexpr double kSamplerLo = 0.49;
constexpr double kSamplerHi = 0.51;
constexpr double kZscoreTol = 1e-5;
const std::vector<std::uint64_t> kSeeds{0, 1, 2};

// Desk-scale run: the 64^3 cohort resampled to 48^3, width-8 network with a
// 3^3 stem, 30 epochs per fold at learning rate 3e-4.
const char* kAblationConfig = R"({
  "preprocess": {"target_spacing_mm": 1.3333333333333333},
  "model": {"base_width": 8, "stem_kernel": 3},
  "train": {"epochs": 30, "learning_rate": 0.0003}
})";

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string sci(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

int run_cli(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string("'") + RICENET_CLI + "' " + args + " >> '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// generate + preprocess + ablate for one seed under dir; returns the results path.
fs::path full_ablation(const fs::path& dir, std::uint64_t seed)
{
    fs::create_directories(dir);
    write_text_file(dir / "acceptance_config.json", kAblationConfig);
    const std::string base = "--config '" + (dir / "acceptance_config.json").string() + "' --seed " +
                             std::to_string(seed) + " --workdir '" + dir.string() + "' ";
    const fs::path log = dir / "cli.log";
    for (const char* step : {"generate", "preprocess", "ablate"}) {
        if (run_cli(base + step, log) != 0) {
            throw std::runtime_error(std::string("ricenet ") + step + " failed, see " + log.string());
        }
    }
    return dir / "ablation" / "ablation_results.json";
}

class Harness {
public:
    explicit Harness(fs::path workdir) : workdir_(std::move(workdir)) {}

    const AblationOutcome& seed_run(std::uint64_t seed)
    {
        auto it = runs_.find(seed);
        if (it == runs_.end()) {
            const auto t0 = Clock::now();
            const fs::path res = full_ablation(seed_dir(seed), seed);
            ablation_seconds_ += seconds_since(t0);
            it = runs_.emplace(seed, read_ablation(res)).first;
        }
        return it->second;
    }
    fs::path seed_dir(std::uint64_t seed) const { return workdir_ / ("seed-" + std::to_string(seed)); }
    const fs::path& workdir() const { return workdir_; }
    double ablation_seconds() const { return ablation_seconds_; }

private:
    fs::path workdir_;
    std::map<std::uint64_t, AblationOutcome> runs_;
    double ablation_seconds_ = 0.0;
};

double brute_macro_f1(const std::vector<int>& y, const std::vector<int>& p)
{
    double sum = 0.0;
    for (int c = 0; c < 2; ++c) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            tp += (y[i] == c && p[i] == c);
            fp += (y[i] != c && p[i] == c);
            fn += (y[i] == c && p[i] != c);
        }
        const double prec = (tp + fp) == 0 ? 0.0 : tp / (tp + fp);
        const double rec = (tp + fn) == 0 ? 0.0 : tp / (tp + fn);
        sum += (prec + rec) == 0 ? 0.0 : 2 * prec * rec / (prec + rec);
    }
    return sum / 2;
}

Outcome criterion1()
{
    const auto t0 = Clock::now();
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<int> len(1, 64);
    std::bernoulli_distribution coin(0.5);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int n = len(gen);
        std::vector<int> y(n), p(n);
        for (int i = 0; i < n; ++i) {
            y[i] = coin(gen);
            p[i] = coin(gen);
        }
        worst = std::max(worst, std::fabs(macro_f1(y, p) - brute_macro_f1(y, p)));
    }
    const double worked = macro_f1(std::vector<int>{0, 0, 0, 1, 1}, std::vector<int>{0, 0, 1, 1, 1});
    const double secs = seconds_since(t0);
    const bool ok = worst <= kMacroF1Tol && std::fabs(worked - 0.8) <= kMacroF1Tol && secs < kCrit1Seconds;
    return {ok, "max |diff| " + sci(worst) + " over 1000 pairs; worked example " + fmt(worked, 15) +
                    "; " + fmt(secs, 2) + " s"};
}

Outcome criterion2()
{
    const auto t0 = Clock::now();
    ResNet3DConfig cfg;
    cfg.in_channels = 3;
    cfg.base_width = 2;
    cfg.input_shape = {8, 8, 8};
    double worst = 0.0;
    std::string where;
    std::size_t checked = 0;
    for (int d = 0; d < kGradDraws; ++d) {
        const auto r = gradcheck::check_draw(cfg, static_cast<std::uint64_t>(d), 4);
        if (r.max_rel_error > worst) {
            worst = r.max_rel_error;
            where = "draw " + std::to_string(d) + " " + r.worst;
        }
        checked += r.checked;
    }
    const double secs = seconds_since(t0);
    return {worst < kGradTol && secs < kCrit2Seconds,
            "max relative error " + sci(worst) + " over " + std::to_string(checked) + " coordinates in " +
                std::to_string(kGradDraws) + " draws (worst: " + where + "); " + fmt(secs, 1) + " s"};
}

Outcome criterion3()
{
    const auto t0 = Clock::now();
    PhantomConfig pc;
    pc.grid_shape = {32, 32, 32};
    pc.brain_semi_axes_vox = {13, 13, 12};
    pc.cavity_radius_vox = {2.0, 3.0};
    pc.lesion_radius_vox = {1.5, 2.0};
    pc.dose_sigma_vox = {6.5, 7.5};
    LabeledSet set;
    const auto combo = ModalityCombo::from_index(7);
    for (int i = 0; i < 8; ++i) {
        Rng rng = Rng::derive({0x0F17, static_cast<std::uint64_t>(i)});
        const Label label = i % 2 ? Label::Rice : Label::Recurrence;
        const auto s = generate_subject(pc, rng, label);
        const auto p = preprocess_subject(s.post_op, s.event, s.dose, 1, PreprocessConfig{}, pc.grid_shape);
        SubjectVolumes v{{Modality::PostOp, p.post_op}, {Modality::Event, p.event}, {Modality::Dose, p.dose}};
        set.samples.push_back(stack_channels(v, combo));
        set.labels.push_back(static_cast<int>(label));
    }
    ResNet3DConfig model;
    model.in_channels = 3;
    model.base_width = 8;
    model.input_shape = pc.grid_shape;
    TrainConfig t;
    t.epochs = kOverfitEpochs;
    t.track_train_f1 = true;
    AugmentConfig aug;
    aug.enabled = false;
    int reached = 0;
    const std::array<std::uint64_t, 1> key{3};
    const auto res = fit(model, set, LabeledSet{}, combo.modalities(), t, aug, key, [&](const EpochRecord& r) {
        if (r.train_macro_f1 == 1.0) {
            reached = r.epoch;
            return false;
        }
        return true;
    });
    const double secs = seconds_since(t0);
    const double last = res.history.back().train_macro_f1;
    return {reached > 0 && secs < kCrit3Seconds,
            reached > 0 ? "training macro-F1 1.0 at epoch " + std::to_string(reached) + "; " + fmt(secs, 1) + " s"
                        : "training macro-F1 " + fmt(last) + " after " + std::to_string(res.history.size()) +
                              " epochs; " + fmt(secs, 1) + " s"};
}

double combo_mean(const std::vector<const AblationOutcome*>& runs, int combo_index)
{
    double s = 0.0;
    int n = 0;
    for (const auto* run : runs) {
        for (const auto& r : run->results) {
            if (r.combo.index() == combo_index) {
                for (double f : r.fold_val_f1) {
                    s += f;
                    ++n;
                }
            }
        }
    }
    if (n == 0) {
        throw std::runtime_error("combo " + std::to_string(combo_index) + " missing from results");
    }
    return s / n;
}

Outcome criterion4(Harness& h)
{
    std::vector<const AblationOutcome*> runs;
    for (auto seed : kSeeds) {
        runs.push_back(&h.seed_run(seed));
    }
    std::map<int, double> m;
    for (int i = 1; i <= 7; ++i) {
        m[i] = combo_mean(runs, i);
    }
    const double dose = m[3];
    const double post = m[1];
    const double event = m[2];
    const double multi = std::max({m[4], m[5], m[6], m[7]});
    const bool order = dose > post && post > event;
    const bool margin = dose - event >= kDoseOverEventMargin;
    const bool multi_ok = multi >= dose - kMultimodalSlack;
    const bool budget = h.ablation_seconds() < kCrit4Seconds;
    std::string d = "mean val macro-F1 over seeds 0-2:";
    for (int i = 1; i <= 7; ++i) {
        d += " " + ModalityCombo::from_index(i).name() + "=" + fmt(m[i], 3);
    }
    d += "; DOSE-EVENT " + fmt(dose - event, 3) + "; best multimodal - DOSE " + fmt(multi - dose, 3) + "; " +
         fmt(h.ablation_seconds() / 60.0, 1) + " min";
    return {order && margin && multi_ok && budget, d};
}

Outcome criterion5(Harness& h)
{
    bool ok = true;
    std::string d;
    for (auto seed : kSeeds) {
        const auto& run = h.seed_run(seed);
        for (const auto& r : run.results) {
            if (r.combo.index() != 7) {
                continue;
            }
            const double fold_mean = mean_of(r.fold_test_f1);
            ok = ok && r.test_f1 >= fold_mean - kEnsembleSlack;
            d += "seed " + std::to_string(seed) + ": vote " + fmt(r.test_f1, 3) + " vs fold mean " + fmt(fold_mean, 3) +
                 "; ";
        }
    }
    return {ok, d};
}

Outcome criterion6(Harness& h)
{
    h.seed_run(kSeeds.front());
    const fs::path dir = h.seed_dir(kSeeds.front());
    const auto combo = ModalityCombo::from_index(3);
    const Checkpoint model = read_checkpoint(dir / "ablation" / "combo-3" / "fold-0" / "best");
    const CohortData cohort = load_cohort(dir / "cohort" / "manifest.json");
    std::vector<double> fractions;
    std::string d;
    for (std::size_t i = 0; i < cohort.manifest.subjects.size() && fractions.size() < kFocusSubjects; ++i) {
        if (cohort.manifest.subjects[i].split != Split::Test) {
            continue;
        }
        const OcclusionMap m = occlusion_map(model.config, model.params, cohort.sample(i, combo), OcclusionConfig{});
        const Volume& dose = cohort.volumes[i].at(Modality::Dose);
        const auto dv = dose.values();
        const double dmax = *std::max_element(dv.begin(), dv.end());
        std::vector<std::pair<float, std::size_t>> mag;
        for (std::size_t k = 0; k < m.map.size(); ++k) {
            mag.emplace_back(std::fabs(m.map.values()[k]), k);
        }
        const auto top = static_cast<std::size_t>(std::ceil(kTopShare * static_cast<double>(mag.size())));
        std::partial_sort(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(top), mag.end(),
                          [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
        std::size_t hits = 0;
        for (std::size_t k = 0; k < top; ++k) {
            hits += dv[mag[k].second] >= kHighDoseShare * dmax;
        }
        fractions.push_back(static_cast<double>(hits) / static_cast<double>(top));
        d += cohort.manifest.subjects[i].subject_id + "=" + fmt(fractions.back(), 3) + " ";
    }
    if (fractions.size() < kFocusSubjects) {
        return {false, "fewer than 5 test subjects"};
    }
    const double avg = mean_of(fractions);
    return {avg >= kFocusFraction, "top-5% |dp| share in dose >= 0.5 Dmax: " + d + "mean " + fmt(avg, 3)};
}

Outcome criterion7(Harness& h)
{
    const auto& first = h.seed_run(kSeeds.front());
    const fs::path a = h.seed_dir(kSeeds.front()) / "ablation";
    const fs::path rep = h.workdir() / "seed-0-repeat";
    fs::remove_all(rep);
    const fs::path b = full_ablation(rep, kSeeds.front()).parent_path();
    bool same = true;
    for (const char* f : {"ablation_results.json", "ablation_results.csv"}) {
        same = same && read_file_bytes(a / f) == read_file_bytes(b / f);
    }
    std::set<std::string> digests;
    for (const auto& r : first.results) {
        digests.insert(r.folds_digest);
    }
    const std::string on_disk = file_digest(h.seed_dir(kSeeds.front()) / "cohort" / "folds.json");
    const bool fixed = first.results.size() == 7 && digests.size() == 1 && *digests.begin() == on_disk &&
                       first.folds_digest == on_disk;
    return {same && fixed, std::string("results files ") + (same ? "byte-identical" : "DIFFER") + "; " +
                               std::to_string(digests.size()) + " distinct folds digest(s) over " +
                               std::to_string(first.results.size()) + " combos"};
}

Outcome criterion8()
{
    std::vector<int> labels(80, 0);
    std::fill(labels.begin() + 48, labels.end(), 1);
    Rng rng = Rng::derive({0x5A3, 8});
    const auto draws = weighted_index_stream(labels, rng, 10000);
    double rice = 0;
    for (auto i : draws) {
        rice += labels[i];
    }
    const double f = rice / static_cast<double>(draws.size());
    return {f >= kSamplerLo && f <= kSamplerHi, "RICE frequency " + fmt(f, 4) + " over 10000 draws"};
}

Outcome criterion9()
{
    // z-score over the brain region of a phantom post-op volume.
    PhantomConfig pc;
    Rng rng = Rng::derive({0x2C0, 9});
    const auto s = generate_subject(pc, rng, Label::Rice);
    Volume mask = s.post_op;
    for (auto& v : mask.values()) {
        v = v != 0.0f ? 1.0f : 0.0f;
    }
    const Volume z = zscore(s.post_op, &mask);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (mask.values()[i] != 0.0f) {
            sum += z.values()[i];
            ++n;
        }
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (mask.values()[i] != 0.0f) {
            ss += (z.values()[i] - mean) * (z.values()[i] - mean);
        }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    const bool z_ok = std::fabs(mean) < kZscoreTol && std::fabs(sd - 1.0) < kZscoreTol;

    // Self-resample at the native isotropic spacing.
    bool self_ok = true;
    for (const Volume* v : {&s.post_op, &s.event, &s.dose}) {
        self_ok = self_ok && resample_isotropic(*v, pc.spacing_mm) == *v;
    }

    // Crop/pad contract on 20 random shape pairs.
    std::mt19937 gen(99);
    std::uniform_int_distribution<int> dim(1, 40);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    bool crop_ok = true;
    for (int t = 0; t < 20; ++t) {
        const Index3 in{dim(gen), dim(gen), dim(gen)};
        const Index3 out{dim(gen), dim(gen), dim(gen)};
        std::vector<float> data(voxel_count(in));
        for (auto& x : data) {
            x = static_cast<float>(val(gen));
        }
        const Volume v(in, {1, 1, 1}, {0, 0, 0}, std::move(data));
        const Volume c = center_crop_pad(v, out);
        crop_ok = crop_ok && c.shape() == out && c.spacing() == v.spacing();
    }
    return {z_ok && self_ok && crop_ok, "z-score mean " + sci(mean) + ", sd-1 " + sci(sd - 1.0) +
                                            "; self-resample " + (self_ok ? "identical" : "DIFFERS") +
                                            "; crop/pad " + (crop_ok ? "20/20 shapes" : "shape mismatch")};
}

std::size_t count_of(const std::string& s, const std::string& needle)
{
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) {
        ++n;
    }
    return n;
}

Outcome criterion10(Harness& h)
{
    h.seed_run(kSeeds.front());
    const fs::path res = h.seed_dir(kSeeds.front()) / "ablation" / "ablation_results.json";
    const fs::path out = h.workdir() / "report";
    fs::remove_all(out);
    fs::create_directories(out);
    if (run_cli("report --results '" + res.string() + "' --out '" + out.string() + "'", out / "cli.log") != 0) {
        return {false, "report command failed"};
    }
    std::istringstream csv(read_text_file(out / "ablation_results.csv"));
    std::string line;
    std::getline(csv, line);
    int rows = 0;
    bool exact = true;
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            cells.push_back(c);
        }
        if (cells.size() != 9) {
            return {false, "malformed CSV row: " + line};
        }
        std::vector<double> folds;
        for (int k = 1; k <= 5; ++k) {
            folds.push_back(std::stod(cells[k]));
        }
        double sum = 0.0;
        for (double f : folds) {
            sum += f;
        }
        const double mean = sum / 5.0;
        double sq = 0.0;
        for (double f : folds) {
            sq += (f - mean) * (f - mean);
        }
        const double sd = std::sqrt(sq / 5.0);
        exact = exact && std::stod(cells[6]) == mean && std::stod(cells[7]) == sd;
        ++rows;
    }
    const std::string svg = read_text_file(out / "figure2.svg");
    const std::size_t bars = count_of(svg, "class=\"bar-val\"") + count_of(svg, "class=\"bar-test\"");
    const std::size_t errs = count_of(svg, "class=\"errorbar\"");
    return {rows == 7 && exact && bars == 14 && errs == 7,
            std::to_string(rows) + " CSV rows, mean/sd " + (exact ? "recompute exactly" : "MISMATCH") + "; " +
                std::to_string(bars) + " bars, " + std::to_string(errs) + " error bars"};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria 1-10"};
    std::string workdir = "acceptance_work";
    std::vector<int> only;
    app.add_option("--workdir", workdir, "scratch directory for the ablation runs");
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    fs::remove_all(workdir);
    fs::create_directories(workdir);
    Harness h{fs::absolute(workdir)};

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"macro-F1 oracle", criterion1},
        {"gradient check", criterion2},
        {"overfit sanity", criterion3},
        {"ablation ordering", [&] { return criterion4(h); }},
        {"ensemble vote", [&] { return criterion5(h); }},
        {"occlusion focus", [&] { return criterion6(h); }},
        {"determinism and fold fixity", [&] { return criterion7(h); }},
        {"sampler balance", criterion8},
        {"preprocessing invariants", criterion9},
        {"report generation", [&] { return criterion10(h); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) {
            continue;
        }
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "CRITERION " << id << " " << (o.pass ? "PASS" : "FAIL") << " [" << criteria[i].first
                  << "] " << o.detail << std::endl;
    }
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
    return failed == 0 ? 0 : 1;
}
