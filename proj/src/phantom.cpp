#include "ricenet/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "ricenet/errors.hpp"
#include "ricenet/folds.hpp"
#include "ricenet/parallel.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kMaxGeometryAttempts = 32;
constexpr double kCavityIntensity = 0.2;
constexpr double kRimIntensity = 1.6;
constexpr double kLesionBoost = 0.8;
constexpr double kRiceDoseFraction = 0.8;

void check_range(const Range& r, const char* name, bool positive)
{
    if (!(r.lo <= r.hi) || (positive && !(r.lo > 0.0))) {
        throw ConfigError(std::string("phantom.") + name + ": range must be ordered" + (positive ? " and positive" : ""));
    }
}

struct Texture {
    struct Wave {
        Vec3 k;
        double phase;
    };
    std::array<Wave, 3> waves;
    double amplitude;

    double at(int x, int y, int z) const
    {
        double s = 0.0;
        for (const auto& w : waves) {
            s += std::cos(w.k[0] * x + w.k[1] * y + w.k[2] * z + w.phase);
        }
        return amplitude * s / 3.0;
    }
};

Texture draw_texture(const PhantomConfig& cfg, Rng& rng)
{
    Texture t{};
    t.amplitude = cfg.texture_amplitude;
    for (auto& w : t.waves) {
        for (int a = 0; a < 3; ++a) {
            const double cycles = rng.uniform(0.5, 3.0);
            w.k[a] = 2.0 * std::numbers::pi * cycles / cfg.grid_shape[a];
        }
        w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return t;
}

double draw_thickness(const NormalParams& p, Rng& rng)
{
    return std::max(0.5, rng.normal(p.mean, p.sd));
}

struct Geometry {
    Vec3 brain_center;
    Index3 cavity_center;
    double cavity_radius;
    double dose_sigma;
    Vec3 anisotropy;
    double dmax;
};

double dist(const Index3& a, int x, int y, int z)
{
    const double dx = x - a[0];
    const double dy = y - a[1];
    const double dz = z - a[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool inside_brain(const PhantomConfig& cfg, const Vec3& c, int x, int y, int z)
{
    const double ex = (x - c[0]) / cfg.brain_semi_axes_vox[0];
    const double ey = (y - c[1]) / cfg.brain_semi_axes_vox[1];
    const double ez = (z - c[2]) / cfg.brain_semi_axes_vox[2];
    return ex * ex + ey * ey + ez * ez <= 1.0;
}

double dose_at(const Geometry& g, int x, int y, int z)
{
    double q = 0.0;
    const std::array<int, 3> p{x, y, z};
    for (int a = 0; a < 3; ++a) {
        const double s = (p[a] - g.cavity_center[a]) / (g.dose_sigma * g.anisotropy[a]);
        q += s * s;
    }
    return g.dmax * std::exp(-0.5 * q);
}

// Tissue + cavity + enhancing rim, without noise.
Volume render_anatomy(const PhantomConfig& cfg, const Geometry& g, const Texture& tex, double rim)
{
    const Vec3 spacing{cfg.spacing_mm, cfg.spacing_mm, cfg.spacing_mm};
    auto vol = Volume::filled(cfg.grid_shape, spacing, {0.0, 0.0, 0.0});
    for (int z = 0; z < cfg.grid_shape[2]; ++z) {
        for (int y = 0; y < cfg.grid_shape[1]; ++y) {
            for (int x = 0; x < cfg.grid_shape[0]; ++x) {
                if (!inside_brain(cfg, g.brain_center, x, y, z)) {
                    continue;
                }
                const double d = dist(g.cavity_center, x, y, z);
                double v = 1.0 + tex.at(x, y, z);
                if (d <= g.cavity_radius) {
                    v = kCavityIntensity;
                } else if (d <= g.cavity_radius + rim) {
                    v = kRimIntensity;
                }
                vol.at(x, y, z) = static_cast<float>(v);
            }
        }
    }
    return vol;
}

void add_brain_noise(Volume& vol, const PhantomConfig& cfg, const Vec3& center, Rng& rng)
{
    for (int z = 0; z < cfg.grid_shape[2]; ++z) {
        for (int y = 0; y < cfg.grid_shape[1]; ++y) {
            for (int x = 0; x < cfg.grid_shape[0]; ++x) {
                if (inside_brain(cfg, center, x, y, z)) {
                    vol.at(x, y, z) += static_cast<float>(rng.normal(0.0, cfg.noise_sigma));
                }
            }
        }
    }
}

// RICE lesions sit in the >= 80% isodose outside the cavity; recurrences in
// the annulus hugging the cavity. A subject borrowing the other class's
// placement keeps its own label constraint (RICE stays in high dose).
std::vector<Index3> lesion_candidates(const PhantomConfig& cfg, const Geometry& g, Label label, bool other_class)
{
    const bool annulus = (label == Label::Recurrence) != other_class;
    const bool need_high_dose = label == Label::Rice || !annulus;
    std::vector<Index3> out;
    for (int z = 0; z < cfg.grid_shape[2]; ++z) {
        for (int y = 0; y < cfg.grid_shape[1]; ++y) {
            for (int x = 0; x < cfg.grid_shape[0]; ++x) {
                if (!inside_brain(cfg, g.brain_center, x, y, z)) {
                    continue;
                }
                const double d = dist(g.cavity_center, x, y, z);
                if (d <= g.cavity_radius) {
                    continue;
                }
                if (annulus && d > g.cavity_radius + cfg.recurrence_margin_vox) {
                    continue;
                }
                if (need_high_dose && dose_at(g, x, y, z) < kRiceDoseFraction * g.dmax) {
                    continue;
                }
                out.push_back({x, y, z});
            }
        }
    }
    return out;
}

} // namespace

void PhantomConfig::validate() const
{
    for (int a = 0; a < 3; ++a) {
        if (grid_shape[a] < 8) {
            throw ConfigError("phantom.grid_shape: every axis must be >= 8");
        }
        const double c = (grid_shape[a] - 1) / 2.0;
        if (!(brain_semi_axes_vox[a] > 0.0) || c - brain_semi_axes_vox[a] < 2.0) {
            throw ConfigError("phantom.brain_semi_axes_vox: brain ellipsoid must fit the grid with a 2-voxel margin");
        }
    }
    if (!(spacing_mm > 0.0)) {
        throw ConfigError("phantom.spacing_mm must be > 0");
    }
    check_range(cavity_radius_vox, "cavity_radius_vox", true);
    check_range(lesion_radius_vox, "lesion_radius_vox", true);
    check_range(dose_sigma_vox, "dose_sigma_vox", true);
    check_range(dose_anisotropy, "dose_anisotropy", true);
    for (const auto* p : {&dmax_gy_recurrence, &dmax_gy_rice, &rim_thickness_recurrence_vox, &rim_thickness_rice_vox}) {
        if (!(p->sd >= 0.0) || !(p->mean > 0.0)) {
            throw ConfigError("phantom: class-conditional distributions need mean > 0 and sd >= 0");
        }
    }
    if (!(lesion_distance_overlap >= 0.0 && lesion_distance_overlap <= 1.0)) {
        throw ConfigError("phantom.lesion_distance_overlap must be in [0,1]");
    }
    if (!(noise_sigma >= 0.0)) {
        throw ConfigError("phantom.noise_sigma must be >= 0");
    }
    if (!(single_fraction_probability >= 0.0 && single_fraction_probability <= 1.0) || fractions_per_course < 1) {
        throw ConfigError("phantom: fraction settings out of range");
    }
    if (!(recurrence_margin_vox > 0.0)) {
        throw ConfigError("phantom.recurrence_margin_vox must be > 0");
    }
}

PhantomSubject generate_subject(const PhantomConfig& cfg, Rng& rng, Label label)
{
    cfg.validate();
    const Vec3 brain_center{(cfg.grid_shape[0] - 1) / 2.0, (cfg.grid_shape[1] - 1) / 2.0,
                            (cfg.grid_shape[2] - 1) / 2.0};

    const Texture tex = draw_texture(cfg, rng);
    const auto& dmax_dist = label == Label::Rice ? cfg.dmax_gy_rice : cfg.dmax_gy_recurrence;
    const auto& rim_dist = label == Label::Rice ? cfg.rim_thickness_rice_vox : cfg.rim_thickness_recurrence_vox;

    for (int attempt = 0; attempt < kMaxGeometryAttempts; ++attempt) {
        Geometry g{};
        g.brain_center = brain_center;
        Vec3 u{};
        do {
            for (auto& c : u) {
                c = rng.uniform(-1.0, 1.0);
            }
        } while (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] > 1.0);
        for (int a = 0; a < 3; ++a) {
            g.cavity_center[a] = static_cast<int>(std::lround(brain_center[a] + 0.4 * cfg.brain_semi_axes_vox[a] * u[a]));
        }
        g.cavity_radius = cfg.cavity_radius_vox.draw(rng);
        g.dose_sigma = cfg.dose_sigma_vox.draw(rng);
        for (auto& k : g.anisotropy) {
            k = cfg.dose_anisotropy.draw(rng);
        }
        g.dmax = std::max(1.0, rng.normal(dmax_dist.mean, dmax_dist.sd));
        const double rim = draw_thickness(rim_dist, rng);
        // Event-time rim is drawn from the pooled class mixture: no label signal.
        const auto& pooled = rng.bernoulli(0.5) ? cfg.rim_thickness_rice_vox : cfg.rim_thickness_recurrence_vox;
        const double event_rim = draw_thickness(pooled, rng);
        const double lesion_radius = cfg.lesion_radius_vox.draw(rng);
        const bool other_class = rng.bernoulli(cfg.lesion_distance_overlap / 2.0);

        const auto candidates = lesion_candidates(cfg, g, label, other_class);
        if (candidates.empty()) {
            continue;
        }
        const auto lesion = candidates[static_cast<std::size_t>(
            rng.integer(0, static_cast<std::int64_t>(candidates.size()) - 1))];

        Volume post_op = render_anatomy(cfg, g, tex, rim);
        add_brain_noise(post_op, cfg, brain_center, rng);

        Volume event = render_anatomy(cfg, g, tex, event_rim);
        for (int z = 0; z < cfg.grid_shape[2]; ++z) {
            for (int y = 0; y < cfg.grid_shape[1]; ++y) {
                for (int x = 0; x < cfg.grid_shape[0]; ++x) {
                    if (inside_brain(cfg, brain_center, x, y, z) && dist(lesion, x, y, z) <= lesion_radius) {
                        event.at(x, y, z) += static_cast<float>(kLesionBoost);
                    }
                }
            }
        }
        add_brain_noise(event, cfg, brain_center, rng);

        auto dose = Volume::filled(cfg.grid_shape, post_op.spacing(), post_op.origin());
        for (int z = 0; z < cfg.grid_shape[2]; ++z) {
            for (int y = 0; y < cfg.grid_shape[1]; ++y) {
                for (int x = 0; x < cfg.grid_shape[0]; ++x) {
                    dose.at(x, y, z) = static_cast<float>(dose_at(g, x, y, z));
                }
            }
        }

        SubjectTruth truth;
        truth.cavity_center_vox = g.cavity_center;
        truth.isocenter_vox = g.cavity_center;
        truth.lesion_center_vox = lesion;
        truth.dmax_gy = g.dmax;
        truth.dose_at_lesion_gy = dose_at(g, lesion[0], lesion[1], lesion[2]);
        truth.label = label;
        truth.cavity_radius_vox = g.cavity_radius;
        truth.rim_thickness_vox = rim;
        truth.event_rim_thickness_vox = event_rim;
        truth.lesion_radius_vox = lesion_radius;
        truth.dose_sigma_vox = g.dose_sigma;
        truth.dose_anisotropy = g.anisotropy;
        truth.lesion_from_other_class = other_class;
        return PhantomSubject{std::move(post_op), std::move(event), std::move(dose), truth};
    }
    throw GenerationError(std::string("phantom: no voxel satisfies the ") +
                          (label == Label::Rice ? "RICE high-dose (>= 0.8 D_max, outside cavity)"
                                                : "recurrence cavity-margin") +
                          " lesion constraint after " + std::to_string(kMaxGeometryAttempts) + " attempts");
}

std::string truth_to_json_text(const SubjectTruth& t)
{
    json j;
    j["cavity_center_vox"] = t.cavity_center_vox;
    j["lesion_center_vox"] = t.lesion_center_vox;
    j["isocenter_vox"] = t.isocenter_vox;
    j["dmax_gy"] = t.dmax_gy;
    j["dose_at_lesion_gy"] = t.dose_at_lesion_gy;
    j["label"] = label_name(t.label);
    j["cavity_radius_vox"] = t.cavity_radius_vox;
    j["rim_thickness_vox"] = t.rim_thickness_vox;
    j["event_rim_thickness_vox"] = t.event_rim_thickness_vox;
    j["lesion_radius_vox"] = t.lesion_radius_vox;
    j["dose_sigma_vox"] = t.dose_sigma_vox;
    j["dose_anisotropy"] = t.dose_anisotropy;
    j["lesion_from_other_class"] = t.lesion_from_other_class;
    return j.dump(2) + "\n";
}

SubjectTruth read_truth(const fs::path& path)
{
    const auto j = json::parse(read_text_file(path));
    SubjectTruth t;
    t.cavity_center_vox = j.at("cavity_center_vox").get<Index3>();
    t.lesion_center_vox = j.at("lesion_center_vox").get<Index3>();
    t.isocenter_vox = j.at("isocenter_vox").get<Index3>();
    t.dmax_gy = j.at("dmax_gy").get<double>();
    t.dose_at_lesion_gy = j.at("dose_at_lesion_gy").get<double>();
    t.label = parse_label(j.at("label").get<std::string>());
    t.cavity_radius_vox = j.at("cavity_radius_vox").get<double>();
    t.rim_thickness_vox = j.at("rim_thickness_vox").get<double>();
    t.event_rim_thickness_vox = j.at("event_rim_thickness_vox").get<double>();
    t.lesion_radius_vox = j.at("lesion_radius_vox").get<double>();
    t.dose_sigma_vox = j.at("dose_sigma_vox").get<double>();
    t.dose_anisotropy = j.at("dose_anisotropy").get<Vec3>();
    t.lesion_from_other_class = j.at("lesion_from_other_class").get<bool>();
    return t;
}

CohortManifest generate_cohort(const PhantomConfig& cfg, const CohortCounts& counts, const fs::path& out_dir,
                               int workers)
{
    cfg.validate();
    if (counts.train_recurrence < 0 || counts.train_rice < 0 || counts.test_recurrence < 0 || counts.test_rice < 0) {
        throw PreconditionError("generate_cohort: subject counts must be >= 0");
    }

    struct Plan {
        Label label;
        Split split;
    };
    std::vector<Plan> plan;
    plan.insert(plan.end(), counts.train_recurrence, {Label::Recurrence, Split::Train});
    plan.insert(plan.end(), counts.train_rice, {Label::Rice, Split::Train});
    plan.insert(plan.end(), counts.test_recurrence, {Label::Recurrence, Split::Test});
    plan.insert(plan.end(), counts.test_rice, {Label::Rice, Split::Test});

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create cohort directory '" + out_dir.string() + "': " + ec.message());
    }

    CohortManifest manifest;
    manifest.seed = cfg.seed;
    manifest.target_spacing_mm = cfg.spacing_mm;
    manifest.crop_shape = cfg.grid_shape;
    manifest.subjects.resize(plan.size());

    parallel_for(plan.size(), workers, [&](std::size_t i) {
        char id[32];
        std::snprintf(id, sizeof id, "sub-%03zu", i);
        Rng rng = Rng::derive({cfg.seed, static_cast<std::uint64_t>(i)});
        auto subj = generate_subject(cfg, rng, plan[i].label);

        SubjectRecord rec;
        rec.subject_id = id;
        rec.label = plan[i].label;
        rec.split = plan[i].split;
        Volume stored_dose = subj.dose;
        if (rng.bernoulli(cfg.single_fraction_probability)) {
            // Only a single-fraction plan is on file for this subject.
            rec.n_fractions = cfg.fractions_per_course;
            std::vector<float> per_fraction(subj.dose.values().begin(), subj.dose.values().end());
            for (auto& v : per_fraction) {
                v /= static_cast<float>(rec.n_fractions);
            }
            stored_dose = Volume(subj.dose.shape(), subj.dose.spacing(), subj.dose.origin(), std::move(per_fraction));
        }

        const fs::path rel = fs::path("subjects") / id;
        for (auto m : kAllModalities) {
            rec.channel_paths[m] = (rel / modality_key(m)).generic_string();
        }
        write_volume(subj.post_op, out_dir / rel / "post_op");
        write_volume(subj.event, out_dir / rel / "event");
        write_volume(stored_dose, out_dir / rel / "dose");
        write_text_file(out_dir / rel / "truth.json", truth_to_json_text(subj.truth));
        manifest.subjects[i] = std::move(rec);
    });

    if (counts.train_recurrence + counts.train_rice > 0) {
        const auto folds = make_folds(manifest, cfg.seed);
        for (auto& s : manifest.subjects) {
            if (s.split == Split::Train) {
                s.fold = folds.fold_of.at(s.subject_id);
            }
        }
        write_folds(folds, out_dir / "folds.json");
    }
    write_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

} // namespace ricenet
