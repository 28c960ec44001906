#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "ricenet/errors.hpp"
#include "ricenet/pipeline.hpp"
#include "ricenet/preprocess.hpp"

using namespace ricenet;

namespace {

double mean_over(const Volume& v, const Volume* mask)
{
    double s = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!mask || mask->values()[i] != 0.0f) {
            s += v.values()[i];
            ++n;
        }
    }
    return s / n;
}

double sd_over(const Volume& v, const Volume* mask)
{
    const double m = mean_over(v, mask);
    double s = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!mask || mask->values()[i] != 0.0f) {
            s += (v.values()[i] - m) * (v.values()[i] - m);
            ++n;
        }
    }
    return std::sqrt(s / n);
}

} // namespace

TEST_CASE("zscore of {1,2,3} uses the population sd")
{
    const Volume v({3, 1, 1}, {1, 1, 1}, {0, 0, 0}, {1.0f, 2.0f, 3.0f});
    const Volume z = zscore(v);
    CHECK(z.values()[0] == doctest::Approx(-1.224744871391589).epsilon(1e-6));
    CHECK(z.values()[1] == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(z.values()[2] == doctest::Approx(1.224744871391589).epsilon(1e-6));
}

TEST_CASE("zscore statistics over the mask region")
{
    const Volume v = testutil::random_volume({12, 10, 8}, 11, 2.0, 9.0);
    Volume mask = Volume::filled(v.shape(), v.spacing(), v.origin());
    for (int z = 2; z < 6; ++z) {
        for (int y = 1; y < 8; ++y) {
            for (int x = 3; x < 11; ++x) {
                mask.at(x, y, z) = 1.0f;
            }
        }
    }
    const Volume z = zscore(v, &mask);
    CHECK(std::fabs(mean_over(z, &mask)) < 1e-5);
    CHECK(std::fabs(sd_over(z, &mask) - 1.0) < 1e-5);
    // Voxels outside the mask are transformed too.
    const double m = mean_over(v, &mask);
    const double s = sd_over(v, &mask);
    CHECK(z.at(0, 0, 0) == doctest::Approx((v.at(0, 0, 0) - m) / s).epsilon(1e-5));
}

TEST_CASE("zscore preconditions")
{
    const Volume flat = Volume::filled({3, 3, 3}, {1, 1, 1}, {0, 0, 0}, 4.0f);
    CHECK_THROWS_AS(zscore(flat), DegenerateInputError);
    const Volume v = testutil::random_volume({3, 3, 3}, 3);
    Volume one = Volume::filled({3, 3, 3}, {1, 1, 1}, {0, 0, 0});
    one.at(1, 1, 1) = 1.0f;
    CHECK_THROWS_AS(zscore(v, &one), PreconditionError);
    const Volume wrong = Volume::filled({3, 3, 2}, {1, 1, 1}, {0, 0, 0}, 1.0f);
    CHECK_THROWS(zscore(v, &wrong));
}

TEST_CASE("isotropic self-resample is bit identical")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Volume v = testutil::random_volume({7, 5, 9}, seed, -2, 2, {1.5, 1.5, 1.5});
        const Volume r = resample_isotropic(v, 1.5);
        CHECK(r == v);
        CHECK(r.origin() == v.origin());
    }
}

TEST_CASE("resample output size and spacing")
{
    const Volume v = testutil::random_volume({10, 7, 3}, 4, 0, 1, {2.0, 1.0, 0.5});
    const Volume r = resample_isotropic(v, 1.0);
    CHECK(r.shape() == Index3{20, 7, 2});
    CHECK(r.spacing() == Vec3{1.0, 1.0, 1.0});
    CHECK_THROWS(resample_isotropic(v, 0.0));
}

TEST_CASE("resample reproduces a linear ramp inside the grid")
{
    std::vector<float> vals;
    for (int z = 0; z < 4; ++z) {
        for (int y = 0; y < 4; ++y) {
            for (int x = 0; x < 8; ++x) {
                vals.push_back(static_cast<float>(x));
            }
        }
    }
    const Volume v({8, 4, 4}, {2.0, 2.0, 2.0}, {0, 0, 0}, vals);
    const Volume r = resample_isotropic(v, 1.0);
    REQUIRE(r.shape()[0] == 16);
    // Output voxel i sits at input coordinate (i - 0.5) / 2.
    for (int x = 1; x < 15; ++x) {
        CHECK(r.at(x, 3, 3) == doctest::Approx((x - 0.5) / 2.0).epsilon(1e-6));
    }
    CHECK(r.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(r.at(15, 0, 0) == doctest::Approx(7.0));
}

TEST_CASE("center crop 100 -> 64 keeps voxels 18..81")
{
    std::vector<float> vals(100);
    for (int i = 0; i < 100; ++i) {
        vals[i] = static_cast<float>(i);
    }
    const Volume v({100, 1, 1}, {1, 1, 1}, {0, 0, 0}, vals);
    const Volume c = center_crop_pad(v, {64, 1, 1});
    CHECK(c.values()[0] == 18.0f);
    CHECK(c.values()[63] == 81.0f);
    CHECK(c.origin()[0] == doctest::Approx(18.0));
}

TEST_CASE("center pad keeps world coordinates and zero fills")
{
    const Volume v({3, 1, 1}, {2, 1, 1}, {10, 0, 0}, {1.0f, 2.0f, 3.0f});
    const Volume p = center_crop_pad(v, {8, 1, 1});
    // floor((8-3)/2) = 2 leading zeros.
    CHECK(p.values()[0] == 0.0f);
    CHECK(p.values()[1] == 0.0f);
    CHECK(p.values()[2] == 1.0f);
    CHECK(p.values()[4] == 3.0f);
    CHECK(p.values()[7] == 0.0f);
    CHECK(p.origin()[0] == doctest::Approx(6.0));
}

TEST_CASE("crop/pad shape contract on random shapes")
{
    std::mt19937 gen(123);
    std::uniform_int_distribution<int> d(1, 24);
    for (int trial = 0; trial < 20; ++trial) {
        const Index3 in{d(gen), d(gen), d(gen)};
        const Index3 out{d(gen), d(gen), d(gen)};
        const Volume v = testutil::random_volume(in, trial, 1, 2);
        const Volume c = center_crop_pad(v, out);
        CHECK(c.shape() == out);
        // Centre voxel survives when both sizes share parity-insensitive overlap.
        const Volume back = center_crop_pad(c, in);
        CHECK(back.shape() == in);
    }
}

TEST_CASE("fraction dose scaling")
{
    const Volume d({2, 1, 1}, {1, 1, 1}, {0, 0, 0}, {1.5f, 2.0f});
    const Volume t = scale_fraction_dose(d, 30);
    CHECK(t.values()[0] == doctest::Approx(45.0));
    CHECK(t.values()[1] == doctest::Approx(60.0));
    const Volume neg({2, 1, 1}, {1, 1, 1}, {0, 0, 0}, {1.0f, -0.5f});
    CHECK_THROWS_AS(scale_fraction_dose(neg, 2), InvalidDoseError);
    CHECK_THROWS(scale_fraction_dose(d, 0));
}

TEST_CASE("stack_channels orders channels canonically")
{
    SubjectVolumes s;
    s.emplace(Modality::Dose, Volume::filled({2, 2, 2}, {1, 1, 1}, {0, 0, 0}, 3.0f));
    s.emplace(Modality::PostOp, Volume::filled({2, 2, 2}, {1, 1, 1}, {0, 0, 0}, 1.0f));
    s.emplace(Modality::Event, Volume::filled({2, 2, 2}, {1, 1, 1}, {0, 0, 0}, 2.0f));
    const Sample all = stack_channels(s, ModalityCombo::from_index(7));
    CHECK(all.channels == 3);
    CHECK(all.channel(0)[0] == 1.0f);
    CHECK(all.channel(1)[0] == 2.0f);
    CHECK(all.channel(2)[0] == 3.0f);
    const Sample ed = stack_channels(s, ModalityCombo::from_index(6));
    CHECK(ed.channels == 2);
    CHECK(ed.channel(0)[0] == 2.0f);
    CHECK(ed.channel(1)[0] == 3.0f);

    s.erase(Modality::Event);
    s.emplace(Modality::Event, Volume::filled({2, 2, 3}, {1, 1, 1}, {0, 0, 0}, 2.0f));
    CHECK_THROWS_AS(stack_channels(s, ModalityCombo::from_index(7)), ShapeMismatchError);
}

TEST_CASE("subject preprocessing: dose total, brain z-score, zero background")
{
    Volume mri = Volume::filled({10, 10, 10}, {1, 1, 1}, {0, 0, 0});
    for (int z = 2; z < 8; ++z) {
        for (int y = 2; y < 8; ++y) {
            for (int x = 2; x < 8; ++x) {
                mri.at(x, y, z) = 1.0f + 0.1f * static_cast<float>((x * 7 + y * 3 + z) % 5);
            }
        }
    }
    Volume dose = Volume::filled({10, 10, 10}, {1, 1, 1}, {0, 0, 0}, 2.0f);
    PreprocessConfig cfg;
    cfg.dose_max_gy = 80.0;
    const auto out = preprocess_subject(mri, mri, dose, 30, cfg, {8, 8, 8});
    CHECK(out.post_op.shape() == Index3{8, 8, 8});
    CHECK(out.dose.values()[0] == doctest::Approx(60.0 / 80.0));
    CHECK(out.post_op.at(0, 0, 0) == 0.0f);
    Volume brain = out.post_op;
    for (std::size_t i = 0; i < brain.size(); ++i) {
        brain.values()[i] = (out.post_op.values()[i] != 0.0f) ? 1.0f : 0.0f;
    }
    CHECK(std::fabs(mean_over(out.post_op, &brain)) < 1e-2);
}
