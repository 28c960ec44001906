#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "ricenet/errors.hpp"
#include "ricenet/manifest.hpp"
#include "ricenet/modality.hpp"

using namespace ricenet;

TEST_CASE("seven combos in canonical order")
{
    const auto all = ModalityCombo::all();
    const std::vector<std::string> names{"POST_OP",       "EVENT",         "DOSE",
                                         "POST_OP+EVENT", "POST_OP+DOSE", "EVENT+DOSE", "POST_OP+EVENT+DOSE"};
    const std::vector<int> channels{1, 1, 1, 2, 2, 2, 3};
    std::set<std::string> seen;
    for (int i = 0; i < 7; ++i) {
        CHECK(all[i].index() == i + 1);
        CHECK(all[i].name() == names[i]);
        CHECK(all[i].channels() == channels[i]);
        CHECK(ModalityCombo::parse(names[i]) == all[i]);
        CHECK(ModalityCombo::parse(std::to_string(i + 1)) == all[i]);
        seen.insert(all[i].name());
    }
    CHECK(seen.size() == 7);
    CHECK(ModalityCombo::from_modalities({Modality::Dose, Modality::PostOp}).index() == 5);
    CHECK(ModalityCombo::from_index(5).modalities() == std::vector<Modality>{Modality::PostOp, Modality::Dose});
    CHECK_THROWS(ModalityCombo::from_index(0));
    CHECK_THROWS(ModalityCombo::from_index(8));
    CHECK_THROWS(ModalityCombo::parse("T2"));
    CHECK_THROWS(ModalityCombo::from_modalities({}));
}

namespace {

CohortManifest small_manifest()
{
    CohortManifest m;
    m.crop_shape = {8, 8, 8};
    for (int i = 0; i < 12; ++i) {
        SubjectRecord r;
        r.subject_id = "s" + std::to_string(i);
        for (auto mod : kAllModalities) {
            r.channel_paths[mod] = "subjects/" + r.subject_id + "/" + modality_key(mod);
        }
        r.label = i % 2 ? Label::Rice : Label::Recurrence;
        r.split = i < 10 ? Split::Train : Split::Test;
        if (r.split == Split::Train) {
            r.fold = (i / 2) % 5;
        }
        m.subjects.push_back(r);
    }
    return m;
}

} // namespace

TEST_CASE("manifest round trip")
{
    testutil::TempDir dir("manifest");
    CohortManifest m = small_manifest();
    m.stage = CohortStage::Preprocessed;
    m.seed = 42;
    write_manifest(m, dir / "manifest.json");
    const CohortManifest r = read_manifest(dir / "manifest.json");
    CHECK(manifest_to_json_text(r) == manifest_to_json_text(m));
    CHECK(r.stage == CohortStage::Preprocessed);
    CHECK(r.subject("s3").label == Label::Rice);
    CHECK(r.by_split(Split::Test).size() == 2);
    CHECK(channel_path(dir / "manifest.json", r.subject("s1"), Modality::Dose) == dir / "subjects/s1/dose");
}

TEST_CASE("manifest validation")
{
    CohortManifest m = small_manifest();
    m.subjects[1].subject_id = "s0";
    CHECK_THROWS(m.validate());

    m = small_manifest();
    m.subjects[0].fold.reset();
    CHECK_THROWS(m.validate());

    m = small_manifest();
    m.subjects[0].n_fractions = 0;
    CHECK_THROWS(m.validate());

    m = small_manifest();
    m.subjects[0].channel_paths.erase(Modality::Event);
    CHECK_THROWS(m.validate());

    CHECK_THROWS(parse_label("MAYBE"));
    CHECK(parse_label("RICE") == Label::Rice);
}
