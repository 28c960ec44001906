#include "ricenet/folds.hpp"

#include <algorithm>

#include <json.hpp>

#include "ricenet/errors.hpp"
#include "ricenet/rng.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

using nlohmann::json;

std::vector<std::string> FoldAssignment::subjects_in(int fold) const
{
    std::vector<std::string> out;
    for (const auto& [id, f] : fold_of) {
        if (f == fold) {
            out.push_back(id);
        }
    }
    return out;
}

FoldAssignment make_folds(const std::vector<std::pair<std::string, Label>>& train_subjects, std::uint64_t seed)
{
    std::array<std::vector<std::string>, 2> by_class;
    for (const auto& [id, label] : train_subjects) {
        by_class[static_cast<int>(label)].push_back(id);
    }
    for (int c = 0; c < 2; ++c) {
        if (static_cast<int>(by_class[c].size()) < kNumFolds) {
            throw PreconditionError(std::string("make_folds: need at least 5 TRAIN subjects of class ") +
                                    label_name(static_cast<Label>(c)) + ", got " +
                                    std::to_string(by_class[c].size()));
        }
    }

    FoldAssignment out;
    out.seed = seed;
    Rng rng = Rng::derive({seed, 0xF01D5ull});
    int next = 0;
    for (auto& ids : by_class) {
        std::sort(ids.begin(), ids.end());
        // Fisher-Yates with our own index draws keeps the order independent of
        // the standard library's shuffle implementation.
        for (std::size_t i = ids.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i) - 1));
            std::swap(ids[i - 1], ids[j]);
        }
        for (const auto& id : ids) {
            if (!out.fold_of.emplace(id, next).second) {
                throw PreconditionError("make_folds: duplicate subject id '" + id + "'");
            }
            next = (next + 1) % kNumFolds;
        }
    }
    return out;
}

FoldAssignment make_folds(const CohortManifest& manifest, std::uint64_t seed)
{
    std::vector<std::pair<std::string, Label>> train;
    for (const auto* s : manifest.by_split(Split::Train)) {
        train.emplace_back(s->subject_id, s->label);
    }
    return make_folds(train, seed);
}

std::string folds_to_json_text(const FoldAssignment& folds)
{
    json j;
    j["k"] = kNumFolds;
    j["seed"] = folds.seed;
    j["fold_of"] = folds.fold_of;
    return j.dump(2) + "\n";
}

void write_folds(const FoldAssignment& folds, const std::filesystem::path& path)
{
    write_text_file(path, folds_to_json_text(folds));
}

FoldAssignment read_folds(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) {
        throw PreconditionError("folds file '" + path.string() +
                                "' not found; folds are fixed per experiment and are never regenerated implicitly");
    }
    FoldAssignment out;
    try {
        const auto j = json::parse(read_text_file(path));
        if (j.at("k").get<int>() != kNumFolds) {
            throw FormatError("folds file: k must be 5");
        }
        out.seed = j.at("seed").get<std::uint64_t>();
        out.fold_of = j.at("fold_of").get<std::map<std::string, int>>();
    } catch (const json::exception& e) {
        throw FormatError("folds file '" + path.string() + "': " + e.what());
    }
    for (const auto& [id, f] : out.fold_of) {
        if (f < 0 || f >= kNumFolds) {
            throw FormatError("folds file: subject '" + id + "' has fold outside 0..4");
        }
    }
    return out;
}

void check_folds_match(const CohortManifest& manifest, const FoldAssignment& folds)
{
    std::size_t train_count = 0;
    for (const auto& s : manifest.subjects) {
        if (s.split != Split::Train) {
            continue;
        }
        ++train_count;
        const auto it = folds.fold_of.find(s.subject_id);
        if (it == folds.fold_of.end() || !s.fold || *s.fold != it->second) {
            throw PreconditionError("fold of subject '" + s.subject_id + "' disagrees with the folds file");
        }
    }
    if (train_count != folds.fold_of.size()) {
        throw PreconditionError("folds file covers subjects absent from the manifest");
    }
}

} // namespace ricenet
