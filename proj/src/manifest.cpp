#include "ricenet/manifest.hpp"

#include <set>

#include <json.hpp>

#include "ricenet/errors.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

namespace fs = std::filesystem;
using nlohmann::json;

const char* label_name(Label l) noexcept
{
    return l == Label::Rice ? "RICE" : "RECURRENCE";
}

Label parse_label(const std::string& s)
{
    if (s == "RICE") {
        return Label::Rice;
    }
    if (s == "RECURRENCE") {
        return Label::Recurrence;
    }
    throw FormatError("unknown label '" + s + "'");
}

const char* split_name(Split s) noexcept
{
    return s == Split::Train ? "TRAIN" : "TEST";
}

Split parse_split(const std::string& s)
{
    if (s == "TRAIN") {
        return Split::Train;
    }
    if (s == "TEST") {
        return Split::Test;
    }
    throw FormatError("unknown split '" + s + "'");
}

void SubjectRecord::validate() const
{
    if (subject_id.empty()) {
        throw FormatError("subject record without subject_id");
    }
    std::set<std::string> seen;
    for (auto m : kAllModalities) {
        const auto it = channel_paths.find(m);
        if (it == channel_paths.end() || it->second.empty()) {
            throw FormatError(subject_id + ": missing " + modality_key(m) + " channel path");
        }
        if (!seen.insert(it->second).second) {
            throw FormatError(subject_id + ": channel paths must be distinct");
        }
    }
    if (n_fractions < 1) {
        throw FormatError(subject_id + ": n_fractions must be positive");
    }
    if (split == Split::Train && !fold) {
        throw FormatError(subject_id + ": TRAIN subject without fold");
    }
    if (split == Split::Test && fold) {
        throw FormatError(subject_id + ": TEST subject must not carry a fold");
    }
    if (fold && (*fold < 0 || *fold > 4)) {
        throw FormatError(subject_id + ": fold must be in 0..4");
    }
}

void CohortManifest::validate() const
{
    std::set<std::string> ids;
    std::set<int> folds;
    bool any_train = false;
    for (const auto& s : subjects) {
        s.validate();
        if (!ids.insert(s.subject_id).second) {
            throw FormatError("duplicate subject_id '" + s.subject_id + "'");
        }
        if (s.fold) {
            folds.insert(*s.fold);
            any_train = true;
        }
    }
    if (any_train && folds.size() != 5) {
        throw FormatError("every fold 0..4 must hold at least one TRAIN subject");
    }
    if (!(target_spacing_mm > 0.0)) {
        throw FormatError("target_spacing_mm must be > 0");
    }
    for (int c : crop_shape) {
        if (c < 1) {
            throw FormatError("crop_shape must be positive");
        }
    }
}

const SubjectRecord& CohortManifest::subject(const std::string& id) const
{
    for (const auto& s : subjects) {
        if (s.subject_id == id) {
            return s;
        }
    }
    throw PreconditionError("subject '" + id + "' not in manifest");
}

std::vector<const SubjectRecord*> CohortManifest::by_split(Split sp) const
{
    std::vector<const SubjectRecord*> out;
    for (const auto& s : subjects) {
        if (s.split == sp) {
            out.push_back(&s);
        }
    }
    return out;
}

std::string manifest_to_json_text(const CohortManifest& manifest)
{
    json j;
    j["target_spacing_mm"] = manifest.target_spacing_mm;
    j["crop_shape"] = manifest.crop_shape;
    j["seed"] = manifest.seed;
    j["stage"] = manifest.stage == CohortStage::Raw ? "raw" : "preprocessed";
    j["subjects"] = json::array();
    for (const auto& s : manifest.subjects) {
        json r;
        r["subject_id"] = s.subject_id;
        json paths = json::object();
        for (const auto& [m, p] : s.channel_paths) {
            paths[modality_key(m)] = p;
        }
        r["channel_paths"] = paths;
        r["label"] = label_name(s.label);
        r["n_fractions"] = s.n_fractions;
        r["split"] = split_name(s.split);
        r["fold"] = s.fold ? json(*s.fold) : json(nullptr);
        j["subjects"].push_back(r);
    }
    return j.dump(2) + "\n";
}

void write_manifest(const CohortManifest& manifest, const fs::path& path)
{
    manifest.validate();
    write_text_file(path, manifest_to_json_text(manifest));
}

CohortManifest read_manifest(const fs::path& path)
{
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw FormatError("manifest '" + path.string() + "': " + e.what());
    }
    CohortManifest m;
    try {
        m.target_spacing_mm = j.at("target_spacing_mm").get<double>();
        m.crop_shape = j.at("crop_shape").get<Index3>();
        m.seed = j.at("seed").get<std::uint64_t>();
        const auto stage = j.value("stage", std::string("raw"));
        if (stage != "raw" && stage != "preprocessed") {
            throw FormatError("manifest stage must be 'raw' or 'preprocessed'");
        }
        m.stage = stage == "raw" ? CohortStage::Raw : CohortStage::Preprocessed;
        for (const auto& r : j.at("subjects")) {
            SubjectRecord s;
            s.subject_id = r.at("subject_id").get<std::string>();
            for (auto mod : kAllModalities) {
                const auto& paths = r.at("channel_paths");
                if (paths.contains(modality_key(mod))) {
                    s.channel_paths[mod] = paths.at(modality_key(mod)).get<std::string>();
                }
            }
            s.label = parse_label(r.at("label").get<std::string>());
            s.n_fractions = r.at("n_fractions").get<int>();
            s.split = parse_split(r.at("split").get<std::string>());
            if (r.contains("fold") && !r.at("fold").is_null()) {
                s.fold = r.at("fold").get<int>();
            }
            m.subjects.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw FormatError("manifest '" + path.string() + "': " + e.what());
    }
    m.validate();
    return m;
}

fs::path channel_path(const fs::path& manifest_path, const SubjectRecord& rec, Modality m)
{
    return manifest_path.parent_path() / rec.channel_paths.at(m);
}

} // namespace ricenet
