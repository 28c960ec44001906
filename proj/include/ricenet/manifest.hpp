#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ricenet/modality.hpp"
#include "ricenet/volume.hpp"

namespace ricenet {

// Class encoding used by the network: logit 0 = RECURRENCE, logit 1 = RICE.
enum class Label : int { Recurrence = 0, Rice = 1 };
enum class Split { Train, Test };

const char* label_name(Label l) noexcept;
Label parse_label(const std::string& s);
const char* split_name(Split s) noexcept;
Split parse_split(const std::string& s);

struct SubjectRecord {
    std::string subject_id;
    // Paths are relative to the manifest's directory.
    std::map<Modality, std::string> channel_paths;
    Label label = Label::Recurrence;
    int n_fractions = 1;
    Split split = Split::Train;
    std::optional<int> fold; // present iff split == Train

    void validate() const;
};

enum class CohortStage { Raw, Preprocessed };

struct CohortManifest {
    std::vector<SubjectRecord> subjects;
    double target_spacing_mm = 1.0;
    Index3 crop_shape{64, 64, 64};
    std::uint64_t seed = 0;
    CohortStage stage = CohortStage::Raw;

    void validate() const;
    const SubjectRecord& subject(const std::string& id) const;
    std::vector<const SubjectRecord*> by_split(Split s) const;
};

CohortManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const CohortManifest& manifest, const std::filesystem::path& path);
std::string manifest_to_json_text(const CohortManifest& manifest);

// Resolve a subject channel against the manifest file location.
std::filesystem::path channel_path(const std::filesystem::path& manifest_path, const SubjectRecord& rec, Modality m);

} // namespace ricenet
