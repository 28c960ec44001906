#pragma once

#include <filesystem>
#include <vector>

#include "ricenet/manifest.hpp"
#include "ricenet/preprocess.hpp"

namespace ricenet {

// A preprocessed cohort held in memory; volumes[i] belongs to
// manifest.subjects[i].
struct CohortData {
    std::filesystem::path manifest_path;
    CohortManifest manifest;
    std::vector<SubjectVolumes> volumes;

    std::size_t index_of(const std::string& subject_id) const;
    Sample sample(std::size_t i, const ModalityCombo& combo) const;
    int label(std::size_t i) const { return static_cast<int>(manifest.subjects[i].label); }
};

// Throws PreconditionError unless the manifest is at the preprocessed stage.
CohortData load_cohort(const std::filesystem::path& manifest_path, int workers = 1);

} // namespace ricenet
