#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ricenet/manifest.hpp"

namespace ricenet {

inline constexpr int kNumFolds = 5;

// Subject-level, label-stratified fold assignment shared by every modality
// combination of an experiment.
struct FoldAssignment {
    std::uint64_t seed = 0;
    std::map<std::string, int> fold_of;

    std::vector<std::string> subjects_in(int fold) const;
    friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;
};

// Stratified round-robin deal over seeded shuffles of each class. The second
// class continues the deal where the first stopped, so fold sizes differ by at
// most one. Needs at least kNumFolds TRAIN subjects per class.
FoldAssignment make_folds(const std::vector<std::pair<std::string, Label>>& train_subjects, std::uint64_t seed);
FoldAssignment make_folds(const CohortManifest& manifest, std::uint64_t seed);

std::string folds_to_json_text(const FoldAssignment& folds);
void write_folds(const FoldAssignment& folds, const std::filesystem::path& path);
FoldAssignment read_folds(const std::filesystem::path& path);

// Throws PreconditionError when the manifest's fold fields disagree with the
// assignment file.
void check_folds_match(const CohortManifest& manifest, const FoldAssignment& folds);

} // namespace ricenet
