#include "ricenet/dataset.hpp"

#include "ricenet/errors.hpp"
#include "ricenet/parallel.hpp"
#include "ricenet/volume_io.hpp"

namespace ricenet {

std::size_t CohortData::index_of(const std::string& subject_id) const
{
    for (std::size_t i = 0; i < manifest.subjects.size(); ++i) {
        if (manifest.subjects[i].subject_id == subject_id) {
            return i;
        }
    }
    throw PreconditionError("unknown subject '" + subject_id + "'");
}

Sample CohortData::sample(std::size_t i, const ModalityCombo& combo) const
{
    return stack_channels(volumes.at(i), combo);
}

CohortData load_cohort(const std::filesystem::path& manifest_path, int workers)
{
    CohortData data;
    data.manifest_path = manifest_path;
    data.manifest = read_manifest(manifest_path);
    if (data.manifest.stage != CohortStage::Preprocessed) {
        throw PreconditionError("cohort '" + manifest_path.string() + "' is not preprocessed; run preprocess first");
    }
    data.volumes.resize(data.manifest.subjects.size());
    parallel_for(data.volumes.size(), workers, [&](std::size_t i) {
        const auto& rec = data.manifest.subjects[i];
        for (Modality m : kAllModalities) {
            Volume v = read_volume(channel_path(manifest_path, rec, m));
            if (v.shape() != data.manifest.crop_shape) {
                throw ShapeMismatchError(rec.subject_id + "/" + modality_key(m) + ": shape differs from crop_shape");
            }
            data.volumes[i].emplace(m, std::move(v));
        }
    });
    return data;
}

} // namespace ricenet
