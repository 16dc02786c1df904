#include "svt/partition.hpp"

namespace svt {

PartitionPlan plan_partitions(size_t total_frames, int partitions) {
    if (partitions < 1)
        throw ValidationError("plan_partitions: partition count must be >= 1");
    if (static_cast<size_t>(partitions) > total_frames)
        throw ValidationError("plan_partitions: more partitions (" + std::to_string(partitions) +
                              ") than frames (" + std::to_string(total_frames) + ")");
    PartitionPlan plan;
    plan.total_frames = total_frames;
    plan.partitions = partitions;
    const size_t base = total_frames / static_cast<size_t>(partitions);
    const size_t extra = total_frames % static_cast<size_t>(partitions);
    size_t start = 0;
    for (int p = 0; p < partitions; ++p) {
        const size_t len = base + (static_cast<size_t>(p) < extra ? 1 : 0);
        plan.bounds.emplace_back(start, start + len);
        start += len;
    }
    return plan;
}

FeatureSequence slice_frames(const FeatureSequence& seq, size_t start, size_t end) {
    if (start > end || end > seq.frames()) throw ValidationError("slice_frames: range out of bounds");
    FeatureSequence out;
    out.dim = seq.dim;
    out.frame_period = seq.frame_period;
    out.source_id = seq.source_id;
    out.data.assign(seq.data.begin() + static_cast<long>(start * seq.dim),
                    seq.data.begin() + static_cast<long>(end * seq.dim));
    return out;
}

LabeledSupervectorSet build_training_set(const std::map<std::string, std::vector<Supervector>>& per_speaker,
                                         const std::string& target) {
    const auto it = per_speaker.find(target);
    if (it == per_speaker.end())
        throw ValidationError("build_training_set: target speaker '" + target + "' not present");
    if (per_speaker.size() < 2)
        throw ValidationError("build_training_set: need at least two speakers");

    const size_t p = it->second.size();
    if (p == 0) throw ValidationError("build_training_set: target has no supervectors");
    for (const auto& [id, svs] : per_speaker)
        if (svs.size() != p)
            throw ValidationError("build_training_set: speaker '" + id + "' contributes " +
                                  std::to_string(svs.size()) + " supervectors, expected " + std::to_string(p));

    LabeledSupervectorSet set;
    set.target_speaker = target;
    set.positives = it->second;
    for (const auto& [id, svs] : per_speaker) {
        if (id == target) continue;
        set.negatives.insert(set.negatives.end(), svs.begin(), svs.end());
    }
    return set;
}

}  // namespace svt
