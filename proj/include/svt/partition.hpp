#pragma once

#include <map>
#include <string>
#include <vector>

#include "svt/adaptation.hpp"

namespace svt {

// Contiguous equal split of a T-frame sequence into P ranges; when P does
// not divide T the first (T mod P) ranges take one extra frame.
struct PartitionPlan {
    size_t total_frames = 0;
    int partitions = 0;
    std::vector<std::pair<size_t, size_t>> bounds;  // [start, end)
};

PartitionPlan plan_partitions(size_t total_frames, int partitions);

// Rows [start, end) of a sequence as a new FeatureSequence.
FeatureSequence slice_frames(const FeatureSequence& seq, size_t start, size_t end);

// One-vs-rest training set: the target speaker's P supervectors are the
// positive class, every other speaker's P supervectors the negative class.
struct LabeledSupervectorSet {
    std::vector<Supervector> positives;
    std::vector<Supervector> negatives;
    std::string target_speaker;
};

LabeledSupervectorSet build_training_set(const std::map<std::string, std::vector<Supervector>>& per_speaker,
                                         const std::string& target);

}  // namespace svt
