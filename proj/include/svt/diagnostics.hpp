#pragma once

#include <vector>

#include "svt/adaptation.hpp"
#include "svt/eval.hpp"

namespace svt {

// Symmetric pairwise Euclidean distance matrix with zero diagonal.
struct DistanceMatrix {
    size_t n = 0;
    std::vector<double> entries;  // n*n row-major

    double at(size_t i, size_t j) const { return entries[i * n + j]; }
};

DistanceMatrix distance_matrix(const std::vector<Supervector>& class_supervectors);

// Sum of the strict upper triangle divided by n(n-1)/2.
double avg_between_class_distance(const DistanceMatrix& d);

// Frame split by per-frame LLR magnitude: |log p(y_t|spk) - log p(y_t|ubm)|
// below epsilon marks the frame as coming from an acoustic zone the speaker
// model never adapted (the "unseen" set).
struct ZoneSplit {
    std::vector<size_t> seen_frames;
    std::vector<size_t> unseen_frames;
    double tau = 0.0;  // |unseen| / |seen|
    bool tau_infinite = false;
    double epsilon = 0.0;
};

ZoneSplit zone_split(const DiagonalGmm& spk, const DiagonalGmm& ubm, const FeatureSequence& y, double epsilon);

// Supervector-space shifts: how far train and test supervectors moved from
// the UBM supervector, and how far apart they are from each other.
struct MapMismatch {
    double train_shift = 0.0;
    double test_shift = 0.0;
    double mismatch = 0.0;
};

MapMismatch map_mismatch(const Supervector& train_sv, const Supervector& test_sv, const Supervector& ubm_sv);

}  // namespace svt
