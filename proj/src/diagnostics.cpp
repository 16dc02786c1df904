#include "svt/diagnostics.hpp"

#include <cmath>
#include <limits>

namespace svt {

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

}  // namespace

DistanceMatrix distance_matrix(const std::vector<Supervector>& class_supervectors) {
    const size_t n = class_supervectors.size();
    if (n < 2) throw ValidationError("distance_matrix: need at least two classes");
    const size_t dim = class_supervectors.front().values.size();
    const uint64_t fp = class_supervectors.front().ubm_fingerprint;
    for (const auto& sv : class_supervectors) {
        if (sv.values.size() != dim) throw ValidationError("distance_matrix: mixed supervector dimensions");
        if (sv.ubm_fingerprint != fp) throw ValidationError("distance_matrix: mixed UBM fingerprints");
    }
    DistanceMatrix d;
    d.n = n;
    d.entries.assign(n * n, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            const double v = euclidean(class_supervectors[i].values, class_supervectors[j].values);
            d.entries[i * n + j] = v;
            d.entries[j * n + i] = v;
        }
    return d;
}

double avg_between_class_distance(const DistanceMatrix& d) {
    if (d.n < 2) throw ValidationError("avg_between_class_distance: need at least two classes");
    double total = 0.0;
    for (size_t i = 0; i < d.n; ++i)
        for (size_t j = i + 1; j < d.n; ++j) total += d.at(i, j);
    const double pairs = static_cast<double>(d.n) * static_cast<double>(d.n - 1) / 2.0;
    return total / pairs;
}

ZoneSplit zone_split(const DiagonalGmm& spk, const DiagonalGmm& ubm, const FeatureSequence& y, double epsilon) {
    if (y.frames() == 0) throw ValidationError("zone_split: empty test sequence");
    if (y.dim != spk.dim || y.dim != ubm.dim) throw ValidationError("zone_split: dimension mismatch");
    if (!(epsilon > 0.0)) throw ValidationError("zone_split: epsilon must be positive");

    ZoneSplit out;
    out.epsilon = epsilon;
    const GmmEvaluator spk_eval(spk), ubm_eval(ubm);
    for (size_t t = 0; t < y.frames(); ++t) {
        const double* x = y.row(t);
        const double llr = spk_eval.log_pdf(x) - ubm_eval.log_pdf(x);
        if (std::abs(llr) < epsilon)
            out.unseen_frames.push_back(t);
        else
            out.seen_frames.push_back(t);
    }
    if (out.seen_frames.empty()) {
        out.tau_infinite = true;
        out.tau = std::numeric_limits<double>::infinity();
    } else {
        out.tau = static_cast<double>(out.unseen_frames.size()) / static_cast<double>(out.seen_frames.size());
    }
    return out;
}

MapMismatch map_mismatch(const Supervector& train_sv, const Supervector& test_sv, const Supervector& ubm_sv) {
    const size_t dim = train_sv.values.size();
    if (test_sv.values.size() != dim || ubm_sv.values.size() != dim)
        throw ValidationError("map_mismatch: dimension mismatch");
    if (train_sv.ubm_fingerprint != test_sv.ubm_fingerprint || train_sv.ubm_fingerprint != ubm_sv.ubm_fingerprint)
        throw ValidationError("map_mismatch: UBM fingerprint mismatch");
    MapMismatch out;
    out.train_shift = euclidean(train_sv.values, ubm_sv.values);
    out.test_shift = euclidean(test_sv.values, ubm_sv.values);
    out.mismatch = euclidean(train_sv.values, test_sv.values);
    return out;
}

}  // namespace svt
