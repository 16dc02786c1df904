#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "svt/partition.hpp"

namespace svt {

// Support vector threshold on dual coefficients.
inline constexpr double kSvAlphaThreshold = 1e-8;

struct SupportSample {
    std::string speaker_id;
    uint32_t partition_index = 0;
    int label = 0;       // +1 / -1
    double alpha = 0.0;  // dual coefficient
    double slack = 0.0;  // xi = max(0, 1 - y f(x))
    std::vector<double> x;
};

// Linear soft-margin SVM in supervector space.
struct SvmModel {
    std::vector<double> weights;  // w
    double bias = 0.0;            // b
    double soft_margin_c = 1.0;
    std::string target_speaker;
    std::vector<double> dual_coefficients;  // per training sample, training order
    std::vector<int> labels;                // per training sample
    std::vector<int> support_indices;       // alpha > kSvAlphaThreshold
    std::vector<SupportSample> support_samples;
    uint64_t ubm_fingerprint = 0;
    Normalization normalization = Normalization::kRaw;
    double kkt_gap = 0.0;  // achieved maximal-violating-pair gap

    double decision(const double* x) const;
};

// Support-vector census by class and slack regime (on margin, inside the
// margin, misclassified).
struct SvCensus {
    int positive_sv_count = 0;
    int negative_sv_count = 0;
    int margin_sv_count = 0;        // xi < 1e-6
    int bound_sv_count = 0;         // 1e-6 <= xi <= 1
    int misclassified_sv_count = 0; // xi > 1
    int total() const { return positive_sv_count + negative_sv_count; }
};

struct SvmTrainOptions {
    double stop_tolerance = 1e-4;  // maximal-violating-pair gap
    size_t max_iterations = 20'000'000;
    // Precompute the full Gram matrix when n^2 is at most this many entries.
    size_t gram_cache_limit = 16'000'000;
};

// SMO-style dual coordinate ascent with maximal-KKT-violation working-set
// selection and lowest-index tie-breaking. Deterministic for fixed input
// order.
SvmModel train_soft_margin(const LabeledSupervectorSet& set, double c, const SvmTrainOptions& opts = {});

// w . x + b. The supervector must carry the same UBM fingerprint as the
// model's training data.
double decision_value(const SvmModel& model, const Supervector& x);

SvCensus census(const SvmModel& model);

// Expected-test-error bound: expected SV count / training sample count.
double vapnik_bound(double expected_sv_count, size_t training_samples);

// Structured-text model file: C, w, b, support sample references, alphas.
void save_svm(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_svm(const std::filesystem::path& path);

}  // namespace svt
