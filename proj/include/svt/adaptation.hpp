#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "svt/gmm.hpp"

namespace svt {

struct MapConfig {
    double relevance_factor = 16.0;
};

enum class Normalization { kRaw, kKlNormalized };

std::string to_string(Normalization n);
Normalization normalization_from_string(const std::string& s);

// Concatenated adapted component means (optionally variance/weight scaled),
// tagged with its origin.
struct Supervector {
    std::vector<double> values;  // M*D
    std::string speaker_id;
    uint32_t partition_index = 0;
    Normalization normalization = Normalization::kRaw;
    uint64_t ubm_fingerprint = 0;
};

// Mean-only MAP adaptation: n_i = sum_t Pr(i|x_t), alpha_i = n_i/(n_i+r),
// adapted mean = alpha_i E_i(x) + (1-alpha_i) mu_i. Weights and variances
// are copied unchanged; components with n_i = 0 keep the UBM mean exactly.
DiagonalGmm map_adapt_means(const DiagonalGmm& ubm, const FeatureSequence& x, const MapConfig& cfg);

// Raw mode concatenates adapted means in component order; kl_normalized mode
// scales block i per dimension by sqrt(w_i)/sigma_{i,d}. The adapted model
// must share M, D, weights and variances with the UBM.
Supervector build_supervector(const DiagonalGmm& adapted, const DiagonalGmm& ubm, Normalization mode);

// Supervector set file: magic "SVEC", version u32, count u32, dim u32, then
// per record: speaker-id length u32 + bytes, partition_index u32, dim f32.
// A sidecar <path>.meta.json carries the UBM fingerprint and normalization.
struct SvecMeta {
    uint64_t ubm_fingerprint = 0;
    Normalization normalization = Normalization::kRaw;
    int gmm_components = 0;
    int gmm_dim = 0;
    double relevance_factor = 16.0;
    uint32_t partitions = 1;
};

void save_supervectors(const std::vector<Supervector>& records, const SvecMeta& meta,
                       const std::filesystem::path& path);
std::vector<Supervector> load_supervectors(const std::filesystem::path& path, SvecMeta* meta_out = nullptr);

}  // namespace svt
