#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "svt/adaptation.hpp"
#include "svt/features.hpp"
#include "svt/gmm.hpp"
#include "svt/synth.hpp"

namespace svt {

// Flat key=value experiment configuration. Every tunable default lives
// here; unknown keys are rejected and each command writes the fully
// resolved text next to its outputs.
struct ExperimentConfig {
    uint64_t seed = 42;
    CorpusConfig corpus;
    MfccConfig features;
    double vad_floor_db = -30.0;
    EmConfig em;
    MapConfig map;
    Normalization normalization = Normalization::kKlNormalized;
    double svm_c = 1.0;
    std::vector<int> p_list{1, 2, 4, 8};
    std::vector<int> m_list{128, 256, 512};
    double diagnostics_epsilon = 0.05;

    // Applies the root seed to the sub-configs that consume randomness.
    void finalize();

    std::string serialize() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);  // "default" handled by caller
void write_resolved_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

}  // namespace svt
