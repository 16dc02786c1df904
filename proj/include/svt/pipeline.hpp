#pragma once

#include <map>
#include <memory>

#include "svt/config.hpp"
#include "svt/diagnostics.hpp"
#include "svt/eval.hpp"
#include "svt/partition.hpp"
#include "svt/svm.hpp"
#include "svt/synth.hpp"

namespace svt {

// Orchestration shared by the CLI commands and the experiment suites.

FeatureSequence load_utterance(const CorpusManifest& manifest, const std::filesystem::path& corpus_root,
                               const std::string& utterance_id);

// Pools the background speakers' training features (row concatenation in
// manifest order).
FeatureSequence pool_background_features(const CorpusManifest& manifest, const std::filesystem::path& corpus_root);

// Per-client supervectors: the training utterance is split into P
// contiguous partitions, each MAP-adapted separately.
std::map<std::string, std::vector<Supervector>> build_training_supervectors(
    const CorpusManifest& manifest, const std::filesystem::path& corpus_root, const DiagonalGmm& ubm,
    int partitions, Normalization normalization, const MapConfig& map_cfg, int jobs = 1);

// One-vs-rest SVM models for every client speaker.
std::map<std::string, SvmModel> train_speaker_svms(
    const std::map<std::string, std::vector<Supervector>>& per_speaker, double c, int jobs = 1);

// GMM-UBM trial scorer: speaker models are MAP-adapted from the corpus
// training utterances; scores are average per-frame log-likelihood ratios.
class GmmUbmScorer : public TrialScorer {
public:
    GmmUbmScorer(const DiagonalGmm& ubm, const CorpusManifest& manifest, std::filesystem::path corpus_root,
                 MapConfig map_cfg, int jobs);

    void prepare(const std::vector<Trial>& trials) override;
    double score(const Trial& trial) const override;

private:
    const DiagonalGmm& ubm_;
    const CorpusManifest& manifest_;
    std::filesystem::path root_;
    MapConfig map_cfg_;
    int jobs_;
    std::map<std::string, DiagonalGmm> speaker_models_;
    std::map<std::string, FeatureSequence> test_features_;
    std::map<std::string, double> ubm_total_ll_;  // per test utterance
};

// GMM-SVM trial scorer: one whole-segment test supervector per utterance,
// scored by the target speaker's hyperplane.
class GmmSvmScorer : public TrialScorer {
public:
    GmmSvmScorer(const std::map<std::string, SvmModel>& models, const DiagonalGmm& ubm,
                 const CorpusManifest& manifest, std::filesystem::path corpus_root, MapConfig map_cfg,
                 Normalization normalization, int jobs);

    void prepare(const std::vector<Trial>& trials) override;
    double score(const Trial& trial) const override;

private:
    const std::map<std::string, SvmModel>& models_;
    const DiagonalGmm& ubm_;
    const CorpusManifest& manifest_;
    std::filesystem::path root_;
    MapConfig map_cfg_;
    Normalization normalization_;
    int jobs_;
    std::map<std::string, Supervector> test_supervectors_;
};

// One row of the diagnostics report.
struct DiagnosticsRow {
    int gmm_components = 0;
    int partitions = 0;
    Normalization normalization = Normalization::kRaw;
    double avg_between_class_distance = 0.0;
    double mean_tau = 0.0;
    double mean_mismatch = 0.0;
    double mean_positive_sv = 0.0;
    double mean_negative_sv = 0.0;
    double vapnik_bound_value = 0.0;
};

DiagnosticsRow compute_diagnostics(const CorpusManifest& manifest, const std::filesystem::path& corpus_root,
                                   const DiagonalGmm& ubm,
                                   const std::map<std::string, std::vector<Supervector>>& per_speaker,
                                   const std::map<std::string, SvmModel>& models, double epsilon,
                                   Normalization normalization, const MapConfig& map_cfg, int jobs = 1);

void save_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::filesystem::path& path);

}  // namespace svt
