#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "svt/audio.hpp"
#include "svt/eval.hpp"
#include "svt/features.hpp"

namespace svt {

// Seeded synthetic-corpus generator. Speech is modeled as draws from a
// shared library of Gaussian "acoustic zones" in feature space; each speaker
// carries private per-zone mean offsets, each utterance covers a
// duration-dependent subset of zones plus a session offset.
struct CorpusConfig {
    int n_clients = 100;
    int n_background = 30;
    double train_seconds = 120.0;
    std::vector<double> test_durations{20.0, 10.0, 5.0};
    int n_test_per_speaker = 2;
    int zone_count = 64;
    int zones_per_utterance = 56;  // coverage reached at train_seconds
    int dim = 19;
    double zone_mean_scale = 1.0;
    double zone_sigma = 0.45;
    double speaker_shift_scale = 0.12;
    double session_offset_scale = 0.06;
    double family_offset_scale = 0.08;
    uint64_t seed = 42;

    void validate() const;

    // Zones covered by an utterance of the given duration; saturates toward
    // zone_count so short utterances cover fewer zones.
    int coverage(double duration_seconds) const;
};

enum class UtteranceKind { kTrain, kTest };

struct UtteranceEntry {
    std::string id;
    std::string speaker_id;
    UtteranceKind kind = UtteranceKind::kTrain;
    double duration_seconds = 0.0;
    size_t frames = 0;
    std::string path;  // relative to the corpus root
};

struct SpeakerEntry {
    std::string id;
    bool background = false;
    std::vector<UtteranceEntry> utterances;
};

struct CorpusManifest {
    std::vector<SpeakerEntry> speakers;

    const UtteranceEntry* find_utterance(const std::string& utterance_id) const;
    std::vector<const SpeakerEntry*> clients() const;
    std::vector<const SpeakerEntry*> background() const;
};

// Generator ground truth kept for oracle checks: which zone emitted each
// frame, and which zones each utterance covered.
struct UtteranceTruth {
    std::vector<int> zone_subset;
    std::vector<uint16_t> frame_zones;
};

struct GroundTruth {
    std::vector<double> zone_means;  // zone_count * dim
    std::map<std::string, std::vector<double>> speaker_zone_offsets;  // per speaker, zone_count * dim
    std::map<std::string, UtteranceTruth> utterances;  // by utterance id
};

struct SyntheticCorpus {
    CorpusConfig config;
    std::filesystem::path root;
    CorpusManifest manifest;
    GroundTruth truth;
};

// Generates the corpus under out_dir (feature files plus manifest.json).
// Identical config and seed give bit-identical files for any job count.
SyntheticCorpus make_corpus(const CorpusConfig& cfg, const std::filesystem::path& out_dir, int jobs = 1);

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest load_manifest(const std::filesystem::path& path);

// All-vs-all trials for the client test utterances of one duration.
std::vector<Trial> all_vs_all_trials(const CorpusManifest& manifest, double duration_seconds);

// 1-D three-mode mixture with known parameters, for model-order demos.
struct TrimodalData {
    std::vector<double> samples;
    std::array<double, 3> weights;
    std::array<double, 3> means;
    std::array<double, 3> sigmas;

    double mixture_mean() const;
};

TrimodalData make_trimodal_1d(size_t n, uint64_t seed);

// Deterministic harmonic tone with a leading and trailing pause; exercises
// the WAV -> VAD -> framing -> MFCC path end to end.
AudioClip make_harmonic_clip(double f0_hz, int harmonics, double speech_seconds, double pause_seconds,
                             int sample_rate = 8000);

}  // namespace svt
