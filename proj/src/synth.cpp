#include "svt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace svt {

namespace {

constexpr uint64_t kLibrarySalt = 0x6c696272617279ull;   // "library"
constexpr uint64_t kSpeakerSalt = 0x7370656b6f666673ull; // speaker offsets
constexpr uint64_t kUtteranceSalt = 0x75747465724e6365ull;
constexpr double kFramesPerSecond = 100.0;  // 10 ms hop

std::string duration_tag(double seconds) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", seconds);
    std::string s(buf);
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

}  // namespace

void CorpusConfig::validate() const {
    if (n_clients < 1 || n_background < 1) throw ValidationError("corpus: speaker counts must be >= 1");
    if (!(train_seconds > 0.0)) throw ValidationError("corpus: train_seconds must be positive");
    if (test_durations.empty()) throw ValidationError("corpus: need at least one test duration");
    for (const double d : test_durations)
        if (!(d > 0.0)) throw ValidationError("corpus: test durations must be positive");
    if (n_test_per_speaker < 1) throw ValidationError("corpus: n_test_per_speaker must be >= 1");
    if (zone_count < 1 || zone_count > 60000) throw ValidationError("corpus: zone_count out of range");
    if (zones_per_utterance < 1 || zones_per_utterance > zone_count)
        throw ValidationError("corpus: zones_per_utterance must be in [1, zone_count]");
    if (dim < 1) throw ValidationError("corpus: dim must be >= 1");
    if (!(zone_sigma > 0.0)) throw ValidationError("corpus: zone_sigma must be positive");
}

int CorpusConfig::coverage(double duration_seconds) const {
    // Saturating coverage with zones_per_utterance reached at train_seconds:
    // z(d) = K d / (d + h), h chosen so z(train_seconds) = zones_per_utterance.
    if (zones_per_utterance == zone_count) return zone_count;
    const double k = static_cast<double>(zone_count);
    const double h = train_seconds * (k - zones_per_utterance) / zones_per_utterance;
    const double z = k * duration_seconds / (duration_seconds + h);
    return std::clamp(static_cast<int>(std::lround(z)), 1, zone_count);
}

const UtteranceEntry* CorpusManifest::find_utterance(const std::string& utterance_id) const {
    for (const auto& spk : speakers)
        for (const auto& utt : spk.utterances)
            if (utt.id == utterance_id) return &utt;
    return nullptr;
}

std::vector<const SpeakerEntry*> CorpusManifest::clients() const {
    std::vector<const SpeakerEntry*> out;
    for (const auto& spk : speakers)
        if (!spk.background) out.push_back(&spk);
    return out;
}

std::vector<const SpeakerEntry*> CorpusManifest::background() const {
    std::vector<const SpeakerEntry*> out;
    for (const auto& spk : speakers)
        if (spk.background) out.push_back(&spk);
    return out;
}

SyntheticCorpus make_corpus(const CorpusConfig& cfg, const std::filesystem::path& out_dir, int jobs) {
    cfg.validate();
    std::filesystem::create_directories(out_dir / "features");

    SyntheticCorpus corpus;
    corpus.config = cfg;
    corpus.root = out_dir;

    const int k = cfg.zone_count, d = cfg.dim;

    // Shared zone library and the two family offsets.
    Rng lib_rng(derive_seed(cfg.seed, kLibrarySalt));
    corpus.truth.zone_means.resize(static_cast<size_t>(k) * d);
    for (double& v : corpus.truth.zone_means) v = cfg.zone_mean_scale * lib_rng.normal();
    std::array<std::vector<double>, 2> family_offsets;
    for (auto& fo : family_offsets) {
        fo.resize(d);
        for (double& v : fo) v = cfg.family_offset_scale * lib_rng.normal();
    }

    // Speaker roster: clients c###, background b###; families alternate.
    struct SpeakerPlan {
        std::string id;
        bool background;
        int family;
    };
    std::vector<SpeakerPlan> roster;
    char buf[32];
    for (int i = 0; i < cfg.n_clients; ++i) {
        std::snprintf(buf, sizeof(buf), "c%03d", i);
        roster.push_back({buf, false, i % 2});
    }
    for (int i = 0; i < cfg.n_background; ++i) {
        std::snprintf(buf, sizeof(buf), "b%03d", i);
        roster.push_back({buf, true, i % 2});
    }

    // Per-speaker zone offsets.
    for (const auto& spk : roster) {
        Rng rng(derive_seed(cfg.seed, fnv1a64(spk.id.data(), spk.id.size()), kSpeakerSalt));
        auto& offsets = corpus.truth.speaker_zone_offsets[spk.id];
        offsets.resize(static_cast<size_t>(k) * d);
        for (double& v : offsets) v = cfg.speaker_shift_scale * rng.normal();
    }

    // Utterance plan, then parallel generation into fixed slots.
    struct UttPlan {
        const SpeakerPlan* speaker;
        std::string id;
        UtteranceKind kind;
        double duration;
    };
    std::vector<UttPlan> plans;
    for (const auto& spk : roster) {
        plans.push_back({&spk, spk.id + "_train", UtteranceKind::kTrain, cfg.train_seconds});
        if (spk.background) continue;
        for (const double dur : cfg.test_durations)
            for (int t = 0; t < cfg.n_test_per_speaker; ++t) {
                std::snprintf(buf, sizeof(buf), "_t%ss_%d", duration_tag(dur).c_str(), t);
                plans.push_back({&spk, spk.id + buf, UtteranceKind::kTest, dur});
            }
    }

    std::vector<UtteranceTruth*> truth_slots(plans.size());
    for (const auto& plan : plans) corpus.truth.utterances[plan.id];  // create slots
    for (size_t i = 0; i < plans.size(); ++i) truth_slots[i] = &corpus.truth.utterances[plans[i].id];

    parallel_for(plans.size(), jobs, [&](size_t pi) {
        const UttPlan& plan = plans[pi];
        const size_t frames = static_cast<size_t>(std::lround(plan.duration * kFramesPerSecond));
        Rng rng(derive_seed(cfg.seed, fnv1a64(plan.id.data(), plan.id.size()), kUtteranceSalt));

        // zone subset via partial Fisher-Yates
        const int z = cfg.coverage(plan.duration);
        std::vector<int> pool(k);
        std::iota(pool.begin(), pool.end(), 0);
        for (int i = 0; i < z; ++i) {
            const auto j = i + static_cast<int>(rng.below(static_cast<uint64_t>(k - i)));
            std::swap(pool[i], pool[j]);
        }
        UtteranceTruth& truth = *truth_slots[pi];
        truth.zone_subset.assign(pool.begin(), pool.begin() + z);

        std::vector<double> session(d);
        for (double& v : session) v = cfg.session_offset_scale * rng.normal();

        const std::vector<double>& spk_off = corpus.truth.speaker_zone_offsets.at(plan.speaker->id);
        const std::vector<double>& fam = family_offsets[plan.speaker->family];

        FeatureSequence seq;
        seq.dim = d;
        seq.source_id = plan.id;
        seq.data.resize(frames * static_cast<size_t>(d));
        truth.frame_zones.resize(frames);
        for (size_t t = 0; t < frames; ++t) {
            const int zone = truth.zone_subset[rng.below(static_cast<uint64_t>(z))];
            truth.frame_zones[t] = static_cast<uint16_t>(zone);
            const double* zm = corpus.truth.zone_means.data() + static_cast<size_t>(zone) * d;
            const double* so = spk_off.data() + static_cast<size_t>(zone) * d;
            double* row = seq.row(t);
            for (int c = 0; c < d; ++c)
                row[c] = zm[c] + fam[c] + so[c] + session[c] + cfg.zone_sigma * rng.normal();
        }
        save_features(seq, out_dir / "features" / (plan.id + ".mfcv"));
    });

    for (const auto& spk : roster) {
        SpeakerEntry entry;
        entry.id = spk.id;
        entry.background = spk.background;
        for (const auto& plan : plans) {
            if (plan.speaker->id != spk.id) continue;
            UtteranceEntry utt;
            utt.id = plan.id;
            utt.speaker_id = spk.id;
            utt.kind = plan.kind;
            utt.duration_seconds = plan.duration;
            utt.frames = static_cast<size_t>(std::lround(plan.duration * kFramesPerSecond));
            utt.path = "features/" + plan.id + ".mfcv";
            entry.utterances.push_back(std::move(utt));
        }
        corpus.manifest.speakers.push_back(std::move(entry));
    }

    save_manifest(corpus.manifest, out_dir / "manifest.json");
    return corpus;
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
    nlohmann::json j;
    j["version"] = 1;
    nlohmann::json speakers = nlohmann::json::array();
    for (const auto& spk : manifest.speakers) {
        nlohmann::json utts = nlohmann::json::array();
        for (const auto& u : spk.utterances)
            utts.push_back({{"id", u.id},
                            {"kind", u.kind == UtteranceKind::kTrain ? "train" : "test"},
                            {"duration_seconds", u.duration_seconds},
                            {"frames", u.frames},
                            {"path", u.path}});
        speakers.push_back({{"id", spk.id}, {"role", spk.background ? "background" : "client"}, {"utterances", utts}});
    }
    j["speakers"] = speakers;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write manifest: " + path.string());
    out << j.dump(1) << "\n";
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest: invalid JSON: " + std::string(e.what()));
    }
    CorpusManifest manifest;
    try {
        if (j.at("version").get<int>() != 1) throw FormatError("manifest: unsupported version");
        for (const auto& s : j.at("speakers")) {
            SpeakerEntry spk;
            spk.id = s.at("id").get<std::string>();
            const auto role = s.at("role").get<std::string>();
            if (role != "background" && role != "client") throw FormatError("manifest: unknown role " + role);
            spk.background = role == "background";
            for (const auto& u : s.at("utterances")) {
                UtteranceEntry utt;
                utt.id = u.at("id").get<std::string>();
                utt.speaker_id = spk.id;
                utt.kind = u.at("kind").get<std::string>() == "train" ? UtteranceKind::kTrain : UtteranceKind::kTest;
                utt.duration_seconds = u.at("duration_seconds").get<double>();
                utt.frames = u.at("frames").get<size_t>();
                utt.path = u.at("path").get<std::string>();
                spk.utterances.push_back(std::move(utt));
            }
            manifest.speakers.push_back(std::move(spk));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest: missing or malformed field: " + std::string(e.what()));
    }
    return manifest;
}

std::vector<Trial> all_vs_all_trials(const CorpusManifest& manifest, double duration_seconds) {
    const auto clients = manifest.clients();
    std::vector<Trial> trials;
    for (const auto* spk : clients)
        for (const auto& utt : spk->utterances) {
            if (utt.kind != UtteranceKind::kTest || utt.duration_seconds != duration_seconds) continue;
            for (const auto* model : clients)
                trials.push_back({model->id, utt.id, model->id == spk->id});
        }
    return trials;
}

double TrimodalData::mixture_mean() const {
    return weights[0] * means[0] + weights[1] * means[1] + weights[2] * means[2];
}

TrimodalData make_trimodal_1d(size_t n, uint64_t seed) {
    if (n < 300) throw ValidationError("make_trimodal_1d: need at least 300 samples");
    TrimodalData data;
    data.weights = {0.3, 0.4, 0.3};
    data.means = {-5.0, 3.0, 12.0};
    data.sigmas = {1.0, 1.2, 1.5};
    data.samples.resize(n);
    Rng rng(derive_seed(seed, 0x7472696d6f64616cull));  // "trimodal"
    for (size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        const int c = u < data.weights[0] ? 0 : (u < data.weights[0] + data.weights[1] ? 1 : 2);
        data.samples[i] = data.means[c] + data.sigmas[c] * rng.normal();
    }
    return data;
}

AudioClip make_harmonic_clip(double f0_hz, int harmonics, double speech_seconds, double pause_seconds,
                             int sample_rate) {
    if (harmonics < 1) throw ValidationError("make_harmonic_clip: need at least one harmonic");
    AudioClip clip;
    clip.sample_rate = sample_rate;
    const auto pause = static_cast<size_t>(std::lround(pause_seconds * sample_rate));
    const auto speech = static_cast<size_t>(std::lround(speech_seconds * sample_rate));
    clip.samples.assign(pause + speech + pause, 0.0);
    double peak = 0.0;
    for (int h = 1; h <= harmonics; ++h) peak += 1.0 / h;
    const double scale = 0.6 / peak;
    const double two_pi = 6.283185307179586476925286766559;
    for (size_t i = 0; i < speech; ++i) {
        double v = 0.0;
        for (int h = 1; h <= harmonics; ++h)
            v += (1.0 / h) * std::sin(two_pi * f0_hz * h * static_cast<double>(i) / sample_rate);
        clip.samples[pause + i] = scale * v;
    }
    return clip;
}

}  // namespace svt
