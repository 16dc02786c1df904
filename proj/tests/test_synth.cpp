#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "svt/pipeline.hpp"
#include "svt/synth.hpp"

using namespace svt;
namespace fs = std::filesystem;

namespace {

CorpusConfig tiny_config() {
    CorpusConfig cfg;
    cfg.n_clients = 4;
    cfg.n_background = 2;
    cfg.train_seconds = 6.0;
    cfg.test_durations = {2.0, 1.0};
    cfg.n_test_per_speaker = 1;
    cfg.zone_count = 16;
    cfg.zones_per_utterance = 14;
    cfg.seed = 77;
    return cfg;
}

uint64_t hash_tree(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& p : files) {
        const auto rel = fs::relative(p, root).string();
        h = fnv1a64(rel.data(), rel.size(), h);
        h = fnv1a64_file(p) ^ (h * 0x100000001b3ull);
    }
    return h;
}

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("identical config and seed give bit-identical corpora") {
    const auto dir_a = temp_dir("svt_corpus_a");
    const auto dir_b = temp_dir("svt_corpus_b");
    make_corpus(tiny_config(), dir_a, 1);
    make_corpus(tiny_config(), dir_b, 3);  // job count must not matter
    CHECK(hash_tree(dir_a) == hash_tree(dir_b));

    CorpusConfig other = tiny_config();
    other.seed = 78;
    const auto dir_c = temp_dir("svt_corpus_c");
    make_corpus(other, dir_c, 1);
    CHECK(hash_tree(dir_a) != hash_tree(dir_c));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    fs::remove_all(dir_c);
}

TEST_CASE("frame counts follow duration at 100 frames per second") {
    CorpusConfig cfg = tiny_config();
    cfg.n_clients = 2;
    cfg.train_seconds = 120.0;
    const auto dir = temp_dir("svt_corpus_frames");
    const SyntheticCorpus corpus = make_corpus(cfg, dir, 1);
    for (const auto& spk : corpus.manifest.speakers) {
        for (const auto& utt : spk.utterances) {
            CHECK(utt.frames == static_cast<size_t>(std::lround(utt.duration_seconds * 100.0)));
            const FeatureSequence seq = load_features(dir / utt.path);
            CHECK(seq.frames() == utt.frames);
            CHECK(seq.dim == cfg.dim);
            if (utt.kind == UtteranceKind::kTrain) CHECK(seq.frames() == 12000);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("manifest reserves a disjoint background speaker set") {
    const auto dir = temp_dir("svt_corpus_roles");
    const SyntheticCorpus corpus = make_corpus(tiny_config(), dir, 1);
    const auto clients = corpus.manifest.clients();
    const auto background = corpus.manifest.background();
    CHECK(clients.size() == 4);
    CHECK(background.size() == 2);
    std::set<std::string> client_ids, background_ids;
    for (const auto* spk : clients) client_ids.insert(spk->id);
    for (const auto* spk : background) {
        background_ids.insert(spk->id);
        CHECK(spk->utterances.size() == 1);  // training speech only
    }
    for (const auto& id : background_ids) CHECK(client_ids.count(id) == 0);

    const CorpusManifest loaded = load_manifest(dir / "manifest.json");
    CHECK(loaded.speakers.size() == corpus.manifest.speakers.size());
    CHECK(loaded.clients().size() == 4);
    fs::remove_all(dir);
}

TEST_CASE("ground truth records the generating zone of every frame") {
    const auto dir = temp_dir("svt_corpus_truth");
    const CorpusConfig cfg = tiny_config();
    const SyntheticCorpus corpus = make_corpus(cfg, dir, 1);
    for (const auto& spk : corpus.manifest.speakers)
        for (const auto& utt : spk.utterances) {
            const auto it = corpus.truth.utterances.find(utt.id);
            REQUIRE(it != corpus.truth.utterances.end());
            CHECK(it->second.frame_zones.size() == utt.frames);
            const std::set<int> subset(it->second.zone_subset.begin(), it->second.zone_subset.end());
            CHECK(subset.size() == it->second.zone_subset.size());
            for (const auto z : it->second.frame_zones) CHECK(subset.count(z) == 1);
            const int expected_coverage = cfg.coverage(utt.duration_seconds);
            CHECK(static_cast<int>(subset.size()) == expected_coverage);
        }
    fs::remove_all(dir);
}

TEST_CASE("coverage saturates with duration") {
    CorpusConfig cfg = tiny_config();
    cfg.zone_count = 64;
    cfg.zones_per_utterance = 56;
    cfg.train_seconds = 120.0;
    CHECK(cfg.coverage(120.0) == 56);
    CHECK(cfg.coverage(5.0) < cfg.coverage(10.0));
    CHECK(cfg.coverage(10.0) < cfg.coverage(20.0));
    CHECK(cfg.coverage(20.0) < cfg.coverage(120.0));
    CHECK(cfg.coverage(1e9) == 64);
    cfg.zones_per_utterance = 64;
    CHECK(cfg.coverage(0.5) == 64);
}

TEST_CASE("lower zone coverage raises measured tau monotonically") {
    // The generator's ground truth is the oracle: with training coverage
    // shrinking, more test frames come from zones the speaker model never
    // saw, so both the true unseen fraction and the measured mean tau rise.
    double prev_measured = -1.0, prev_truth = -1.0;
    for (const int zpu : {15, 10, 6}) {
        CorpusConfig cfg;
        cfg.n_clients = 4;
        cfg.n_background = 3;
        cfg.train_seconds = 20.0;
        cfg.test_durations = {5.0};
        cfg.n_test_per_speaker = 2;
        cfg.zone_count = 16;
        cfg.zones_per_utterance = zpu;
        cfg.zone_sigma = 0.3;
        cfg.speaker_shift_scale = 0.3;
        cfg.seed = 99;
        const auto dir = temp_dir("svt_corpus_tau");
        const SyntheticCorpus corpus = make_corpus(cfg, dir, 1);

        const FeatureSequence pooled = pool_background_features(corpus.manifest, dir);
        EmConfig em;
        em.max_iterations = 8;
        em.split_iterations = 3;
        const DiagonalGmm ubm = train_em(pooled, 8, em).model;

        double tau_acc = 0.0, truth_acc = 0.0;
        size_t count = 0;
        for (const auto* spk : corpus.manifest.clients()) {
            const UtteranceEntry* train = nullptr;
            for (const auto& utt : spk->utterances)
                if (utt.kind == UtteranceKind::kTrain) train = &utt;
            const DiagonalGmm model = map_adapt_means(ubm, load_features(dir / train->path), MapConfig{});
            const auto& train_zones = corpus.truth.utterances.at(train->id).zone_subset;
            const std::set<int> seen_zones(train_zones.begin(), train_zones.end());
            for (const auto& utt : spk->utterances) {
                if (utt.kind != UtteranceKind::kTest) continue;
                const FeatureSequence y = load_features(dir / utt.path);
                const ZoneSplit split = zone_split(model, ubm, y, 0.05);
                if (!split.tau_infinite) tau_acc += split.tau;
                size_t unseen = 0;
                const auto& zones = corpus.truth.utterances.at(utt.id).frame_zones;
                for (const auto z : zones) unseen += seen_zones.count(z) == 0 ? 1 : 0;
                truth_acc += static_cast<double>(unseen) / static_cast<double>(zones.size());
                ++count;
            }
        }
        const double measured = tau_acc / static_cast<double>(count);
        const double truth = truth_acc / static_cast<double>(count);
        CHECK(measured > prev_measured);
        CHECK(truth >= prev_truth);
        prev_measured = measured;
        prev_truth = truth;
        fs::remove_all(dir);
    }
}

TEST_CASE("trimodal histogram has exactly three well-separated modes") {
    const TrimodalData data = make_trimodal_1d(3000, 404);
    const auto [lo_it, hi_it] = std::minmax_element(data.samples.begin(), data.samples.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<int> bins(30, 0);
    for (const double v : data.samples) {
        auto b = static_cast<size_t>((v - lo) / (hi - lo) * 30.0);
        if (b >= 30) b = 29;
        ++bins[b];
    }
    std::vector<int> maxima;
    for (int b = 0; b < 30; ++b) {
        const int left = b > 0 ? bins[b - 1] : -1;
        const int right = b < 29 ? bins[b + 1] : -1;
        if (bins[b] > left && bins[b] >= right && bins[b] > 10) maxima.push_back(b);
    }
    // merge plateaus: count maxima separated by at least 3 bins
    std::vector<int> separated;
    for (const int b : maxima)
        if (separated.empty() || b - separated.back() >= 3) separated.push_back(b);
    CHECK(separated.size() == 3);

    // generator parameters confirm the separation before trusting the test
    CHECK(data.means[1] - data.means[0] > 4.0 * (data.sigmas[0] + data.sigmas[1]) / 2.0);
    CHECK(data.means[2] - data.means[1] > 4.0 * (data.sigmas[1] + data.sigmas[2]) / 2.0);
}

TEST_CASE("trimodal sample mean approaches the closed-form mixture mean") {
    const TrimodalData data = make_trimodal_1d(3000, 11);
    double mean = 0.0;
    for (const double v : data.samples) mean += v;
    mean /= static_cast<double>(data.samples.size());
    // standard error of the mixture mean
    double second_moment = 0.0;
    for (int c = 0; c < 3; ++c)
        second_moment += data.weights[c] * (data.sigmas[c] * data.sigmas[c] + data.means[c] * data.means[c]);
    const double variance = second_moment - data.mixture_mean() * data.mixture_mean();
    const double se = std::sqrt(variance / static_cast<double>(data.samples.size()));
    CHECK(std::abs(mean - data.mixture_mean()) < 3.0 * se);
}

TEST_CASE("trimodal generation is reproducible and validates n") {
    const TrimodalData a = make_trimodal_1d(500, 9);
    const TrimodalData b = make_trimodal_1d(500, 9);
    CHECK(a.samples == b.samples);
    CHECK_THROWS_AS(make_trimodal_1d(299, 1), ValidationError);
}

TEST_CASE("harmonic clip runs the full audio front-end") {
    const AudioClip clip = make_harmonic_clip(220.0, 3, 1.0, 0.25);
    const AudioClip decoded = read_wav(write_wav(clip));
    CHECK(decoded.samples.size() == clip.samples.size());
    const SpeechMask mask = detect_speech(decoded, -30.0);
    const auto frames = frame_signal(decoded, mask);
    CHECK(frames.size() > 80);   // ~1 s of voiced material
    CHECK(frames.size() < 110);  // pauses dropped
    const FeatureSequence seq = mfcc(frames);
    seq.validate();
    CHECK(seq.dim == 19);
}

}  // TEST_SUITE
