#include "svt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

namespace svt {

FeatureSequence load_utterance(const CorpusManifest& manifest, const std::filesystem::path& corpus_root,
                               const std::string& utterance_id) {
    const UtteranceEntry* utt = manifest.find_utterance(utterance_id);
    if (utt == nullptr) throw ValidationError("unknown utterance id: " + utterance_id);
    return load_features(corpus_root / utt->path);
}

FeatureSequence pool_background_features(const CorpusManifest& manifest, const std::filesystem::path& corpus_root) {
    FeatureSequence pooled;
    for (const auto* spk : manifest.background()) {
        for (const auto& utt : spk->utterances) {
            if (utt.kind != UtteranceKind::kTrain) continue;
            const FeatureSequence seq = load_features(corpus_root / utt.path);
            if (pooled.dim == 0) pooled.dim = seq.dim;
            if (seq.dim != pooled.dim) throw ValidationError("pooled features: inconsistent dimensions");
            pooled.data.insert(pooled.data.end(), seq.data.begin(), seq.data.end());
        }
    }
    if (pooled.frames() == 0) throw ValidationError("pooled features: no background training data");
    pooled.source_id = "background_pool";
    return pooled;
}

std::map<std::string, std::vector<Supervector>> build_training_supervectors(
    const CorpusManifest& manifest, const std::filesystem::path& corpus_root, const DiagonalGmm& ubm,
    int partitions, Normalization normalization, const MapConfig& map_cfg, int jobs) {
    const auto clients = manifest.clients();
    std::vector<std::vector<Supervector>> slots(clients.size());
    parallel_for(clients.size(), jobs, [&](size_t s) {
        const SpeakerEntry* spk = clients[s];
        const UtteranceEntry* train = nullptr;
        for (const auto& utt : spk->utterances)
            if (utt.kind == UtteranceKind::kTrain) train = &utt;
        if (train == nullptr) throw ValidationError("speaker " + spk->id + " has no training utterance");
        const FeatureSequence seq = load_features(corpus_root / train->path);
        const PartitionPlan plan = plan_partitions(seq.frames(), partitions);
        for (int p = 0; p < plan.partitions; ++p) {
            const auto [start, end] = plan.bounds[p];
            const FeatureSequence part = slice_frames(seq, start, end);
            const DiagonalGmm adapted = map_adapt_means(ubm, part, map_cfg);
            Supervector sv = build_supervector(adapted, ubm, normalization);
            sv.speaker_id = spk->id;
            sv.partition_index = static_cast<uint32_t>(p);
            slots[s].push_back(std::move(sv));
        }
    });
    std::map<std::string, std::vector<Supervector>> out;
    for (size_t s = 0; s < clients.size(); ++s) out[clients[s]->id] = std::move(slots[s]);
    return out;
}

std::map<std::string, SvmModel> train_speaker_svms(
    const std::map<std::string, std::vector<Supervector>>& per_speaker, double c, int jobs) {
    std::vector<const std::string*> ids;
    for (const auto& [id, svs] : per_speaker) ids.push_back(&id);
    std::vector<SvmModel> slots(ids.size());
    parallel_for(ids.size(), jobs, [&](size_t i) {
        const LabeledSupervectorSet set = build_training_set(per_speaker, *ids[i]);
        slots[i] = train_soft_margin(set, c);
    });
    std::map<std::string, SvmModel> out;
    for (size_t i = 0; i < ids.size(); ++i) out[*ids[i]] = std::move(slots[i]);
    return out;
}

namespace {

std::vector<std::string> distinct_test_utterances(const std::vector<Trial>& trials) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    for (const auto& t : trials)
        if (seen.insert(t.test_utterance).second) out.push_back(t.test_utterance);
    return out;
}

std::vector<std::string> distinct_targets(const std::vector<Trial>& trials) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    for (const auto& t : trials)
        if (seen.insert(t.target_speaker).second) out.push_back(t.target_speaker);
    return out;
}

}  // namespace

GmmUbmScorer::GmmUbmScorer(const DiagonalGmm& ubm, const CorpusManifest& manifest,
                           std::filesystem::path corpus_root, MapConfig map_cfg, int jobs)
    : ubm_(ubm), manifest_(manifest), root_(std::move(corpus_root)), map_cfg_(map_cfg), jobs_(jobs) {}

void GmmUbmScorer::prepare(const std::vector<Trial>& trials) {
    const auto utt_ids = distinct_test_utterances(trials);
    const auto targets = distinct_targets(trials);

    std::vector<FeatureSequence> feature_slots(utt_ids.size());
    parallel_for(utt_ids.size(), jobs_, [&](size_t i) {
        feature_slots[i] = load_utterance(manifest_, root_, utt_ids[i]);
    });
    for (size_t i = 0; i < utt_ids.size(); ++i) test_features_[utt_ids[i]] = std::move(feature_slots[i]);

    std::vector<DiagonalGmm> model_slots(targets.size());
    parallel_for(targets.size(), jobs_, [&](size_t i) {
        const SpeakerEntry* spk = nullptr;
        for (const auto& s : manifest_.speakers)
            if (s.id == targets[i]) spk = &s;
        if (spk == nullptr) throw ValidationError("unknown target speaker id: " + targets[i]);
        const UtteranceEntry* train = nullptr;
        for (const auto& utt : spk->utterances)
            if (utt.kind == UtteranceKind::kTrain) train = &utt;
        if (train == nullptr) throw ValidationError("speaker " + targets[i] + " has no training utterance");
        model_slots[i] = map_adapt_means(ubm_, load_features(root_ / train->path), map_cfg_);
    });
    for (size_t i = 0; i < targets.size(); ++i) speaker_models_[targets[i]] = std::move(model_slots[i]);

    std::vector<double> ubm_ll(utt_ids.size());
    const GmmEvaluator ubm_eval(ubm_);
    parallel_for(utt_ids.size(), jobs_, [&](size_t i) {
        const FeatureSequence& y = test_features_.at(utt_ids[i]);
        double acc = 0.0;
        for (size_t t = 0; t < y.frames(); ++t) acc += ubm_eval.log_pdf(y.row(t));
        ubm_ll[i] = acc;
    });
    for (size_t i = 0; i < utt_ids.size(); ++i) ubm_total_ll_[utt_ids[i]] = ubm_ll[i];
}

double GmmUbmScorer::score(const Trial& trial) const {
    const auto model_it = speaker_models_.find(trial.target_speaker);
    if (model_it == speaker_models_.end())
        throw ValidationError("unknown target speaker id: " + trial.target_speaker);
    const auto feat_it = test_features_.find(trial.test_utterance);
    if (feat_it == test_features_.end())
        throw ValidationError("unknown test utterance id: " + trial.test_utterance);
    const FeatureSequence& y = feat_it->second;
    if (y.frames() == 0) throw ValidationError("empty test utterance: " + trial.test_utterance);

    const GmmEvaluator spk_eval(model_it->second);
    double acc = 0.0;
    for (size_t t = 0; t < y.frames(); ++t) acc += spk_eval.log_pdf(y.row(t));
    return (acc - ubm_total_ll_.at(trial.test_utterance)) / static_cast<double>(y.frames());
}

GmmSvmScorer::GmmSvmScorer(const std::map<std::string, SvmModel>& models, const DiagonalGmm& ubm,
                           const CorpusManifest& manifest, std::filesystem::path corpus_root, MapConfig map_cfg,
                           Normalization normalization, int jobs)
    : models_(models),
      ubm_(ubm),
      manifest_(manifest),
      root_(std::move(corpus_root)),
      map_cfg_(map_cfg),
      normalization_(normalization),
      jobs_(jobs) {}

void GmmSvmScorer::prepare(const std::vector<Trial>& trials) {
    const auto utt_ids = distinct_test_utterances(trials);
    std::vector<Supervector> slots(utt_ids.size());
    parallel_for(utt_ids.size(), jobs_, [&](size_t i) {
        const FeatureSequence y = load_utterance(manifest_, root_, utt_ids[i]);
        const DiagonalGmm adapted = map_adapt_means(ubm_, y, map_cfg_);
        slots[i] = build_supervector(adapted, ubm_, normalization_);
        slots[i].speaker_id = manifest_.find_utterance(utt_ids[i])->speaker_id;
    });
    for (size_t i = 0; i < utt_ids.size(); ++i) test_supervectors_[utt_ids[i]] = std::move(slots[i]);
}

double GmmSvmScorer::score(const Trial& trial) const {
    const auto model_it = models_.find(trial.target_speaker);
    if (model_it == models_.end()) throw ValidationError("no SVM model for speaker: " + trial.target_speaker);
    const auto sv_it = test_supervectors_.find(trial.test_utterance);
    if (sv_it == test_supervectors_.end())
        throw ValidationError("unknown test utterance id: " + trial.test_utterance);
    return decision_value(model_it->second, sv_it->second);
}

DiagnosticsRow compute_diagnostics(const CorpusManifest& manifest, const std::filesystem::path& corpus_root,
                                   const DiagonalGmm& ubm,
                                   const std::map<std::string, std::vector<Supervector>>& per_speaker,
                                   const std::map<std::string, SvmModel>& models, double epsilon,
                                   Normalization normalization, const MapConfig& map_cfg, int jobs) {
    DiagnosticsRow row;
    row.gmm_components = ubm.num_components;
    row.partitions = per_speaker.empty() ? 0 : static_cast<int>(per_speaker.begin()->second.size());
    row.normalization = normalization;

    // Between-class distance over first-partition training supervectors.
    std::vector<Supervector> class_svs;
    for (const auto& [id, svs] : per_speaker) {
        if (svs.empty()) throw ValidationError("diagnostics: speaker without supervectors: " + id);
        class_svs.push_back(svs.front());
    }
    row.avg_between_class_distance = avg_between_class_distance(distance_matrix(class_svs));

    // Zone split and MAP mismatch over every client test utterance. Speaker
    // models are adapted once from the full training utterance.
    const Supervector ubm_sv = build_supervector(ubm, ubm, normalization);
    const auto clients = manifest.clients();
    std::vector<DiagonalGmm> speaker_models(clients.size());
    parallel_for(clients.size(), jobs, [&](size_t s) {
        const UtteranceEntry* train = nullptr;
        for (const auto& utt : clients[s]->utterances)
            if (utt.kind == UtteranceKind::kTrain) train = &utt;
        if (train == nullptr) throw ValidationError("diagnostics: speaker without training utterance");
        speaker_models[s] = map_adapt_means(ubm, load_features(corpus_root / train->path), map_cfg);
    });

    struct TestItem {
        size_t speaker_index;
        const UtteranceEntry* utterance;
    };
    std::vector<TestItem> items;
    for (size_t s = 0; s < clients.size(); ++s)
        for (const auto& utt : clients[s]->utterances)
            if (utt.kind == UtteranceKind::kTest) items.push_back({s, &utt});

    std::vector<double> taus(items.size()), mismatches(items.size());
    std::vector<uint8_t> tau_finite(items.size(), 0);
    parallel_for(items.size(), jobs, [&](size_t i) {
        const auto& item = items[i];
        const FeatureSequence y = load_features(corpus_root / item.utterance->path);
        const ZoneSplit split = zone_split(speaker_models[item.speaker_index], ubm, y, epsilon);
        taus[i] = split.tau;
        tau_finite[i] = split.tau_infinite ? 0 : 1;

        const DiagonalGmm test_adapted = map_adapt_means(ubm, y, map_cfg);
        const Supervector test_sv = build_supervector(test_adapted, ubm, normalization);
        const auto& train_svs = per_speaker.at(clients[item.speaker_index]->id);
        double acc = 0.0;
        for (const auto& sv : train_svs) acc += map_mismatch(sv, test_sv, ubm_sv).mismatch;
        mismatches[i] = acc / static_cast<double>(train_svs.size());
    });

    size_t finite = 0;
    double tau_acc = 0.0, mis_acc = 0.0;
    for (size_t i = 0; i < items.size(); ++i) {
        if (tau_finite[i]) {
            tau_acc += taus[i];
            ++finite;
        }
        mis_acc += mismatches[i];
    }
    row.mean_tau = finite > 0 ? tau_acc / static_cast<double>(finite) : std::numeric_limits<double>::infinity();
    row.mean_mismatch = items.empty() ? 0.0 : mis_acc / static_cast<double>(items.size());

    // SV census means and the error bound.
    if (!models.empty()) {
        double pos = 0.0, neg = 0.0, bound = 0.0;
        const auto n_train = static_cast<double>(per_speaker.size() * per_speaker.begin()->second.size());
        for (const auto& [id, model] : models) {
            const SvCensus c = census(model);
            pos += c.positive_sv_count;
            neg += c.negative_sv_count;
            bound += vapnik_bound(c.total(), static_cast<size_t>(n_train));
        }
        const auto nm = static_cast<double>(models.size());
        row.mean_positive_sv = pos / nm;
        row.mean_negative_sv = neg / nm;
        row.vapnik_bound_value = bound / nm;
    }
    return row;
}

void save_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write diagnostics csv: " + path.string());
    out << "M,P,normalization,avg_between_class_distance,mean_tau,mean_mismatch,mean_positive_sv,"
           "mean_negative_sv,vapnik_bound\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.gmm_components,
                      r.partitions, to_string(r.normalization).c_str(), r.avg_between_class_distance, r.mean_tau,
                      r.mean_mismatch, r.mean_positive_sv, r.mean_negative_sv, r.vapnik_bound_value);
        out << buf << '\n';
    }
}

}  // namespace svt
