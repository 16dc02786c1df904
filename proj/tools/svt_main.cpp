#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "svt/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

svt::ExperimentConfig resolve_config(const std::string& config_arg) {
    if (config_arg.empty() || config_arg == "default") {
        svt::ExperimentConfig cfg;
        cfg.finalize();
        return cfg;
    }
    return svt::load_config(config_arg);
}

// Every command drops the fully resolved config and the fingerprints of its
// file inputs next to its outputs.
void write_run_metadata(const svt::ExperimentConfig& cfg, const fs::path& out,
                        const std::vector<fs::path>& inputs) {
    const bool is_dir = fs::is_directory(out);
    const fs::path cfg_path = is_dir ? out / "config.resolved" : fs::path(out.string() + ".config");
    const fs::path inputs_path = is_dir ? out / "inputs.txt" : fs::path(out.string() + ".inputs");
    svt::write_resolved_config(cfg, cfg_path);
    std::ofstream ilog(inputs_path, std::ios::trunc);
    for (const auto& p : inputs) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(svt::fnv1a64_file(p)));
        ilog << buf << "  " << p.string() << "\n";
    }
}

int cmd_synth(const std::string& config_arg, const fs::path& out, int jobs) {
    const svt::ExperimentConfig cfg = resolve_config(config_arg);
    const svt::SyntheticCorpus corpus = svt::make_corpus(cfg.corpus, out, jobs);
    for (const double d : cfg.corpus.test_durations) {
        const auto trials = svt::all_vs_all_trials(corpus.manifest, d);
        char name[64];
        std::snprintf(name, sizeof(name), "trials_%gs.txt", d);
        svt::save_trials(trials, out / name);
    }
    std::vector<fs::path> inputs;
    if (!config_arg.empty() && config_arg != "default") inputs.push_back(config_arg);
    write_run_metadata(cfg, out, inputs);
    std::fprintf(stderr, "synth: %zu speakers, %zu utterances -> %s\n", corpus.manifest.speakers.size(),
                 corpus.truth.utterances.size(), out.string().c_str());
    return 0;
}

int cmd_train_ubm(const std::string& config_arg, const fs::path& corpus_dir, int order, const fs::path& out,
                  int jobs) {
    svt::ExperimentConfig cfg = resolve_config(config_arg);
    const auto manifest = svt::load_manifest(corpus_dir / "manifest.json");
    const auto pooled = svt::pool_background_features(manifest, corpus_dir);
    std::fprintf(stderr, "train-ubm: %zu pooled frames, order %d\n", pooled.frames(), order);
    const svt::EmResult result = svt::train_em(pooled, order, cfg.em, jobs);
    if (result.respawned_components > 0)
        std::fprintf(stderr, "train-ubm: respawned %d degenerate components\n", result.respawned_components);
    save_gmm(result.model, cfg.em, out);
    write_run_metadata(cfg, out, {corpus_dir / "manifest.json"});
    const auto& final_stage = result.stages.back();
    std::fprintf(stderr, "train-ubm: final ll/frame %.6f after %zu iterations\n",
                 final_stage.ll_per_frame.back(), final_stage.ll_per_frame.size());
    return 0;
}

int cmd_build_supervectors(const std::string& config_arg, const fs::path& corpus_dir, const fs::path& ubm_path,
                           int partitions, const std::string& normalization, const fs::path& out, int jobs) {
    svt::ExperimentConfig cfg = resolve_config(config_arg);
    if (!normalization.empty()) cfg.normalization = svt::normalization_from_string(normalization);
    const auto manifest = svt::load_manifest(corpus_dir / "manifest.json");
    const svt::DiagonalGmm ubm = svt::load_gmm(ubm_path);
    const auto per_speaker =
        svt::build_training_supervectors(manifest, corpus_dir, ubm, partitions, cfg.normalization, cfg.map, jobs);

    std::vector<svt::Supervector> records;
    for (const auto& [id, svs] : per_speaker) records.insert(records.end(), svs.begin(), svs.end());
    svt::SvecMeta meta;
    meta.ubm_fingerprint = svt::gmm_fingerprint(ubm);
    meta.normalization = cfg.normalization;
    meta.gmm_components = ubm.num_components;
    meta.gmm_dim = ubm.dim;
    meta.relevance_factor = cfg.map.relevance_factor;
    meta.partitions = static_cast<uint32_t>(partitions);
    svt::save_supervectors(records, meta, out);
    write_run_metadata(cfg, out, {corpus_dir / "manifest.json", ubm_path});
    std::fprintf(stderr, "build-supervectors: %zu records of dim %zu -> %s\n", records.size(),
                 records.front().values.size(), out.string().c_str());
    return 0;
}

int cmd_train_svm(const std::string& config_arg, const fs::path& svec_path, double c_override,
                  const fs::path& out_dir, int jobs) {
    svt::ExperimentConfig cfg = resolve_config(config_arg);
    if (c_override > 0.0) cfg.svm_c = c_override;
    const double c = cfg.svm_c;
    svt::SvecMeta meta;
    const auto records = svt::load_supervectors(svec_path, &meta);
    std::map<std::string, std::vector<svt::Supervector>> per_speaker;
    for (const auto& sv : records) per_speaker[sv.speaker_id].push_back(sv);
    for (auto& [id, svs] : per_speaker)
        std::sort(svs.begin(), svs.end(),
                  [](const svt::Supervector& a, const svt::Supervector& b) {
                      return a.partition_index < b.partition_index;
                  });

    fs::create_directories(out_dir);
    const auto models = svt::train_speaker_svms(per_speaker, c, jobs);
    for (const auto& [id, model] : models) svt::save_svm(model, out_dir / (id + ".svm.json"));
    write_run_metadata(cfg, out_dir, {svec_path});
    std::fprintf(stderr, "train-svm: %zu models (C=%g) -> %s\n", models.size(), c, out_dir.string().c_str());
    return 0;
}

int cmd_score(const std::string& config_arg, const std::string& system, const fs::path& trials_path,
              const fs::path& models, const fs::path& ubm_path, const fs::path& corpus_dir, const fs::path& out,
              int jobs) {
    svt::ExperimentConfig cfg = resolve_config(config_arg);
    const auto manifest = svt::load_manifest(corpus_dir / "manifest.json");
    const auto trials = svt::load_trials(trials_path);

    svt::ScoreSet scores;
    std::vector<fs::path> inputs{trials_path, corpus_dir / "manifest.json"};
    if (system == "gmm-ubm") {
        const svt::DiagonalGmm ubm = svt::load_gmm(models);
        inputs.push_back(models);
        svt::GmmUbmScorer scorer(ubm, manifest, corpus_dir, cfg.map, jobs);
        scores = svt::run_trials(trials, scorer, jobs);
    } else if (system == "gmm-svm") {
        const svt::DiagonalGmm ubm = svt::load_gmm(ubm_path);
        inputs.push_back(ubm_path);
        inputs.push_back(models);
        std::map<std::string, svt::SvmModel> svm_models;
        svt::Normalization norm = cfg.normalization;
        for (const auto& entry : fs::directory_iterator(models)) {
            if (entry.path().extension() != ".json" ||
                entry.path().string().find(".svm.json") == std::string::npos)
                continue;
            svt::SvmModel model = svt::load_svm(entry.path());
            if (model.ubm_fingerprint != svt::gmm_fingerprint(ubm))
                throw svt::ValidationError("score: SVM model " + entry.path().string() +
                                           " was trained against a different UBM");
            norm = model.normalization;
            svm_models[model.target_speaker] = std::move(model);
        }
        if (svm_models.empty()) throw svt::ValidationError("score: no .svm.json models in " + models.string());
        svt::GmmSvmScorer scorer(svm_models, ubm, manifest, corpus_dir, cfg.map, norm, jobs);
        scores = svt::run_trials(trials, scorer, jobs);
    } else {
        throw CLI::ValidationError("--system must be gmm-ubm or gmm-svm");  // NOLINT
    }
    svt::save_scores(scores, out);
    write_run_metadata(cfg, out, inputs);
    std::fprintf(stderr, "score: %zu trials -> %s\n", scores.records.size(), out.string().c_str());
    return 0;
}

int cmd_eval(const fs::path& scores_path, const fs::path& det_out) {
    const svt::ScoreSet scores = svt::load_scores(scores_path);
    const double eer = svt::compute_eer(scores);
    if (!det_out.empty()) svt::save_det_csv(svt::det_points(scores), det_out);
    std::printf("EER %.2f%%\n", eer * 100.0);
    return 0;
}

int cmd_diagnose(const std::string& config_arg, const fs::path& corpus_dir, const fs::path& ubm_path,
                 const fs::path& svec_path, const fs::path& models_dir, double epsilon, const fs::path& out,
                 int jobs) {
    svt::ExperimentConfig cfg = resolve_config(config_arg);
    if (epsilon > 0.0) cfg.diagnostics_epsilon = epsilon;
    const auto manifest = svt::load_manifest(corpus_dir / "manifest.json");
    const svt::DiagonalGmm ubm = svt::load_gmm(ubm_path);
    svt::SvecMeta meta;
    const auto records = svt::load_supervectors(svec_path, &meta);
    if (meta.ubm_fingerprint != svt::gmm_fingerprint(ubm))
        throw svt::ValidationError("diagnose: supervectors were built against a different UBM");
    std::map<std::string, std::vector<svt::Supervector>> per_speaker;
    for (const auto& sv : records) per_speaker[sv.speaker_id].push_back(sv);
    for (auto& [id, svs] : per_speaker)
        std::sort(svs.begin(), svs.end(),
                  [](const svt::Supervector& a, const svt::Supervector& b) {
                      return a.partition_index < b.partition_index;
                  });

    std::map<std::string, svt::SvmModel> models;
    if (!models_dir.empty()) {
        for (const auto& entry : fs::directory_iterator(models_dir)) {
            if (entry.path().string().find(".svm.json") == std::string::npos) continue;
            svt::SvmModel model = svt::load_svm(entry.path());
            models[model.target_speaker] = std::move(model);
        }
    }

    const svt::DiagnosticsRow row = svt::compute_diagnostics(
        manifest, corpus_dir, ubm, per_speaker, models, cfg.diagnostics_epsilon, meta.normalization, cfg.map, jobs);
    svt::save_diagnostics_csv({row}, out);
    std::vector<fs::path> inputs{corpus_dir / "manifest.json", ubm_path, svec_path};
    write_run_metadata(cfg, out, inputs);
    std::fprintf(stderr, "diagnose: row written to %s\n", out.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speaker-verification toolkit: GMM-UBM and GMM-SVM classifiers with utterance partitioning"};
    app.require_subcommand(1);

    std::string config_arg = "default";
    int jobs = svt::default_jobs();
    app.add_option("--config", config_arg, "experiment config file, or 'default'")->capture_default_str();
    app.add_option("--jobs", jobs, "max worker threads")->capture_default_str();

    std::string out, corpus, ubm, models, trials, svec, det_out, scores, system, normalization;
    int order = 128, partitions = 1;
    double c_param = 0.0, epsilon = 0.0;

    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic corpus");
    synth->add_option("--out", out, "output corpus directory")->required();

    auto* train_ubm = app.add_subcommand("train-ubm", "train the universal background model");
    train_ubm->add_option("--corpus", corpus, "corpus directory")->required();
    train_ubm->add_option("--order", order, "mixture order")->required();
    train_ubm->add_option("--out", out, "output model file")->required();

    auto* build_sv = app.add_subcommand("build-supervectors", "MAP-adapt training partitions into supervectors");
    build_sv->add_option("--corpus", corpus, "corpus directory")->required();
    build_sv->add_option("--ubm", ubm, "UBM model file")->required();
    build_sv->add_option("--partitions", partitions, "training partitions per speaker")->required();
    build_sv->add_option("--normalization", normalization, "raw or kl_normalized");
    build_sv->add_option("--out", out, "output SVEC file")->required();

    auto* train_svm = app.add_subcommand("train-svm", "train one-vs-rest SVM models");
    train_svm->add_option("--supervectors", svec, "SVEC file")->required();
    train_svm->add_option("--c", c_param, "soft-margin penalty (defaults to the config's svm.c)");
    train_svm->add_option("--out-dir", out, "output model directory")->required();

    auto* score = app.add_subcommand("score", "run a trial list through a classifier");
    score->add_option("--system", system, "gmm-ubm or gmm-svm")->required();
    score->add_option("--trials", trials, "trial list file")->required();
    score->add_option("--models", models, "UBM file (gmm-ubm) or SVM model directory (gmm-svm)")->required();
    score->add_option("--ubm", ubm, "UBM file (required for gmm-svm)");
    score->add_option("--corpus", corpus, "corpus directory with the test features")->required();
    score->add_option("--out", out, "output score file")->required();

    auto* eval_cmd = app.add_subcommand("eval", "compute EER and DET points from a score file");
    eval_cmd->add_option("--scores", scores, "score file")->required();
    eval_cmd->add_option("--det-out", det_out, "DET curve CSV output");

    auto* diagnose = app.add_subcommand("diagnose", "emit the diagnostics CSV for one experiment");
    diagnose->add_option("--corpus", corpus, "corpus directory")->required();
    diagnose->add_option("--ubm", ubm, "UBM model file")->required();
    diagnose->add_option("--supervectors", svec, "training SVEC file")->required();
    diagnose->add_option("--models", models, "SVM model directory (optional)");
    diagnose->add_option("--epsilon", epsilon, "zone-split LLR threshold in nats");
    diagnose->add_option("--out", out, "output CSV file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(config_arg, out, jobs);
        if (train_ubm->parsed()) return cmd_train_ubm(config_arg, corpus, order, out, jobs);
        if (build_sv->parsed())
            return cmd_build_supervectors(config_arg, corpus, ubm, partitions, normalization, out, jobs);
        if (train_svm->parsed()) return cmd_train_svm(config_arg, svec, c_param, out, jobs);
        if (score->parsed()) {
            if (system == "gmm-svm" && ubm.empty())
                throw CLI::ValidationError("score: --ubm is required for gmm-svm");
            return cmd_score(config_arg, system, trials, models, ubm, corpus, out, jobs);
        }
        if (eval_cmd->parsed()) return cmd_eval(scores, det_out);
        if (diagnose->parsed())
            return cmd_diagnose(config_arg, corpus, ubm, svec, models, epsilon, out, jobs);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const svt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
