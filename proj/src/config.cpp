#include "svt/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace svt {

namespace {

std::string join_list(const std::vector<int>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::string join_list(const std::vector<double>& v) {
    std::string out;
    char buf[64];
    for (size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ',';
        std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
        out += buf;
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    if (out.empty()) throw ValidationError("config: empty list value");
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw ValidationError("config: empty list value");
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void ExperimentConfig::finalize() {
    corpus.seed = seed;
    em.seed = derive_seed(seed, 0x656d736565640aull);  // em stream
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream out;
    out << "seed=" << seed << "\n";
    out << "corpus.n_clients=" << corpus.n_clients << "\n";
    out << "corpus.n_background=" << corpus.n_background << "\n";
    out << "corpus.train_seconds=" << fmt(corpus.train_seconds) << "\n";
    out << "corpus.test_durations=" << join_list(corpus.test_durations) << "\n";
    out << "corpus.n_test_per_speaker=" << corpus.n_test_per_speaker << "\n";
    out << "corpus.zone_count=" << corpus.zone_count << "\n";
    out << "corpus.zones_per_utterance=" << corpus.zones_per_utterance << "\n";
    out << "corpus.dim=" << corpus.dim << "\n";
    out << "corpus.zone_mean_scale=" << fmt(corpus.zone_mean_scale) << "\n";
    out << "corpus.zone_sigma=" << fmt(corpus.zone_sigma) << "\n";
    out << "corpus.speaker_shift_scale=" << fmt(corpus.speaker_shift_scale) << "\n";
    out << "corpus.session_offset_scale=" << fmt(corpus.session_offset_scale) << "\n";
    out << "corpus.family_offset_scale=" << fmt(corpus.family_offset_scale) << "\n";
    out << "features.sample_rate=" << features.sample_rate << "\n";
    out << "features.frame_size=" << features.frame_size << "\n";
    out << "features.frame_hop=" << features.frame_hop << "\n";
    out << "features.fft_size=" << features.fft_size << "\n";
    out << "features.mel_filters=" << features.mel_filters << "\n";
    out << "features.mel_low_hz=" << fmt(features.mel_low_hz) << "\n";
    out << "features.mel_high_hz=" << fmt(features.mel_high_hz) << "\n";
    out << "features.log_floor=" << fmt(features.log_floor) << "\n";
    out << "features.pre_emphasis=" << fmt(features.pre_emphasis) << "\n";
    out << "features.num_coefficients=" << features.num_coefficients << "\n";
    out << "vad.floor_db=" << fmt(vad_floor_db) << "\n";
    out << "em.max_iterations=" << em.max_iterations << "\n";
    out << "em.ll_tolerance=" << fmt(em.ll_tolerance) << "\n";
    out << "em.variance_floor_ratio=" << fmt(em.variance_floor_ratio) << "\n";
    out << "em.split_iterations=" << em.split_iterations << "\n";
    out << "em.split_offset=" << fmt(em.split_offset) << "\n";
    out << "map.relevance_factor=" << fmt(map.relevance_factor) << "\n";
    out << "supervector.normalization=" << to_string(normalization) << "\n";
    out << "svm.c=" << fmt(svm_c) << "\n";
    out << "partition.p_list=" << join_list(p_list) << "\n";
    out << "ubm.m_list=" << join_list(m_list) << "\n";
    out << "diagnostics.epsilon=" << fmt(diagnostics_epsilon) << "\n";
    return out.str();
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    std::map<std::string, bool> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config: expected key=value at line " + std::to_string(lineno));
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (seen[key]) throw ValidationError("config: duplicate key '" + key + "'");
        seen[key] = true;
        try {
            if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "corpus.n_clients") cfg.corpus.n_clients = std::stoi(value);
            else if (key == "corpus.n_background") cfg.corpus.n_background = std::stoi(value);
            else if (key == "corpus.train_seconds") cfg.corpus.train_seconds = std::stod(value);
            else if (key == "corpus.test_durations") cfg.corpus.test_durations = parse_double_list(value);
            else if (key == "corpus.n_test_per_speaker") cfg.corpus.n_test_per_speaker = std::stoi(value);
            else if (key == "corpus.zone_count") cfg.corpus.zone_count = std::stoi(value);
            else if (key == "corpus.zones_per_utterance") cfg.corpus.zones_per_utterance = std::stoi(value);
            else if (key == "corpus.dim") cfg.corpus.dim = std::stoi(value);
            else if (key == "corpus.zone_mean_scale") cfg.corpus.zone_mean_scale = std::stod(value);
            else if (key == "corpus.zone_sigma") cfg.corpus.zone_sigma = std::stod(value);
            else if (key == "corpus.speaker_shift_scale") cfg.corpus.speaker_shift_scale = std::stod(value);
            else if (key == "corpus.session_offset_scale") cfg.corpus.session_offset_scale = std::stod(value);
            else if (key == "corpus.family_offset_scale") cfg.corpus.family_offset_scale = std::stod(value);
            else if (key == "features.sample_rate") cfg.features.sample_rate = std::stoi(value);
            else if (key == "features.frame_size") cfg.features.frame_size = std::stoi(value);
            else if (key == "features.frame_hop") cfg.features.frame_hop = std::stoi(value);
            else if (key == "features.fft_size") cfg.features.fft_size = std::stoi(value);
            else if (key == "features.mel_filters") cfg.features.mel_filters = std::stoi(value);
            else if (key == "features.mel_low_hz") cfg.features.mel_low_hz = std::stod(value);
            else if (key == "features.mel_high_hz") cfg.features.mel_high_hz = std::stod(value);
            else if (key == "features.log_floor") cfg.features.log_floor = std::stod(value);
            else if (key == "features.pre_emphasis") cfg.features.pre_emphasis = std::stod(value);
            else if (key == "features.num_coefficients") cfg.features.num_coefficients = std::stoi(value);
            else if (key == "vad.floor_db") cfg.vad_floor_db = std::stod(value);
            else if (key == "em.max_iterations") cfg.em.max_iterations = std::stoi(value);
            else if (key == "em.ll_tolerance") cfg.em.ll_tolerance = std::stod(value);
            else if (key == "em.variance_floor_ratio") cfg.em.variance_floor_ratio = std::stod(value);
            else if (key == "em.split_iterations") cfg.em.split_iterations = std::stoi(value);
            else if (key == "em.split_offset") cfg.em.split_offset = std::stod(value);
            else if (key == "map.relevance_factor") cfg.map.relevance_factor = std::stod(value);
            else if (key == "supervector.normalization") cfg.normalization = normalization_from_string(value);
            else if (key == "svm.c") cfg.svm_c = std::stod(value);
            else if (key == "partition.p_list") cfg.p_list = parse_int_list(value);
            else if (key == "ubm.m_list") cfg.m_list = parse_int_list(value);
            else if (key == "diagnostics.epsilon") cfg.diagnostics_epsilon = std::stod(value);
            else throw ValidationError("config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ParseError("config: bad value for '" + key + "' at line " + std::to_string(lineno));
        } catch (const std::out_of_range&) {
            throw ParseError("config: value out of range for '" + key + "'");
        }
    }
    cfg.finalize();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void write_resolved_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write resolved config: " + path.string());
    out << cfg.serialize();
}

}  // namespace svt
