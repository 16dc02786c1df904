#include "svt/adaptation.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace svt {

std::string to_string(Normalization n) {
    return n == Normalization::kRaw ? "raw" : "kl_normalized";
}

Normalization normalization_from_string(const std::string& s) {
    if (s == "raw") return Normalization::kRaw;
    if (s == "kl_normalized" || s == "kl") return Normalization::kKlNormalized;
    throw ValidationError("unknown normalization mode: " + s);
}

DiagonalGmm map_adapt_means(const DiagonalGmm& ubm, const FeatureSequence& x, const MapConfig& cfg) {
    ubm.validate();
    if (x.dim != ubm.dim)
        throw ValidationError("map_adapt_means: feature dim " + std::to_string(x.dim) +
                              " does not match UBM dim " + std::to_string(ubm.dim));
    if (x.frames() == 0) throw ValidationError("map_adapt_means: empty feature sequence");
    if (!(cfg.relevance_factor > 0.0)) throw ValidationError("map_adapt_means: relevance factor must be positive");

    const int m = ubm.num_components, d = ubm.dim;
    const GmmEvaluator eval(ubm);

    std::vector<double> n(m, 0.0), sum_x(static_cast<size_t>(m) * d, 0.0), post(m);
    for (size_t t = 0; t < x.frames(); ++t) {
        const double* row = x.row(t);
        eval.posteriors(row, post.data());
        for (int i = 0; i < m; ++i) {
            n[i] += post[i];
            double* sx = sum_x.data() + static_cast<size_t>(i) * d;
            for (int k = 0; k < d; ++k) sx[k] += post[i] * row[k];
        }
    }

    DiagonalGmm adapted = ubm;
    for (int i = 0; i < m; ++i) {
        if (n[i] == 0.0) continue;  // mean stays bit-identical to the UBM
        const double alpha = n[i] / (n[i] + cfg.relevance_factor);
        double* mu = adapted.means.data() + static_cast<size_t>(i) * d;
        const double* sx = sum_x.data() + static_cast<size_t>(i) * d;
        for (int k = 0; k < d; ++k) {
            const double e_ik = sx[k] / n[i];
            mu[k] = alpha * e_ik + (1.0 - alpha) * mu[k];
        }
    }
    return adapted;
}

Supervector build_supervector(const DiagonalGmm& adapted, const DiagonalGmm& ubm, Normalization mode) {
    if (adapted.num_components != ubm.num_components || adapted.dim != ubm.dim ||
        adapted.weights != ubm.weights || adapted.variances != ubm.variances)
        throw ValidationError("build_supervector: adapted model does not share the UBM's shape/weights/variances");

    const int m = ubm.num_components, d = ubm.dim;
    Supervector sv;
    sv.normalization = mode;
    sv.ubm_fingerprint = gmm_fingerprint(ubm);
    sv.values.resize(static_cast<size_t>(m) * d);
    if (mode == Normalization::kRaw) {
        sv.values = adapted.means;
    } else {
        for (int i = 0; i < m; ++i) {
            const double root_w = std::sqrt(ubm.weights[i]);
            const double* mu = adapted.mean(i);
            const double* var = ubm.variance(i);
            double* out = sv.values.data() + static_cast<size_t>(i) * d;
            for (int k = 0; k < d; ++k) out[k] = root_w * mu[k] / std::sqrt(var[k]);
        }
    }
    return sv;
}

void save_supervectors(const std::vector<Supervector>& records, const SvecMeta& meta,
                       const std::filesystem::path& path) {
    if (records.empty()) throw ValidationError("save_supervectors: no records");
    const size_t dim = records.front().values.size();
    std::vector<unsigned char> out;
    out.insert(out.end(), {'S', 'V', 'E', 'C'});
    put_u32le(out, 1);
    put_u32le(out, static_cast<uint32_t>(records.size()));
    put_u32le(out, static_cast<uint32_t>(dim));
    for (const auto& r : records) {
        if (r.values.size() != dim) throw ValidationError("save_supervectors: ragged dimensions");
        put_u32le(out, static_cast<uint32_t>(r.speaker_id.size()));
        out.insert(out.end(), r.speaker_id.begin(), r.speaker_id.end());
        put_u32le(out, r.partition_index);
        for (const double v : r.values) put_f32le(out, static_cast<float>(v));
    }
    write_file_bytes(path, out);

    nlohmann::json j;
    j["version"] = 1;
    j["ubm_fingerprint"] = meta.ubm_fingerprint;
    j["normalization"] = to_string(meta.normalization);
    j["gmm_components"] = meta.gmm_components;
    j["gmm_dim"] = meta.gmm_dim;
    j["relevance_factor"] = meta.relevance_factor;
    j["partitions"] = meta.partitions;
    std::ofstream mout(path.string() + ".meta.json", std::ios::trunc);
    if (!mout) throw Error("cannot write supervector meta file");
    mout << j.dump(1) << "\n";
}

std::vector<Supervector> load_supervectors(const std::filesystem::path& path, SvecMeta* meta_out) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), "SVEC", 4) != 0)
        throw ParseError("supervector file: missing SVEC magic: " + path.string());
    if (get_u32le(bytes.data() + 4) != 1) throw FormatError("supervector file: unsupported version");
    const uint32_t count = get_u32le(bytes.data() + 8);
    const uint32_t dim = get_u32le(bytes.data() + 12);

    SvecMeta meta;
    const std::filesystem::path meta_path = path.string() + ".meta.json";
    if (std::filesystem::exists(meta_path)) {
        std::ifstream min(meta_path);
        nlohmann::json j;
        try {
            min >> j;
            meta.ubm_fingerprint = j.at("ubm_fingerprint").get<uint64_t>();
            meta.normalization = normalization_from_string(j.at("normalization").get<std::string>());
            meta.gmm_components = j.at("gmm_components").get<int>();
            meta.gmm_dim = j.at("gmm_dim").get<int>();
            meta.relevance_factor = j.at("relevance_factor").get<double>();
            meta.partitions = j.at("partitions").get<uint32_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("supervector meta file: " + std::string(e.what()));
        }
    }

    std::vector<Supervector> records;
    records.reserve(count);
    size_t pos = 16;
    for (uint32_t r = 0; r < count; ++r) {
        if (pos + 4 > bytes.size()) throw ParseError("supervector file: truncated record");
        const uint32_t id_len = get_u32le(bytes.data() + pos);
        pos += 4;
        if (pos + id_len + 4 + static_cast<size_t>(dim) * 4 > bytes.size())
            throw ParseError("supervector file: truncated record");
        Supervector sv;
        sv.speaker_id.assign(reinterpret_cast<const char*>(bytes.data() + pos), id_len);
        pos += id_len;
        sv.partition_index = get_u32le(bytes.data() + pos);
        pos += 4;
        sv.values.resize(dim);
        for (uint32_t k = 0; k < dim; ++k) {
            sv.values[k] = get_f32le(bytes.data() + pos);
            pos += 4;
        }
        sv.normalization = meta.normalization;
        sv.ubm_fingerprint = meta.ubm_fingerprint;
        records.push_back(std::move(sv));
    }
    if (pos != bytes.size()) throw ParseError("supervector file: trailing bytes");
    if (meta_out != nullptr) *meta_out = meta;
    return records;
}

}  // namespace svt
