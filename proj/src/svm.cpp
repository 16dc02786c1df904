#include "svt/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace svt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Problem {
    size_t n = 0;
    size_t dim = 0;
    std::vector<const double*> x;
    std::vector<int> y;
    std::vector<const Supervector*> source;
};

Problem assemble(const LabeledSupervectorSet& set) {
    if (set.positives.empty() || set.negatives.empty())
        throw ValidationError("train_soft_margin: both classes must be non-empty");
    Problem p;
    p.n = set.positives.size() + set.negatives.size();
    p.dim = set.positives.front().values.size();
    p.x.reserve(p.n);
    p.y.reserve(p.n);
    uint64_t fp = set.positives.front().ubm_fingerprint;
    auto push = [&](const Supervector& sv, int label) {
        if (sv.values.size() != p.dim)
            throw ValidationError("train_soft_margin: inconsistent supervector dimensions");
        if (sv.ubm_fingerprint != fp)
            throw ValidationError("train_soft_margin: mixed UBM fingerprints in training set");
        p.x.push_back(sv.values.data());
        p.y.push_back(label);
        p.source.push_back(&sv);
    };
    for (const auto& sv : set.positives) push(sv, +1);
    for (const auto& sv : set.negatives) push(sv, -1);
    return p;
}

double dot(const double* a, const double* b, size_t dim) {
    double acc = 0.0;
    for (size_t k = 0; k < dim; ++k) acc += a[k] * b[k];
    return acc;
}

}  // namespace

double SvmModel::decision(const double* x) const {
    return dot(weights.data(), x, weights.size()) + bias;
}

SvmModel train_soft_margin(const LabeledSupervectorSet& set, double c, const SvmTrainOptions& opts) {
    if (!(c > 0.0)) throw ValidationError("train_soft_margin: C must be positive");
    const Problem prob = assemble(set);
    const size_t n = prob.n;

    // Gram matrix, cached whole when small enough.
    std::vector<double> gram;
    const bool cache_gram = n * n <= opts.gram_cache_limit;
    if (cache_gram) {
        gram.resize(n * n);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j <= i; ++j) {
                const double v = dot(prob.x[i], prob.x[j], prob.dim);
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
    }
    std::vector<double> diag(n);
    for (size_t i = 0; i < n; ++i)
        diag[i] = cache_gram ? gram[i * n + i] : dot(prob.x[i], prob.x[i], prob.dim);

    std::vector<double> col_i_buf, col_j_buf;
    auto kernel_column = [&](size_t i, std::vector<double>& buf) -> const double* {
        if (cache_gram) return gram.data() + i * n;
        buf.resize(n);
        for (size_t t = 0; t < n; ++t) buf[t] = dot(prob.x[t], prob.x[i], prob.dim);
        return buf.data();
    };

    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);  // G_t = (Q alpha)_t - 1

    double gap = kInf;
    double b_up = 0.0, b_low = 0.0;
    size_t iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        // maximal violating pair; lowest index wins ties via strict compare
        double m_up = -kInf, m_low = kInf;
        size_t i = n, j = n;
        for (size_t t = 0; t < n; ++t) {
            const double v = -prob.y[t] * grad[t];
            const bool in_up = prob.y[t] > 0 ? alpha[t] < c : alpha[t] > 0.0;
            const bool in_low = prob.y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < c;
            if (in_up && v > m_up) {
                m_up = v;
                i = t;
            }
            if (in_low && v < m_low) {
                m_low = v;
                j = t;
            }
        }
        gap = m_up - m_low;
        b_up = m_up;
        b_low = m_low;
        if (i == n || j == n || gap < opts.stop_tolerance) break;

        const double* k_i = kernel_column(i, col_i_buf);
        const double* k_j = kernel_column(j, col_j_buf);
        double eta = diag[i] + diag[j] - 2.0 * k_i[j];
        if (eta <= 0.0) eta = 1e-12;

        const double old_ai = alpha[i], old_aj = alpha[j];
        if (prob.y[i] != prob.y[j]) {
            const double delta = (-grad[i] - grad[j]) / eta;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
            }
            if (diff > 0.0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            }
        } else {
            const double delta = (grad[i] - grad[j]) / eta;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
        if (dai == 0.0 && daj == 0.0) break;  // numerically stuck
        for (size_t t = 0; t < n; ++t)
            grad[t] += prob.y[t] * (prob.y[i] * k_i[t] * dai + prob.y[j] * k_j[t] * daj);
    }

    SvmModel model;
    model.soft_margin_c = c;
    model.target_speaker = set.target_speaker;
    model.ubm_fingerprint = set.positives.front().ubm_fingerprint;
    model.normalization = set.positives.front().normalization;
    model.kkt_gap = gap;
    model.bias = (b_up + b_low) / 2.0;
    model.labels = prob.y;
    model.dual_coefficients = alpha;

    model.weights.assign(prob.dim, 0.0);
    for (size_t t = 0; t < n; ++t) {
        if (alpha[t] == 0.0) continue;
        const double coef = alpha[t] * prob.y[t];
        const double* xt = prob.x[t];
        for (size_t k = 0; k < prob.dim; ++k) model.weights[k] += coef * xt[k];
    }

    for (size_t t = 0; t < n; ++t) {
        if (alpha[t] <= kSvAlphaThreshold) continue;
        model.support_indices.push_back(static_cast<int>(t));
        SupportSample s;
        s.speaker_id = prob.source[t]->speaker_id;
        s.partition_index = prob.source[t]->partition_index;
        s.label = prob.y[t];
        s.alpha = alpha[t];
        s.slack = std::max(0.0, 1.0 - prob.y[t] * model.decision(prob.x[t]));
        s.x.assign(prob.x[t], prob.x[t] + prob.dim);
        model.support_samples.push_back(std::move(s));
    }
    return model;
}

double decision_value(const SvmModel& model, const Supervector& x) {
    if (x.values.size() != model.weights.size())
        throw ValidationError("decision_value: dimension mismatch");
    if (x.ubm_fingerprint != model.ubm_fingerprint)
        throw ValidationError("decision_value: supervector UBM fingerprint does not match the model");
    if (x.normalization != model.normalization)
        throw ValidationError("decision_value: supervector normalization does not match the model");
    return model.decision(x.values.data());
}

SvCensus census(const SvmModel& model) {
    SvCensus out;
    for (const auto& s : model.support_samples) {
        if (s.label > 0)
            ++out.positive_sv_count;
        else
            ++out.negative_sv_count;
        if (s.slack < 1e-6)
            ++out.margin_sv_count;
        else if (s.slack > 1.0)
            ++out.misclassified_sv_count;
        else
            ++out.bound_sv_count;
    }
    return out;
}

double vapnik_bound(double expected_sv_count, size_t training_samples) {
    if (training_samples < 1) throw ValidationError("vapnik_bound: need at least one training sample");
    if (expected_sv_count < 0.0) throw ValidationError("vapnik_bound: SV count must be nonnegative");
    return expected_sv_count / static_cast<double>(training_samples);
}

void save_svm(const SvmModel& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["version"] = 1;
    j["target_speaker"] = model.target_speaker;
    j["c"] = model.soft_margin_c;
    j["bias"] = model.bias;
    j["weights"] = model.weights;
    j["ubm_fingerprint"] = model.ubm_fingerprint;
    j["normalization"] = to_string(model.normalization);
    j["kkt_gap"] = model.kkt_gap;
    nlohmann::json support = nlohmann::json::array();
    for (const auto& s : model.support_samples)
        support.push_back({{"speaker_id", s.speaker_id},
                           {"partition_index", s.partition_index},
                           {"label", s.label},
                           {"alpha", s.alpha},
                           {"slack", s.slack}});
    j["support"] = support;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write svm model file: " + path.string());
    out << j.dump(1) << "\n";
}

SvmModel load_svm(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open svm model file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("svm model file: invalid JSON: " + std::string(e.what()));
    }
    SvmModel model;
    try {
        if (j.at("version").get<int>() != 1) throw FormatError("svm model file: unsupported version");
        model.target_speaker = j.at("target_speaker").get<std::string>();
        model.soft_margin_c = j.at("c").get<double>();
        model.bias = j.at("bias").get<double>();
        model.weights = j.at("weights").get<std::vector<double>>();
        model.ubm_fingerprint = j.at("ubm_fingerprint").get<uint64_t>();
        model.normalization = normalization_from_string(j.at("normalization").get<std::string>());
        model.kkt_gap = j.at("kkt_gap").get<double>();
        for (const auto& e : j.at("support")) {
            SupportSample s;
            s.speaker_id = e.at("speaker_id").get<std::string>();
            s.partition_index = e.at("partition_index").get<uint32_t>();
            s.label = e.at("label").get<int>();
            s.alpha = e.at("alpha").get<double>();
            s.slack = e.at("slack").get<double>();
            model.support_samples.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("svm model file: missing or malformed field: " + std::string(e.what()));
    }
    return model;
}

}  // namespace svt
