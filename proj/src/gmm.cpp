#include "svt/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace svt {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

void DiagonalGmm::validate() const {
    if (num_components < 1) throw ValidationError("gmm: need at least one component");
    if (dim < 1) throw ValidationError("gmm: dimension must be positive");
    const auto md = static_cast<size_t>(num_components) * dim;
    if (weights.size() != static_cast<size_t>(num_components) || means.size() != md || variances.size() != md)
        throw ValidationError("gmm: shape mismatch");
    double sum = 0.0;
    for (const double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("gmm: weights must be nonnegative and finite");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-10) throw ValidationError("gmm: weights must sum to 1");
    for (const double v : variances)
        if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("gmm: variances must be positive and finite");
    for (const double m : means)
        if (!std::isfinite(m)) throw ValidationError("gmm: non-finite mean");
}

GmmEvaluator::GmmEvaluator(const DiagonalGmm& gmm)
    : m_(gmm.num_components),
      d_(gmm.dim),
      log_weight_(gmm.num_components),
      log_norm_(gmm.num_components),
      neg_half_inv_var_(gmm.variances.size()),
      mean_(gmm.means) {
    for (int i = 0; i < m_; ++i) {
        log_weight_[i] = gmm.weights[i] > 0.0 ? std::log(gmm.weights[i]) : kNegInf;
        double acc = 0.0;
        const double* var = gmm.variance(i);
        for (int d = 0; d < d_; ++d) {
            acc += std::log(var[d]);
            neg_half_inv_var_[static_cast<size_t>(i) * d_ + d] = -0.5 / var[d];
        }
        log_norm_[i] = -0.5 * (d_ * kLog2Pi + acc);
    }
}

double GmmEvaluator::component_log_joint(const double* x, double* out) const {
    double max_lp = kNegInf;
    for (int i = 0; i < m_; ++i) {
        const double* mu = mean_.data() + static_cast<size_t>(i) * d_;
        const double* nv = neg_half_inv_var_.data() + static_cast<size_t>(i) * d_;
        double quad = 0.0;
        for (int d = 0; d < d_; ++d) {
            const double diff = x[d] - mu[d];
            quad += nv[d] * diff * diff;
        }
        const double lp = log_weight_[i] + log_norm_[i] + quad;
        out[i] = lp;
        if (lp > max_lp) max_lp = lp;
    }
    if (max_lp == kNegInf) return kNegInf;
    double acc = 0.0;
    for (int i = 0; i < m_; ++i) acc += std::exp(out[i] - max_lp);
    return max_lp + std::log(acc);
}

double GmmEvaluator::log_pdf(const double* x) const {
    std::vector<double> lp(m_);
    return component_log_joint(x, lp.data());
}

void GmmEvaluator::posteriors(const double* x, double* out) const {
    const double lse = component_log_joint(x, out);
    if (lse == kNegInf) throw ValidationError("gmm: zero density point, posteriors undefined");
    double sum = 0.0;
    for (int i = 0; i < m_; ++i) {
        out[i] = std::exp(out[i] - lse);
        sum += out[i];
    }
    for (int i = 0; i < m_; ++i) out[i] /= sum;
}

double DiagonalGmm::log_pdf(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim)
        throw ValidationError("gmm: dimension mismatch in log_pdf");
    return GmmEvaluator(*this).log_pdf(x.data());
}

std::vector<double> DiagonalGmm::posteriors(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim)
        throw ValidationError("gmm: dimension mismatch in posteriors");
    std::vector<double> out(num_components);
    GmmEvaluator(*this).posteriors(x.data(), out.data());
    return out;
}

namespace {

struct EStepAccum {
    std::vector<double> n;       // M
    std::vector<double> sum_x;   // M*D
    std::vector<double> sum_x2;  // M*D
    double log_likelihood = 0.0;

    explicit EStepAccum(int m, int d)
        : n(m, 0.0), sum_x(static_cast<size_t>(m) * d, 0.0), sum_x2(static_cast<size_t>(m) * d, 0.0) {}

    void add(const EStepAccum& o) {
        for (size_t i = 0; i < n.size(); ++i) n[i] += o.n[i];
        for (size_t i = 0; i < sum_x.size(); ++i) sum_x[i] += o.sum_x[i];
        for (size_t i = 0; i < sum_x2.size(); ++i) sum_x2[i] += o.sum_x2[i];
        log_likelihood += o.log_likelihood;
    }
};

// One EM iteration. Frames are accumulated in fixed-size blocks and the
// block results reduced in index order, so the sums are bit-identical for
// any jobs value.
double em_iteration(DiagonalGmm& gmm, const FeatureSequence& data, const std::vector<double>& var_floor,
                    Rng& respawn_rng, int* respawned, int jobs) {
    const int m = gmm.num_components, d = gmm.dim;
    const size_t frames = data.frames();
    const GmmEvaluator eval(gmm);

    constexpr size_t kBlock = 8192;
    const size_t blocks = (frames + kBlock - 1) / kBlock;
    std::vector<EStepAccum> partial(blocks, EStepAccum(m, d));

    parallel_for(blocks, jobs, [&](size_t b) {
        EStepAccum& acc = partial[b];
        std::vector<double> post(m);
        const size_t begin = b * kBlock, end = std::min(frames, begin + kBlock);
        for (size_t t = begin; t < end; ++t) {
            const double* x = data.row(t);
            const double lse = eval.component_log_joint(x, post.data());
            acc.log_likelihood += lse;
            double sum = 0.0;
            for (int i = 0; i < m; ++i) {
                post[i] = std::exp(post[i] - lse);
                sum += post[i];
            }
            for (int i = 0; i < m; ++i) {
                const double g = post[i] / sum;
                acc.n[i] += g;
                double* sx = acc.sum_x.data() + static_cast<size_t>(i) * d;
                double* sx2 = acc.sum_x2.data() + static_cast<size_t>(i) * d;
                for (int k = 0; k < d; ++k) {
                    const double v = g * x[k];
                    sx[k] += v;
                    sx2[k] += v * x[k];
                }
            }
        }
    });

    EStepAccum total(m, d);
    for (const auto& p : partial) total.add(p);

    // M-step for components with responsibility mass
    std::vector<int> degenerate;
    for (int i = 0; i < m; ++i) {
        if (total.n[i] <= 0.0) {
            degenerate.push_back(i);
            continue;
        }
        gmm.weights[i] = total.n[i] / static_cast<double>(frames);
        double* mu = gmm.means.data() + static_cast<size_t>(i) * d;
        double* var = gmm.variances.data() + static_cast<size_t>(i) * d;
        const double* sx = total.sum_x.data() + static_cast<size_t>(i) * d;
        const double* sx2 = total.sum_x2.data() + static_cast<size_t>(i) * d;
        for (int k = 0; k < d; ++k) {
            mu[k] = sx[k] / total.n[i];
            var[k] = std::max(sx2[k] / total.n[i] - mu[k] * mu[k], var_floor[k]);
        }
    }
    // Degenerate components respawn at a perturbed copy of the heaviest
    // surviving component rather than emitting NaN.
    for (const int i : degenerate) {
        ++*respawned;
        int heaviest = -1;
        for (int k = 0; k < m; ++k)
            if (total.n[k] > 0.0 && (heaviest < 0 || gmm.weights[k] > gmm.weights[heaviest])) heaviest = k;
        if (heaviest < 0) throw ValidationError("train_em: all components lost responsibility mass");
        const double* src_mu = gmm.mean(heaviest);
        const double* src_var = gmm.variance(heaviest);
        double* mu = gmm.means.data() + static_cast<size_t>(i) * d;
        double* var = gmm.variances.data() + static_cast<size_t>(i) * d;
        for (int k = 0; k < d; ++k) {
            mu[k] = src_mu[k] + 0.1 * std::sqrt(src_var[k]) * respawn_rng.normal();
            var[k] = std::max(src_var[k], var_floor[k]);
        }
        gmm.weights[i] = gmm.weights[heaviest] / 2.0;
        gmm.weights[heaviest] /= 2.0;
    }
    double wsum = std::accumulate(gmm.weights.begin(), gmm.weights.end(), 0.0);
    for (double& w : gmm.weights) w /= wsum;

    return total.log_likelihood / static_cast<double>(frames);
}

void split_components(DiagonalGmm& gmm, int target, double offset) {
    const int d = gmm.dim;
    const int to_split = std::min(gmm.num_components, target - gmm.num_components);
    // split the heaviest components, lowest index on ties
    std::vector<int> order(gmm.num_components);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return gmm.weights[a] > gmm.weights[b]; });

    for (int s = 0; s < to_split; ++s) {
        const int i = order[s];
        const double* var = gmm.variance(i);
        int axis = 0;
        for (int k = 1; k < d; ++k)
            if (var[k] > var[axis]) axis = k;
        const double delta = offset * std::sqrt(var[axis]);

        gmm.weights[i] /= 2.0;
        gmm.weights.push_back(gmm.weights[i]);
        const size_t base = static_cast<size_t>(i) * d;
        for (int k = 0; k < d; ++k) gmm.means.push_back(gmm.means[base + k]);
        for (int k = 0; k < d; ++k) gmm.variances.push_back(gmm.variances[base + k]);
        gmm.means[base + axis] -= delta;
        gmm.means[static_cast<size_t>(gmm.num_components) * d + axis] += delta;
        ++gmm.num_components;
    }
}

}  // namespace

EmResult train_em(const FeatureSequence& data, int num_components, const EmConfig& cfg, int jobs) {
    data.validate();
    const size_t frames = data.frames();
    const int d = data.dim;
    if (num_components < 1) throw ValidationError("train_em: need at least one component");
    if (frames < static_cast<size_t>(num_components))
        throw ValidationError("train_em: fewer frames (" + std::to_string(frames) + ") than components (" +
                              std::to_string(num_components) + ")");
    if (cfg.max_iterations < 1) throw ValidationError("train_em: max_iterations must be >= 1");
    if (!(cfg.ll_tolerance > 0.0)) throw ValidationError("train_em: ll_tolerance must be positive");
    if (!(cfg.variance_floor_ratio > 0.0 && cfg.variance_floor_ratio < 1.0))
        throw ValidationError("train_em: variance_floor_ratio must be in (0,1)");

    // global stats; floors derive from the global per-dimension variance
    std::vector<double> gmean(d, 0.0), gvar(d, 0.0);
    for (size_t t = 0; t < frames; ++t) {
        const double* x = data.row(t);
        for (int k = 0; k < d; ++k) gmean[k] += x[k];
    }
    for (int k = 0; k < d; ++k) gmean[k] /= static_cast<double>(frames);
    for (size_t t = 0; t < frames; ++t) {
        const double* x = data.row(t);
        for (int k = 0; k < d; ++k) {
            const double diff = x[k] - gmean[k];
            gvar[k] += diff * diff;
        }
    }
    std::vector<double> var_floor(d);
    for (int k = 0; k < d; ++k) {
        gvar[k] = gvar[k] / static_cast<double>(frames);
        if (gvar[k] <= 0.0) gvar[k] = 1e-12;  // constant dimension
        var_floor[k] = cfg.variance_floor_ratio * gvar[k];
    }

    EmResult result;
    DiagonalGmm& gmm = result.model;
    gmm.num_components = 1;
    gmm.dim = d;
    gmm.weights = {1.0};
    gmm.means = gmean;
    gmm.variances = gvar;

    Rng respawn_rng(derive_seed(cfg.seed, 0x7265737061776eull));  // "respawn"

    for (;;) {
        const bool final_stage = gmm.num_components == num_components;
        const int iters = final_stage ? cfg.max_iterations : cfg.split_iterations;
        EmStageLog log;
        log.num_components = gmm.num_components;
        double prev_ll = kNegInf;
        for (int it = 0; it < iters; ++it) {
            const double ll = em_iteration(gmm, data, var_floor, respawn_rng, &result.respawned_components, jobs);
            log.ll_per_frame.push_back(ll);
            if (final_stage && it > 0 && ll - prev_ll < cfg.ll_tolerance) {
                prev_ll = ll;
                break;
            }
            prev_ll = ll;
        }
        result.stages.push_back(std::move(log));
        if (final_stage) break;
        split_components(gmm, num_components, cfg.split_offset);
    }

    gmm.validate();
    return result;
}

uint64_t gmm_fingerprint(const DiagonalGmm& gmm) {
    uint64_t h = 0xcbf29ce484222325ull;
    const uint32_t md[2] = {static_cast<uint32_t>(gmm.num_components), static_cast<uint32_t>(gmm.dim)};
    h = fnv1a64(md, sizeof(md), h);
    h = fnv1a64(gmm.weights.data(), gmm.weights.size() * sizeof(double), h);
    h = fnv1a64(gmm.means.data(), gmm.means.size() * sizeof(double), h);
    h = fnv1a64(gmm.variances.data(), gmm.variances.size() * sizeof(double), h);
    return h;
}

void save_gmm(const DiagonalGmm& gmm, const EmConfig& cfg, const std::filesystem::path& path) {
    gmm.validate();
    nlohmann::json j;
    j["version"] = 1;
    j["M"] = gmm.num_components;
    j["D"] = gmm.dim;
    j["weights"] = gmm.weights;
    auto rows = [&](const std::vector<double>& flat) {
        nlohmann::json out = nlohmann::json::array();
        for (int i = 0; i < gmm.num_components; ++i)
            out.push_back(std::vector<double>(flat.begin() + static_cast<long>(i) * gmm.dim,
                                              flat.begin() + static_cast<long>(i + 1) * gmm.dim));
        return out;
    };
    j["means"] = rows(gmm.means);
    j["variances"] = rows(gmm.variances);
    j["em_config"] = {{"max_iterations", cfg.max_iterations},
                      {"ll_tolerance", cfg.ll_tolerance},
                      {"variance_floor_ratio", cfg.variance_floor_ratio},
                      {"seed", cfg.seed},
                      {"split_iterations", cfg.split_iterations},
                      {"split_offset", cfg.split_offset}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write model file: " + path.string());
    out << j.dump(1) << "\n";
}

DiagonalGmm load_gmm(const std::filesystem::path& path, EmConfig* cfg_out) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file: invalid JSON: " + std::string(e.what()));
    }
    DiagonalGmm gmm;
    try {
        if (j.at("version").get<int>() != 1) throw FormatError("model file: unsupported version");
        gmm.num_components = j.at("M").get<int>();
        gmm.dim = j.at("D").get<int>();
        gmm.weights = j.at("weights").get<std::vector<double>>();
        for (const auto& row : j.at("means")) {
            const auto vals = row.get<std::vector<double>>();
            gmm.means.insert(gmm.means.end(), vals.begin(), vals.end());
        }
        for (const auto& row : j.at("variances")) {
            const auto vals = row.get<std::vector<double>>();
            gmm.variances.insert(gmm.variances.end(), vals.begin(), vals.end());
        }
        if (cfg_out != nullptr && j.contains("em_config")) {
            const auto& e = j["em_config"];
            cfg_out->max_iterations = e.at("max_iterations").get<int>();
            cfg_out->ll_tolerance = e.at("ll_tolerance").get<double>();
            cfg_out->variance_floor_ratio = e.at("variance_floor_ratio").get<double>();
            cfg_out->seed = e.at("seed").get<uint64_t>();
            cfg_out->split_iterations = e.at("split_iterations").get<int>();
            cfg_out->split_offset = e.at("split_offset").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file: missing or malformed field: " + std::string(e.what()));
    }
    gmm.validate();
    return gmm;
}

}  // namespace svt
