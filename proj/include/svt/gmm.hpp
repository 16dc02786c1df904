#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "svt/common.hpp"
#include "svt/features.hpp"

namespace svt {

// Diagonal-covariance Gaussian mixture. Serves as both the UBM and the
// MAP-adapted speaker model.
struct DiagonalGmm {
    int num_components = 0;
    int dim = 0;
    std::vector<double> weights;    // M
    std::vector<double> means;      // M*D row-major
    std::vector<double> variances;  // M*D row-major

    const double* mean(int i) const { return means.data() + static_cast<size_t>(i) * dim; }
    const double* variance(int i) const { return variances.data() + static_cast<size_t>(i) * dim; }

    // Checks the simplex, variance positivity, finiteness, and shapes.
    void validate() const;

    double log_pdf(std::span<const double> x) const;
    std::vector<double> posteriors(std::span<const double> x) const;
};

// Precomputed per-component constants for repeated evaluation against one
// model. Read-only after construction; safe to share across threads.
class GmmEvaluator {
public:
    explicit GmmEvaluator(const DiagonalGmm& gmm);

    // log sum_i w_i N(x; mu_i, Sigma_i) via log-sum-exp.
    double log_pdf(const double* x) const;

    // Fills out[0..M) with component log joint densities log(w_i N_i(x));
    // returns their log-sum-exp.
    double component_log_joint(const double* x, double* out) const;

    // Normalized posteriors Pr(i | x); sums to 1.
    void posteriors(const double* x, double* out) const;

    int num_components() const { return m_; }
    int dim() const { return d_; }

private:
    int m_ = 0, d_ = 0;
    std::vector<double> log_weight_;   // M; -inf for zero weights
    std::vector<double> log_norm_;     // M; -(1/2) sum_d log(2 pi var)
    std::vector<double> neg_half_inv_var_;  // M*D
    std::vector<double> mean_;              // M*D
};

struct EmConfig {
    int max_iterations = 25;          // final stage
    double ll_tolerance = 1e-5;       // nats/frame; final-stage stop
    double variance_floor_ratio = 1e-3;  // of global per-dimension variance
    uint64_t seed = 0;                // used only for degenerate-component respawn
    int split_iterations = 5;         // EM iterations per doubling stage
    double split_offset = 0.1;        // in units of the split axis std dev
};

struct EmStageLog {
    int num_components = 0;
    std::vector<double> ll_per_frame;  // per completed iteration
};

struct EmResult {
    DiagonalGmm model;
    std::vector<EmStageLog> stages;
    int respawned_components = 0;
};

// Trains a diagonal GMM by deterministic binary splitting followed by EM.
// Identical data, config and jobs-independent reduction order give a
// bit-identical model. Training log-likelihood is non-decreasing within each
// stage.
EmResult train_em(const FeatureSequence& data, int num_components, const EmConfig& cfg, int jobs = 1);

uint64_t gmm_fingerprint(const DiagonalGmm& gmm);

// JSON model file: version, M, D, weights, means, variances, em_config.
void save_gmm(const DiagonalGmm& gmm, const EmConfig& cfg, const std::filesystem::path& path);
DiagonalGmm load_gmm(const std::filesystem::path& path, EmConfig* cfg_out = nullptr);

}  // namespace svt
