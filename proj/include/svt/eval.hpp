#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "svt/gmm.hpp"

namespace svt {

struct Trial {
    std::string target_speaker;
    std::string test_utterance;
    bool is_target = false;
};

struct ScoreRecord {
    Trial trial;
    double score = 0.0;
};

struct ScoreSet {
    std::vector<ScoreRecord> records;

    size_t target_count() const;
    size_t nontarget_count() const;
    void validate() const;  // finite scores
};

// Ordered operating points of the threshold sweep. FAR is non-increasing and
// FRR non-decreasing along the curve; the final point uses a threshold above
// the maximum score.
struct DetPoint {
    double threshold = 0.0;
    double far = 0.0;
    double frr = 0.0;
    double probit_far = 0.0;
    double probit_frr = 0.0;
};

struct DetCurve {
    std::vector<DetPoint> points;
};

// Average per-frame log-likelihood ratio of the speaker model against the
// UBM: (1/T) sum_t [log p(y_t|spk) - log p(y_t|ubm)].
double gmm_ubm_score(const DiagonalGmm& spk, const DiagonalGmm& ubm, const FeatureSequence& y);

// A trial scorer; prepare() may precompute per-utterance state, after which
// score() must be safe to call concurrently.
class TrialScorer {
public:
    virtual ~TrialScorer() = default;
    virtual void prepare(const std::vector<Trial>& trials) { (void)trials; }
    virtual double score(const Trial& trial) const = 0;
};

// One score per trial, in trial-list order regardless of job count.
ScoreSet run_trials(const std::vector<Trial>& trials, TrialScorer& scorer, int jobs = 1);

// EER by threshold sweep over the pooled score multiset with linear
// interpolation at the FAR/FRR crossing. Scores equal to the threshold count
// as accepts.
double compute_eer(const ScoreSet& scores);

DetCurve det_points(const ScoreSet& scores);

// Inverse standard normal CDF (for DET's normal-deviate axes). Returns
// -inf/+inf at p = 0/1.
double inverse_normal_cdf(double p);

// Trial list file: one `target<TAB>utterance<TAB>0|1` per line.
// Score file: the same with the score appended.
std::vector<Trial> load_trials(const std::filesystem::path& path);
void save_trials(const std::vector<Trial>& trials, const std::filesystem::path& path);
ScoreSet load_scores(const std::filesystem::path& path);
void save_scores(const ScoreSet& scores, const std::filesystem::path& path);
void save_det_csv(const DetCurve& curve, const std::filesystem::path& path);

}  // namespace svt
