#include "svt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace svt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sorted targets/nontargets plus the shared ascending threshold grid
// (distinct scores, then one sentinel above the maximum).
struct SweepData {
    std::vector<double> targets;
    std::vector<double> nontargets;
    std::vector<double> thresholds;
};

SweepData sweep_data(const ScoreSet& scores) {
    SweepData s;
    for (const auto& r : scores.records)
        (r.trial.is_target ? s.targets : s.nontargets).push_back(r.score);
    if (s.targets.empty()) throw ValidationError("eer: no target scores");
    if (s.nontargets.empty()) throw ValidationError("eer: no nontarget scores");
    std::sort(s.targets.begin(), s.targets.end());
    std::sort(s.nontargets.begin(), s.nontargets.end());
    s.thresholds.reserve(s.targets.size() + s.nontargets.size() + 1);
    std::merge(s.targets.begin(), s.targets.end(), s.nontargets.begin(), s.nontargets.end(),
               std::back_inserter(s.thresholds));
    s.thresholds.erase(std::unique(s.thresholds.begin(), s.thresholds.end()), s.thresholds.end());
    s.thresholds.push_back(kInf);
    return s;
}

// FAR(t) = P(nontarget >= t), FRR(t) = P(target < t).
double far_at(const SweepData& s, double threshold) {
    const auto it = std::lower_bound(s.nontargets.begin(), s.nontargets.end(), threshold);
    return static_cast<double>(s.nontargets.end() - it) / static_cast<double>(s.nontargets.size());
}

double frr_at(const SweepData& s, double threshold) {
    const auto it = std::lower_bound(s.targets.begin(), s.targets.end(), threshold);
    return static_cast<double>(it - s.targets.begin()) / static_cast<double>(s.targets.size());
}

}  // namespace

size_t ScoreSet::target_count() const {
    size_t n = 0;
    for (const auto& r : records) n += r.trial.is_target ? 1 : 0;
    return n;
}

size_t ScoreSet::nontarget_count() const { return records.size() - target_count(); }

void ScoreSet::validate() const {
    for (const auto& r : records)
        if (!std::isfinite(r.score))
            throw ValidationError("score set: non-finite score for trial " + r.trial.target_speaker + "/" +
                                  r.trial.test_utterance);
}

double gmm_ubm_score(const DiagonalGmm& spk, const DiagonalGmm& ubm, const FeatureSequence& y) {
    if (y.frames() == 0) throw ValidationError("gmm_ubm_score: empty test sequence");
    if (y.dim != spk.dim || y.dim != ubm.dim) throw ValidationError("gmm_ubm_score: dimension mismatch");
    const GmmEvaluator spk_eval(spk), ubm_eval(ubm);
    double acc = 0.0;
    for (size_t t = 0; t < y.frames(); ++t) {
        const double* x = y.row(t);
        acc += spk_eval.log_pdf(x) - ubm_eval.log_pdf(x);
    }
    return acc / static_cast<double>(y.frames());
}

ScoreSet run_trials(const std::vector<Trial>& trials, TrialScorer& scorer, int jobs) {
    scorer.prepare(trials);
    ScoreSet out;
    out.records.resize(trials.size());
    const TrialScorer& s = scorer;
    parallel_for(trials.size(), jobs, [&](size_t i) {
        out.records[i].trial = trials[i];
        out.records[i].score = s.score(trials[i]);
    });
    out.validate();
    return out;
}

double compute_eer(const ScoreSet& scores) {
    scores.validate();
    const SweepData s = sweep_data(scores);

    double prev_far = 1.0, prev_frr = 0.0;  // below every threshold
    for (const double t : s.thresholds) {
        const double far = far_at(s, t);
        const double frr = frr_at(s, t);
        const double diff = far - frr;
        if (diff <= 0.0) {
            if (diff == 0.0) return far;
            const double prev_diff = prev_far - prev_frr;
            const double f = prev_diff / (prev_diff - diff);
            return prev_far + f * (far - prev_far);
        }
        prev_far = far;
        prev_frr = frr;
    }
    return 1.0;  // unreachable: the sentinel threshold has diff = -1
}

DetCurve det_points(const ScoreSet& scores) {
    scores.validate();
    const SweepData s = sweep_data(scores);
    DetCurve curve;
    curve.points.reserve(s.thresholds.size());
    for (const double t : s.thresholds) {
        DetPoint p;
        p.threshold = t;
        p.far = far_at(s, t);
        p.frr = frr_at(s, t);
        p.probit_far = inverse_normal_cdf(p.far);
        p.probit_frr = inverse_normal_cdf(p.frr);
        curve.points.push_back(p);
    }
    return curve;
}

double inverse_normal_cdf(double p) {
    if (p <= 0.0) return -kInf;
    if (p >= 1.0) return kInf;
    // Acklam's rational approximation with one Halley refinement.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,  -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (std::abs(x) < 8.0) {  // one Halley refinement where exp stays tame
        const double sqrt_half = 0.70710678118654752440;
        const double e = 0.5 * std::erfc(-x * sqrt_half) - p;
        const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
        x = x - u / (1.0 + x * u / 2.0);
    }
    return x;
}

std::vector<Trial> load_trials(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open trial list: " + path.string());
    std::vector<Trial> trials;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        Trial t;
        std::string flag;
        if (!std::getline(ss, t.target_speaker, '\t') || !std::getline(ss, t.test_utterance, '\t') ||
            !std::getline(ss, flag, '\t'))
            throw ParseError("trial list: malformed line " + std::to_string(lineno));
        if (flag == "1")
            t.is_target = true;
        else if (flag == "0")
            t.is_target = false;
        else
            throw ParseError("trial list: label must be 0 or 1 at line " + std::to_string(lineno));
        trials.push_back(std::move(t));
    }
    return trials;
}

void save_trials(const std::vector<Trial>& trials, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write trial list: " + path.string());
    for (const auto& t : trials)
        out << t.target_speaker << '\t' << t.test_utterance << '\t' << (t.is_target ? 1 : 0) << '\n';
}

ScoreSet load_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open score file: " + path.string());
    ScoreSet set;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        ScoreRecord r;
        std::string flag, score;
        if (!std::getline(ss, r.trial.target_speaker, '\t') || !std::getline(ss, r.trial.test_utterance, '\t') ||
            !std::getline(ss, flag, '\t') || !std::getline(ss, score, '\t'))
            throw ParseError("score file: malformed line " + std::to_string(lineno));
        if (flag == "1")
            r.trial.is_target = true;
        else if (flag == "0")
            r.trial.is_target = false;
        else
            throw ParseError("score file: label must be 0 or 1 at line " + std::to_string(lineno));
        try {
            r.score = std::stod(score);
        } catch (const std::exception&) {
            throw ParseError("score file: bad score at line " + std::to_string(lineno));
        }
        set.records.push_back(std::move(r));
    }
    set.validate();
    return set;
}

void save_scores(const ScoreSet& scores, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write score file: " + path.string());
    char buf[64];
    for (const auto& r : scores.records) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.score);
        out << r.trial.target_speaker << '\t' << r.trial.test_utterance << '\t' << (r.trial.is_target ? 1 : 0)
            << '\t' << buf << '\n';
    }
}

void save_det_csv(const DetCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write DET csv: " + path.string());
    out << "threshold,far,frr,probit_far,probit_frr\n";
    char buf[256];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g", p.threshold, p.far, p.frr, p.probit_far,
                      p.probit_frr);
        out << buf << '\n';
    }
}

}  // namespace svt
