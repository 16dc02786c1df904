#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "svt/diagnostics.hpp"

using namespace svt;

namespace {

Supervector sv1d(std::vector<double> values) {
    Supervector sv;
    sv.values = std::move(values);
    return sv;
}

DiagonalGmm diag_gmm(std::vector<double> w, std::vector<double> mu, std::vector<double> var, int dim) {
    DiagonalGmm g;
    g.num_components = static_cast<int>(w.size());
    g.dim = dim;
    g.weights = std::move(w);
    g.means = std::move(mu);
    g.variances = std::move(var);
    g.validate();
    return g;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("identical class supervectors give an all-zero distance matrix") {
    const std::vector<Supervector> svs{sv1d({1.0, 2.0}), sv1d({1.0, 2.0}), sv1d({1.0, 2.0})};
    const DistanceMatrix d = distance_matrix(svs);
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 3; ++j) CHECK(d.at(i, j) == 0.0);
    CHECK(avg_between_class_distance(d) == 0.0);
}

TEST_CASE("number-line distances") {
    const std::vector<Supervector> svs{sv1d({0.0}), sv1d({3.0}), sv1d({4.0})};
    const DistanceMatrix d = distance_matrix(svs);
    CHECK(d.at(0, 1) == doctest::Approx(3.0));
    CHECK(d.at(0, 2) == doctest::Approx(4.0));
    CHECK(d.at(1, 2) == doctest::Approx(1.0));
    CHECK(avg_between_class_distance(d) == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("distance matrix matches a naive per-pair oracle") {
    Rng rng(42);
    std::vector<Supervector> svs;
    for (int i = 0; i < 6; ++i) {
        std::vector<double> v(5);
        for (auto& x : v) x = rng.normal();
        svs.push_back(sv1d(std::move(v)));
    }
    const DistanceMatrix d = distance_matrix(svs);
    for (size_t i = 0; i < svs.size(); ++i) {
        CHECK(d.at(i, i) == 0.0);
        for (size_t j = 0; j < svs.size(); ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < 5; ++k) {
                const double diff = svs[i].values[k] - svs[j].values[k];
                acc += diff * diff;
            }
            CHECK(std::abs(d.at(i, j) - std::sqrt(acc)) < 1e-12);
            CHECK(d.at(i, j) == d.at(j, i));
            CHECK(d.at(i, j) >= 0.0);
        }
    }
    // triangle inequality on all triples
    for (size_t a = 0; a < svs.size(); ++a)
        for (size_t b = 0; b < svs.size(); ++b)
            for (size_t c = 0; c < svs.size(); ++c)
                CHECK(d.at(a, c) <= d.at(a, b) + d.at(b, c) + 1e-12);
}

TEST_CASE("distance matrix validates inputs") {
    CHECK_THROWS_AS(distance_matrix({sv1d({1.0})}), ValidationError);
    CHECK_THROWS_AS(distance_matrix({sv1d({1.0}), sv1d({1.0, 2.0})}), ValidationError);
}

TEST_CASE("average distance divisor is C(N,2)") {
    std::vector<Supervector> svs;
    for (int i = 0; i < 100; ++i) svs.push_back(sv1d({static_cast<double>(i)}));
    const DistanceMatrix d = distance_matrix(svs);
    double total = 0.0;
    for (size_t i = 0; i < 100; ++i)
        for (size_t j = i + 1; j < 100; ++j) total += d.at(i, j);
    CHECK(avg_between_class_distance(d) == doctest::Approx(total / 4950.0).epsilon(1e-12));
}

TEST_CASE("zone_split: identical models put every frame in the unseen set") {
    const DiagonalGmm ubm = diag_gmm({0.5, 0.5}, {-1.0, 1.0}, {1.0, 1.0}, 1);
    FeatureSequence y;
    y.dim = 1;
    y.data = {0.1, -0.5, 1.7};
    const ZoneSplit split = zone_split(ubm, ubm, y, 0.05);
    CHECK(split.seen_frames.empty());
    CHECK(split.unseen_frames.size() == 3);
    CHECK(split.tau_infinite);
}

TEST_CASE("zone_split: frames at an adapted component land in the seen set") {
    // Component 0 shifted by 3 sigma; frames drawn at its adapted mean.
    const DiagonalGmm ubm = diag_gmm({0.5, 0.5}, {0.0, 20.0}, {1.0, 1.0}, 1);
    DiagonalGmm spk = ubm;
    spk.means[0] = 3.0;
    FeatureSequence y;
    y.dim = 1;
    y.data.assign(10, 3.0);
    const ZoneSplit split = zone_split(spk, ubm, y, 0.05);
    CHECK(split.seen_frames.size() == 10);
    CHECK(split.unseen_frames.empty());
    CHECK_FALSE(split.tau_infinite);
    CHECK(split.tau == 0.0);

    // frames at the untouched component stay unseen
    FeatureSequence far;
    far.dim = 1;
    far.data.assign(10, 20.0);
    const ZoneSplit split_far = zone_split(spk, ubm, far, 0.05);
    CHECK(split_far.seen_frames.empty());
}

TEST_CASE("zone_split: mixed seen/unseen utterance gives tau near one") {
    const DiagonalGmm ubm = diag_gmm({0.5, 0.5}, {0.0, 30.0}, {1.0, 1.0}, 1);
    DiagonalGmm spk = ubm;
    spk.means[0] = 2.0;  // adapted zone at 0 -> 2
    FeatureSequence y;
    y.dim = 1;
    Rng rng(2027);
    size_t truth_seen = 0, truth_unseen = 0;
    for (int t = 0; t < 2400; ++t) {
        if (rng.below(2) == 0) {
            y.data.push_back(2.0 + rng.normal());  // adapted zone
            ++truth_seen;
        } else {
            y.data.push_back(30.0 + rng.normal());  // untouched zone
            ++truth_unseen;
        }
    }
    const ZoneSplit split = zone_split(spk, ubm, y, 0.05);
    const double truth_tau = static_cast<double>(truth_unseen) / static_cast<double>(truth_seen);
    CHECK(std::abs(split.tau - truth_tau) < 0.2);
    CHECK(std::abs(split.tau - 1.0) < 0.2);
}

TEST_CASE("zone_split epsilon limits") {
    const DiagonalGmm ubm = diag_gmm({0.5, 0.5}, {0.0, 8.0}, {1.0, 1.0}, 1);
    DiagonalGmm spk = ubm;
    spk.means[0] = 1.0;
    FeatureSequence y;
    y.dim = 1;
    y.data = {0.0, 1.0, 8.0, 7.5};
    // tiny epsilon: only frames with essentially zero LLR are unseen
    const ZoneSplit tight = zone_split(spk, ubm, y, 1e-12);
    for (const size_t t : tight.unseen_frames) {
        const double llr = spk.log_pdf(std::span(&y.data[t], 1)) - ubm.log_pdf(std::span(&y.data[t], 1));
        CHECK(std::abs(llr) < 1e-12);
    }
    // huge epsilon: everything is unseen
    const ZoneSplit loose = zone_split(spk, ubm, y, 1e9);
    CHECK(loose.unseen_frames.size() == y.frames());
    CHECK_THROWS_AS(zone_split(spk, ubm, y, 0.0), ValidationError);
}

TEST_CASE("map_mismatch degenerate cases") {
    Supervector train = sv1d({1.0, 2.0, 3.0});
    Supervector test = train;
    Supervector ubm = sv1d({0.0, 0.0, 0.0});
    const MapMismatch same = map_mismatch(train, test, ubm);
    CHECK(same.mismatch == 0.0);
    CHECK(same.train_shift == doctest::Approx(std::sqrt(14.0)).epsilon(1e-12));
    CHECK(same.train_shift == same.test_shift);

    // no adaptation: the test supervector sits on the UBM supervector
    const MapMismatch none = map_mismatch(train, ubm, ubm);
    CHECK(none.test_shift == 0.0);
    CHECK(none.mismatch == doctest::Approx(none.train_shift).epsilon(1e-12));
}

TEST_CASE("map_mismatch is positive iff supervectors differ") {
    Supervector a = sv1d({1.0, 0.0});
    Supervector b = sv1d({1.0, 0.5});
    Supervector u = sv1d({0.0, 0.0});
    CHECK(map_mismatch(a, b, u).mismatch > 0.0);
    CHECK(map_mismatch(a, a, u).mismatch == 0.0);
}

TEST_CASE("map_mismatch rejects mixed fingerprints and dimensions") {
    Supervector a = sv1d({1.0});
    Supervector b = sv1d({2.0});
    Supervector u = sv1d({0.0});
    b.ubm_fingerprint = 123;
    CHECK_THROWS_AS(map_mismatch(a, b, u), ValidationError);
    b.ubm_fingerprint = 0;
    b.values.push_back(0.0);
    CHECK_THROWS_AS(map_mismatch(a, b, u), ValidationError);
}

}  // TEST_SUITE
