#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "svt/features.hpp"

using namespace svt;

namespace {

AudioClip speech_clip(size_t samples) {
    AudioClip clip;
    clip.sample_rate = 8000;
    clip.samples.resize(samples);
    for (size_t i = 0; i < samples; ++i)
        clip.samples[i] = 0.7 * std::sin(2.0 * 3.14159265358979323846 * 213.0 * i / 8000.0);
    return clip;
}

std::vector<double> sine_frame(double freq_hz, double amplitude = 0.9) {
    std::vector<double> frame(160);
    for (size_t i = 0; i < frame.size(); ++i)
        frame[i] = amplitude * std::sin(2.0 * 3.14159265358979323846 * freq_hz * i / 8000.0);
    return frame;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("frame_signal framing arithmetic") {
    const AudioClip clip = speech_clip(8000);
    const SpeechMask all(frame_count(8000), 1);
    CHECK(frame_signal(clip, all).size() == 99);

    const AudioClip one = speech_clip(160);
    CHECK(frame_signal(one, SpeechMask(1, 1)).size() == 1);

    const AudioClip short_clip = speech_clip(159);
    CHECK(frame_signal(short_clip, SpeechMask{}).empty());
}

TEST_CASE("frame_signal: 120 s of retained speech yields 12000 frames") {
    // 12000 hops of 10 ms cover two minutes of speech material; the clip
    // needs 160 + 11999*80 samples for the last frame to fit.
    const size_t samples = 160 + 11999 * 80;
    REQUIRE(frame_count(samples) == 12000);
    AudioClip clip;
    clip.sample_rate = 8000;
    clip.samples.assign(samples, 0.1);
    const SpeechMask all(12000, 1);
    const auto frames = frame_signal(clip, all);
    CHECK(frames.size() == 12000);
    FeatureSequence seq;
    seq.dim = 19;
    seq.data.assign(frames.size() * 19, 0.0);
    CHECK(seq.frames() * seq.frame_period == doctest::Approx(120.0));
}

TEST_CASE("frame_signal drops masked-out frames and validates the grid") {
    const AudioClip clip = speech_clip(480);  // 5 frames
    REQUIRE(frame_count(480) == 5);
    SpeechMask mask{1, 0, 1, 0, 1};
    CHECK(frame_signal(clip, mask).size() == 3);
    CHECK_THROWS_AS(frame_signal(clip, SpeechMask{1, 0}), ValidationError);

    AudioClip wrong_rate = clip;
    wrong_rate.sample_rate = 16000;
    CHECK_THROWS_AS(frame_signal(wrong_rate, mask), FormatError);
}

TEST_CASE("mfcc output dimension is 19") {
    const auto frames = frame_signal(speech_clip(8000), SpeechMask(99, 1));
    const FeatureSequence seq = mfcc(frames);
    CHECK(seq.dim == 19);
    CHECK(seq.frames() == 99);
    seq.validate();
}

TEST_CASE("mfcc is deterministic: identical frames give identical rows") {
    const auto frame = sine_frame(350.0);
    const FeatureSequence seq = mfcc({frame, frame});
    REQUIRE(seq.frames() == 2);
    for (int k = 0; k < seq.dim; ++k) CHECK(seq.row(0)[k] == seq.row(1)[k]);
}

TEST_CASE("mfcc of an all-zero frame is the zero vector") {
    const FeatureSequence seq = mfcc({std::vector<double>(160, 0.0)});
    REQUIRE(seq.frames() == 1);
    for (int k = 0; k < seq.dim; ++k) CHECK(std::abs(seq.row(0)[k]) < 1e-12);
}

TEST_CASE("1 kHz sine concentrates energy in the mel filter nearest 1 kHz") {
    // Reference filterbank response computed with an independent DFT.
    const MfccConfig cfg;
    const auto frame = sine_frame(1000.0);
    std::vector<double> windowed(160);
    for (int i = 0; i < 160; ++i)
        windowed[i] = frame[i] * (0.54 - 0.46 * std::cos(2.0 * 3.14159265358979323846 * i / 159.0));
    const auto mags = oracle::dft_magnitudes(windowed, 256);

    // Independent triangular filterbank over 0..4000 Hz on the mel scale.
    const auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
    const auto from_mel = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    std::vector<double> edges(22);
    for (int j = 0; j < 22; ++j) edges[j] = from_mel(mel(4000.0) * j / 21.0);
    std::vector<double> response(20, 0.0);
    int nearest = 0;
    for (int m = 0; m < 20; ++m) {
        for (int k = 0; k <= 128; ++k) {
            const double f = k * 8000.0 / 256.0;
            if (f <= edges[m] || f >= edges[m + 2]) continue;
            const double w = f < edges[m + 1] ? (f - edges[m]) / (edges[m + 1] - edges[m])
                                              : (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
            response[m] += w * mags[k];
        }
        if (std::abs(edges[m + 1] - 1000.0) < std::abs(edges[nearest + 1] - 1000.0)) nearest = m;
    }
    const int argmax = static_cast<int>(std::max_element(response.begin(), response.end()) - response.begin());
    CHECK(argmax == nearest);

    // The implementation's filterbank agrees with the reference response.
    const auto bank = mel_filterbank(cfg);
    std::vector<double> impl_response(20, 0.0);
    for (int m = 0; m < 20; ++m)
        for (int k = 0; k <= 128; ++k) impl_response[m] += bank[m][k] * mags[k];
    const int impl_argmax =
        static_cast<int>(std::max_element(impl_response.begin(), impl_response.end()) - impl_response.begin());
    CHECK(impl_argmax == nearest);
    for (int m = 0; m < 20; ++m) CHECK(impl_response[m] == doctest::Approx(response[m]).epsilon(1e-9));
}

TEST_CASE("fft matches the reference DFT") {
    Rng rng(3);
    std::vector<double> signal(160);
    for (auto& s : signal) s = rng.normal();
    std::vector<double> re(256, 0.0), im(256, 0.0);
    std::copy(signal.begin(), signal.end(), re.begin());
    fft_radix2(re, im);
    const auto mags = oracle::dft_magnitudes(signal, 256);
    for (size_t k = 0; k <= 128; ++k)
        CHECK(std::sqrt(re[k] * re[k] + im[k] * im[k]) == doctest::Approx(mags[k]).epsilon(1e-9));
}

TEST_CASE("shifting a periodic signal by a full period leaves MFCCs unchanged") {
    // 100 Hz at 8 kHz has an 80-sample period; frames 0 and 1 of the signal
    // contain identical samples.
    AudioClip clip;
    clip.sample_rate = 8000;
    clip.samples.resize(400);
    for (size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = 0.8 * std::sin(2.0 * 3.14159265358979323846 * 100.0 * i / 8000.0);
    const auto frames = frame_signal(clip, SpeechMask(frame_count(400), 1));
    REQUIRE(frames.size() >= 2);
    const FeatureSequence seq = mfcc({frames[0], frames[1]});
    for (int k = 0; k < seq.dim; ++k) CHECK(std::abs(seq.row(0)[k] - seq.row(1)[k]) < 1e-9);
}

TEST_CASE("mfcc stays finite for extreme inputs") {
    std::vector<double> loud(160, 1.0), tiny(160, 1e-300);
    const FeatureSequence seq = mfcc({loud, tiny});
    seq.validate();  // throws on non-finite
}

TEST_CASE("feature file round trip is exact") {
    const auto frames = frame_signal(speech_clip(8000), SpeechMask(99, 1));
    FeatureSequence seq = mfcc(frames);
    seq.source_id = "round_trip";
    const auto path = std::filesystem::temp_directory_path() / "svt_test_features.mfcv";
    save_features(seq, path);
    const FeatureSequence loaded = load_features(path);
    CHECK(loaded.dim == seq.dim);
    REQUIRE(loaded.frames() == seq.frames());
    // stored as f32: loading after a save/load cycle is bit-stable
    save_features(loaded, path);
    const FeatureSequence again = load_features(path);
    CHECK(again.data == loaded.data);
    std::filesystem::remove(path);
}

TEST_CASE("feature file rejects corrupt headers") {
    const auto path = std::filesystem::temp_directory_path() / "svt_test_bad.mfcv";
    write_file_bytes(path, {'X', 'X', 'X', 'X', 0, 0, 0, 0});
    CHECK_THROWS_AS(load_features(path), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("frame count reconstructs duration at 100 frames per second") {
    FeatureSequence seq;
    seq.dim = 19;
    seq.data.assign(500 * 19, 0.0);
    CHECK(seq.frames() * seq.frame_period == doctest::Approx(5.0));
    seq.data.assign(2000 * 19, 0.0);
    CHECK(seq.frames() * seq.frame_period == doctest::Approx(20.0));
}

}  // TEST_SUITE
