#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "svt/audio.hpp"

using namespace svt;

namespace {

std::vector<unsigned char> minimal_wav(uint32_t sample_rate, const std::vector<int16_t>& samples,
                                       uint16_t channels = 1, uint16_t bits = 16) {
    std::vector<unsigned char> out;
    const auto put_tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
    const uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
    put_tag("RIFF");
    put_u32le(out, 36 + data_size);
    put_tag("WAVE");
    put_tag("fmt ");
    put_u32le(out, 16);
    out.push_back(1);
    out.push_back(0);
    out.push_back(static_cast<unsigned char>(channels));
    out.push_back(0);
    put_u32le(out, sample_rate);
    put_u32le(out, sample_rate * 2 * channels);
    out.push_back(static_cast<unsigned char>(2 * channels));
    out.push_back(0);
    out.push_back(static_cast<unsigned char>(bits));
    out.push_back(0);
    put_tag("data");
    put_u32le(out, data_size);
    for (const int16_t s : samples) {
        out.push_back(static_cast<unsigned char>(s & 0xff));
        out.push_back(static_cast<unsigned char>((s >> 8) & 0xff));
    }
    return out;
}

AudioClip sine_plus_silence(double sine_seconds, double silence_seconds) {
    AudioClip clip;
    clip.sample_rate = 8000;
    const auto sine_n = static_cast<size_t>(sine_seconds * 8000);
    const auto silence_n = static_cast<size_t>(silence_seconds * 8000);
    for (size_t i = 0; i < sine_n; ++i)
        clip.samples.push_back(0.999 * std::sin(2.0 * 3.14159265358979323846 * 440.0 * i / 8000.0));
    clip.samples.insert(clip.samples.end(), silence_n, 0.0);
    return clip;
}

}  // namespace

TEST_SUITE("audio") {

TEST_CASE("read_wav parses a minimal 8 kHz mono file") {
    std::vector<int16_t> samples(8000, 1000);
    const AudioClip clip = read_wav(minimal_wav(8000, samples));
    CHECK(clip.sample_rate == 8000);
    CHECK(clip.samples.size() == 8000);
    CHECK(clip.samples[0] == doctest::Approx(1000.0 / 32768.0).epsilon(1e-12));
}

TEST_CASE("read_wav normalizes full-scale samples by 1/32768") {
    const AudioClip clip = read_wav(minimal_wav(8000, {32767, -32768}));
    CHECK(clip.samples[0] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-12));
    CHECK(clip.samples[1] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(clip.samples[0] <= 1.0);
    CHECK(clip.samples[1] >= -1.0);
}

TEST_CASE("read_wav rejects stereo") {
    CHECK_THROWS_AS(read_wav(minimal_wav(8000, {0, 0}, /*channels=*/2)), FormatError);
}

TEST_CASE("read_wav rejects non-16-bit depth") {
    CHECK_THROWS_AS(read_wav(minimal_wav(8000, {0, 0}, 1, /*bits=*/8)), FormatError);
}

TEST_CASE("read_wav rejects empty data") {
    CHECK_THROWS_AS(read_wav(minimal_wav(8000, {})), ValidationError);
}

TEST_CASE("read_wav rejects malformed headers") {
    std::vector<unsigned char> junk{'R', 'I', 'F', 'X', 0, 0, 0, 0, 'W', 'A', 'V', 'E'};
    CHECK_THROWS_AS(read_wav(junk), ParseError);
    CHECK_THROWS_AS(read_wav(std::vector<unsigned char>{0x01, 0x02}), ParseError);
}

TEST_CASE("wav round trip is byte-identical for the canonical subset") {
    Rng rng(7);
    std::vector<int16_t> samples(2048);
    for (auto& s : samples) s = static_cast<int16_t>(rng.below(65536) - 32768);
    const auto bytes = minimal_wav(8000, samples);
    const AudioClip clip = read_wav(bytes);
    CHECK(write_wav(clip) == bytes);

    const AudioClip again = read_wav(write_wav(clip));
    CHECK(again.samples == clip.samples);
    CHECK(again.sample_rate == clip.sample_rate);
}

TEST_CASE("detect_speech marks an all-zero signal silent") {
    AudioClip clip;
    clip.sample_rate = 8000;
    clip.samples.assign(8000, 0.0);
    const SpeechMask mask = detect_speech(clip, -30.0);
    REQUIRE(mask.size() == frame_count(8000));
    for (const auto f : mask) CHECK(f == 0);
}

TEST_CASE("detect_speech marks a constant full-scale sinusoid as all speech") {
    const AudioClip clip = sine_plus_silence(1.0, 0.0);
    const SpeechMask mask = detect_speech(clip, -30.0);
    REQUIRE(mask.size() == 99);
    for (const auto f : mask) CHECK(f == 1);
}

TEST_CASE("detect_speech splits sine-then-silence exactly at the boundary") {
    // Expected mask computed with an independent energy reference.
    const AudioClip clip = sine_plus_silence(1.0, 1.0);
    const auto energies = oracle::frame_energies(clip.samples);
    double mean = 0.0;
    for (const double e : energies) mean += e;
    mean /= static_cast<double>(energies.size());
    const double threshold = mean * std::pow(10.0, -30.0 / 10.0);

    const SpeechMask mask = detect_speech(clip, -30.0);
    REQUIRE(mask.size() == energies.size());
    size_t speech_frames = 0;
    for (size_t f = 0; f < mask.size(); ++f) {
        CHECK(mask[f] == (energies[f] > threshold ? 1 : 0));
        speech_frames += mask[f];
    }
    // frames starting inside the first second carry sine energy
    CHECK(speech_frames == 100);
    for (size_t f = 0; f < 100; ++f) CHECK(mask[f] == 1);
    for (size_t f = 100; f < mask.size(); ++f) CHECK(mask[f] == 0);
}

TEST_CASE("detect_speech is invariant to global gain") {
    AudioClip clip = sine_plus_silence(0.5, 0.7);
    Rng rng(11);
    for (auto& s : clip.samples) s += 1e-4 * rng.normal();
    const SpeechMask base = detect_speech(clip, -25.0);
    for (const double gain : {0.25, 2.0, 8.0, 3.7}) {
        AudioClip scaled = clip;
        for (auto& s : scaled.samples) s *= gain;
        CHECK(detect_speech(scaled, -25.0) == base);
    }
}

TEST_CASE("detect_speech yields an empty mask for sub-frame clips") {
    AudioClip clip;
    clip.sample_rate = 8000;
    clip.samples.assign(100, 0.5);
    CHECK(detect_speech(clip, -30.0).empty());
}

TEST_CASE("detect_speech validates inputs") {
    AudioClip clip;
    clip.sample_rate = 8000;
    CHECK_THROWS_AS(detect_speech(clip, -30.0), ValidationError);  // empty
    clip.samples.assign(400, 0.1);
    CHECK_THROWS_AS(detect_speech(clip, 0.0), ValidationError);  // floor must be < 0
}

TEST_CASE("mask length equals the frame grid for every clip length") {
    for (const size_t n : {0UL, 1UL, 159UL, 160UL, 161UL, 240UL, 8000UL, 8123UL}) {
        AudioClip clip;
        clip.sample_rate = 8000;
        clip.samples.assign(n, 0.25);
        if (n == 0) continue;
        CHECK(detect_speech(clip, -30.0).size() == frame_count(n));
    }
}

}  // TEST_SUITE
