#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "svt/audio.hpp"
#include "svt/common.hpp"

namespace svt {

// T x D matrix of feature frames, row-major.
struct FeatureSequence {
    int dim = 0;
    std::vector<double> data;  // frames * dim
    double frame_period = 0.010;  // seconds
    std::string source_id;

    size_t frames() const { return dim == 0 ? 0 : data.size() / static_cast<size_t>(dim); }
    const double* row(size_t t) const { return data.data() + t * static_cast<size_t>(dim); }
    double* row(size_t t) { return data.data() + t * static_cast<size_t>(dim); }
    void append_row(const double* x) { data.insert(data.end(), x, x + dim); }
    void validate() const;
};

struct MfccConfig {
    int sample_rate = 8000;
    int frame_size = 160;   // 20 ms
    int frame_hop = 80;     // 50 % overlap
    int fft_size = 256;     // zero-padded from frame_size; power of two
    int mel_filters = 20;
    double mel_low_hz = 0.0;
    double mel_high_hz = 4000.0;
    double log_floor = 1e-10;
    double pre_emphasis = 0.0;  // 0 disables
    int num_coefficients = 19;  // DCT coefficients 1..19; coefficient 0 discarded
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Cuts the clip into 160-sample frames with 80-sample hop, keeping only
// frames whose mask entry is true. The partial tail is discarded. The clip
// must be 8 kHz; the mask length must match the framing grid.
std::vector<std::vector<double>> frame_signal(const AudioClip& clip, const SpeechMask& mask);

// Converts 160-sample frames to MFCC rows: Hamming window, zero-pad to
// fft_size, magnitude spectrum, triangular mel filterbank, floored log,
// orthonormal DCT-II, coefficients 1..num_coefficients.
FeatureSequence mfcc(const std::vector<std::vector<double>>& frames, const MfccConfig& cfg = {});

// Triangular mel filterbank weights over FFT bins 0..fft_size/2, one filter
// per row. Exposed for diagnostics and tests.
std::vector<std::vector<double>> mel_filterbank(const MfccConfig& cfg);

// "MFCV" feature file: magic, version u32=1, T u32, D u32, then T*D
// little-endian f32, row-major.
void save_features(const FeatureSequence& seq, const std::filesystem::path& path);
FeatureSequence load_features(const std::filesystem::path& path);

// In-place radix-2 FFT over interleaved complex data (re,im pairs).
// n must be a power of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

}  // namespace svt
