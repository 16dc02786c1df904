#pragma once

#include <cstdint>
#include <vector>

#include "svt/common.hpp"

namespace svt {

// Mono audio with samples normalized to [-1, +1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 0;
};

// Per-frame speech flags on the 160-sample / 80-hop framing grid.
using SpeechMask = std::vector<uint8_t>;

inline constexpr int kFrameSize = 160;
inline constexpr int kFrameHop = 80;

// Number of analysis frames a signal of n samples yields.
inline size_t frame_count(size_t n_samples) {
    return n_samples < kFrameSize ? 0 : (n_samples - kFrameSize) / kFrameHop + 1;
}

// Parses a RIFF/WAVE container. Accepts PCM, 16-bit, mono only; samples are
// normalized by 1/32768. Unknown chunks are skipped.
AudioClip read_wav(const std::vector<unsigned char>& bytes);

// Serializes to a canonical 44-byte-header PCM16 mono WAV. read_wav of the
// result reproduces the clip; for canonical inputs the bytes round-trip
// identically.
std::vector<unsigned char> write_wav(const AudioClip& clip);

// Energy VAD: a frame is speech iff its mean energy exceeds the clip-wide
// mean frame energy by more than floor_db (floor_db < 0). The threshold is
// relative, so the mask is invariant to global gain. A clip shorter than one
// frame yields an empty mask.
SpeechMask detect_speech(const AudioClip& clip, double floor_db);

}  // namespace svt
