#include "svt/audio.hpp"

#include <cmath>
#include <string>

namespace svt {

namespace {

uint16_t get_u16le(const unsigned char* p) {
    return static_cast<uint16_t>(p[0]) | static_cast<uint16_t>(p[1] << 8);
}

}  // namespace

AudioClip read_wav(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 12) throw ParseError("wav: file too short for RIFF header");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0) throw ParseError("wav: missing RIFF magic");
    if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) throw ParseError("wav: missing WAVE form type");

    bool have_fmt = false;
    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    const unsigned char* data = nullptr;
    uint32_t data_size = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const uint32_t chunk_size = get_u32le(chunk + 4);
        const size_t body = pos + 8;
        if (body + chunk_size > bytes.size()) throw ParseError("wav: truncated chunk");
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw ParseError("wav: fmt chunk too short");
            format = get_u16le(bytes.data() + body);
            channels = get_u16le(bytes.data() + body + 2);
            sample_rate = get_u32le(bytes.data() + body + 4);
            bits = get_u16le(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = chunk_size;
        }
        pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }

    if (!have_fmt) throw ParseError("wav: no fmt chunk");
    if (data == nullptr) throw ParseError("wav: no data chunk");
    if (format != 1) throw FormatError("wav: unsupported format tag " + std::to_string(format) + " (PCM only)");
    if (channels != 1) throw FormatError("wav: unsupported channel count " + std::to_string(channels) + " (mono only)");
    if (bits != 16) throw FormatError("wav: unsupported bit depth " + std::to_string(bits) + " (16-bit only)");
    if (sample_rate == 0) throw ParseError("wav: zero sample rate");
    if (data_size < 2) throw ValidationError("wav: empty audio (no samples)");

    AudioClip clip;
    clip.sample_rate = static_cast<int>(sample_rate);
    const size_t n = data_size / 2;
    clip.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const auto raw = static_cast<int16_t>(get_u16le(data + 2 * i));
        clip.samples[i] = static_cast<double>(raw) / 32768.0;
    }
    return clip;
}

std::vector<unsigned char> write_wav(const AudioClip& clip) {
    if (clip.sample_rate <= 0) throw ValidationError("wav: sample rate must be positive");
    if (clip.samples.empty()) throw ValidationError("wav: empty audio (no samples)");

    const uint32_t data_size = static_cast<uint32_t>(clip.samples.size() * 2);
    std::vector<unsigned char> out;
    out.reserve(44 + data_size);
    const auto put_tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
    put_tag("RIFF");
    put_u32le(out, 36 + data_size);
    put_tag("WAVE");
    put_tag("fmt ");
    put_u32le(out, 16);
    out.push_back(1);  // PCM
    out.push_back(0);
    out.push_back(1);  // mono
    out.push_back(0);
    put_u32le(out, static_cast<uint32_t>(clip.sample_rate));
    put_u32le(out, static_cast<uint32_t>(clip.sample_rate) * 2);  // byte rate
    out.push_back(2);  // block align
    out.push_back(0);
    out.push_back(16);  // bits
    out.push_back(0);
    put_tag("data");
    put_u32le(out, data_size);
    for (const double s : clip.samples) {
        double v = std::round(s * 32768.0);
        if (v > 32767.0) v = 32767.0;
        if (v < -32768.0) v = -32768.0;
        const auto raw = static_cast<int16_t>(v);
        out.push_back(static_cast<unsigned char>(raw & 0xff));
        out.push_back(static_cast<unsigned char>((raw >> 8) & 0xff));
    }
    return out;
}

SpeechMask detect_speech(const AudioClip& clip, double floor_db) {
    if (clip.samples.empty()) throw ValidationError("detect_speech: empty clip");
    if (!(floor_db < 0.0)) throw ValidationError("detect_speech: floor_db must be negative");

    const size_t frames = frame_count(clip.samples.size());
    SpeechMask mask(frames, 0);
    if (frames == 0) return mask;

    std::vector<double> energy(frames);
    double total = 0.0;
    for (size_t f = 0; f < frames; ++f) {
        const double* s = clip.samples.data() + f * kFrameHop;
        double acc = 0.0;
        for (int i = 0; i < kFrameSize; ++i) acc += s[i] * s[i];
        energy[f] = acc / kFrameSize;
        total += energy[f];
    }
    const double mean_energy = total / static_cast<double>(frames);
    if (mean_energy <= 0.0) return mask;  // all-silent clip

    const double threshold = mean_energy * std::pow(10.0, floor_db / 10.0);
    for (size_t f = 0; f < frames; ++f) mask[f] = energy[f] > threshold ? 1 : 0;
    return mask;
}

}  // namespace svt
