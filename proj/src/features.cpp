#include "svt/features.hpp"

#include <cmath>

namespace svt {

void FeatureSequence::validate() const {
    if (dim <= 0) throw ValidationError("feature sequence: dimension must be positive");
    if (data.size() % static_cast<size_t>(dim) != 0)
        throw ValidationError("feature sequence: data size not a multiple of dim");
    for (const double v : data)
        if (!std::isfinite(v)) throw ValidationError("feature sequence: non-finite value");
}

std::vector<std::vector<double>> frame_signal(const AudioClip& clip, const SpeechMask& mask) {
    if (clip.sample_rate != 8000)
        throw FormatError("frame_signal: expected 8000 Hz input, got " + std::to_string(clip.sample_rate));
    const size_t frames = frame_count(clip.samples.size());
    if (mask.size() != frames)
        throw ValidationError("frame_signal: mask length " + std::to_string(mask.size()) +
                              " does not match frame count " + std::to_string(frames));
    std::vector<std::vector<double>> out;
    for (size_t f = 0; f < frames; ++f) {
        if (!mask[f]) continue;
        const double* s = clip.samples.data() + f * kFrameHop;
        out.emplace_back(s, s + kFrameSize);
    }
    return out;
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
    const size_t n = re.size();
    if (n != im.size() || n == 0 || (n & (n - 1)) != 0)
        throw ValidationError("fft: length must be a power of two");
    // bit reversal
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    const double pi = 3.14159265358979323846;
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * pi / static_cast<double>(len);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (size_t i = 0; i < n; i += len) {
            double cur_r = 1.0, cur_i = 0.0;
            for (size_t k = 0; k < len / 2; ++k) {
                const size_t a = i + k, b = i + k + len / 2;
                const double tr = re[b] * cur_r - im[b] * cur_i;
                const double ti = re[b] * cur_i + im[b] * cur_r;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double nr = cur_r * wr - cur_i * wi;
                cur_i = cur_r * wi + cur_i * wr;
                cur_r = nr;
            }
        }
    }
}

std::vector<std::vector<double>> mel_filterbank(const MfccConfig& cfg) {
    const int bins = cfg.fft_size / 2 + 1;
    const double mel_low = hz_to_mel(cfg.mel_low_hz);
    const double mel_high = hz_to_mel(cfg.mel_high_hz);
    std::vector<double> edges(cfg.mel_filters + 2);
    for (int j = 0; j < cfg.mel_filters + 2; ++j)
        edges[j] = mel_to_hz(mel_low + (mel_high - mel_low) * j / (cfg.mel_filters + 1));

    std::vector<std::vector<double>> bank(cfg.mel_filters, std::vector<double>(bins, 0.0));
    for (int m = 0; m < cfg.mel_filters; ++m) {
        const double f_lo = edges[m], f_c = edges[m + 1], f_hi = edges[m + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * cfg.sample_rate / cfg.fft_size;
            if (f <= f_lo || f >= f_hi) continue;
            bank[m][k] = f < f_c ? (f - f_lo) / (f_c - f_lo) : (f_hi - f) / (f_hi - f_c);
        }
    }
    return bank;
}

FeatureSequence mfcc(const std::vector<std::vector<double>>& frames, const MfccConfig& cfg) {
    if (cfg.fft_size < cfg.frame_size || (cfg.fft_size & (cfg.fft_size - 1)) != 0)
        throw ValidationError("mfcc: fft_size must be a power of two >= frame_size");
    if (cfg.num_coefficients < 1 || cfg.num_coefficients >= cfg.mel_filters)
        throw ValidationError("mfcc: num_coefficients must be in [1, mel_filters)");

    const double pi = 3.14159265358979323846;
    std::vector<double> window(cfg.frame_size);
    for (int i = 0; i < cfg.frame_size; ++i)
        window[i] = 0.54 - 0.46 * std::cos(2.0 * pi * i / (cfg.frame_size - 1));

    const auto bank = mel_filterbank(cfg);
    const int bins = cfg.fft_size / 2 + 1;

    // DCT-II basis, orthonormal; rows 1..num_coefficients
    const int nf = cfg.mel_filters;
    std::vector<double> dct(static_cast<size_t>(cfg.num_coefficients) * nf);
    const double scale = std::sqrt(2.0 / nf);
    for (int j = 1; j <= cfg.num_coefficients; ++j)
        for (int m = 0; m < nf; ++m)
            dct[static_cast<size_t>(j - 1) * nf + m] = scale * std::cos(pi * j * (2 * m + 1) / (2.0 * nf));

    FeatureSequence seq;
    seq.dim = cfg.num_coefficients;
    seq.data.reserve(frames.size() * static_cast<size_t>(seq.dim));

    std::vector<double> re(cfg.fft_size), im(cfg.fft_size), fb(nf), logfb(nf);
    for (const auto& frame : frames) {
        if (static_cast<int>(frame.size()) != cfg.frame_size)
            throw ValidationError("mfcc: frame size mismatch");
        std::fill(re.begin(), re.end(), 0.0);
        std::fill(im.begin(), im.end(), 0.0);
        if (cfg.pre_emphasis > 0.0) {
            re[0] = frame[0] * window[0];
            for (int i = 1; i < cfg.frame_size; ++i)
                re[i] = (frame[i] - cfg.pre_emphasis * frame[i - 1]) * window[i];
        } else {
            for (int i = 0; i < cfg.frame_size; ++i) re[i] = frame[i] * window[i];
        }
        fft_radix2(re, im);
        for (int m = 0; m < nf; ++m) {
            double acc = 0.0;
            const auto& w = bank[m];
            for (int k = 0; k < bins; ++k) {
                if (w[k] == 0.0) continue;
                acc += w[k] * std::sqrt(re[k] * re[k] + im[k] * im[k]);
            }
            fb[m] = acc;
        }
        for (int m = 0; m < nf; ++m) logfb[m] = std::log(std::max(fb[m], cfg.log_floor));
        for (int j = 0; j < cfg.num_coefficients; ++j) {
            double acc = 0.0;
            const double* basis = dct.data() + static_cast<size_t>(j) * nf;
            for (int m = 0; m < nf; ++m) acc += basis[m] * logfb[m];
            seq.data.push_back(acc);
        }
    }
    return seq;
}

void save_features(const FeatureSequence& seq, const std::filesystem::path& path) {
    seq.validate();
    std::vector<unsigned char> out;
    out.reserve(16 + seq.data.size() * 4);
    out.insert(out.end(), {'M', 'F', 'C', 'V'});
    put_u32le(out, 1);
    put_u32le(out, static_cast<uint32_t>(seq.frames()));
    put_u32le(out, static_cast<uint32_t>(seq.dim));
    for (const double v : seq.data) put_f32le(out, static_cast<float>(v));
    write_file_bytes(path, out);
}

FeatureSequence load_features(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), "MFCV", 4) != 0)
        throw ParseError("feature file: missing MFCV magic: " + path.string());
    const uint32_t version = get_u32le(bytes.data() + 4);
    if (version != 1) throw FormatError("feature file: unsupported version " + std::to_string(version));
    const uint32_t t = get_u32le(bytes.data() + 8);
    const uint32_t d = get_u32le(bytes.data() + 12);
    const size_t need = 16 + static_cast<size_t>(t) * d * 4;
    if (bytes.size() != need) throw ParseError("feature file: size mismatch: " + path.string());
    FeatureSequence seq;
    seq.dim = static_cast<int>(d);
    seq.data.resize(static_cast<size_t>(t) * d);
    for (size_t i = 0; i < seq.data.size(); ++i) seq.data[i] = get_f32le(bytes.data() + 16 + i * 4);
    seq.source_id = path.stem().string();
    seq.validate();
    return seq;
}

}  // namespace svt
