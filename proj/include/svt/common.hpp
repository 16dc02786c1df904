#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace svt {

// Error taxonomy. ParseError: the bytes/text could not be decoded.
// FormatError: decoded fine but the format/variant is unsupported.
// ValidationError: a precondition or data invariant does not hold.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// 64-bit FNV-1a, used for artifact fingerprints and input provenance.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t fnv1a64_file(const std::filesystem::path& path);

// SplitMix64 step; used to derive independent sub-seeds from a root seed
// so that parallel and serial generation produce identical streams.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t root, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    return mix64(mix64(mix64(mix64(root) ^ a) ^ b) ^ c);
}

// Deterministic RNG: mt19937_64 core (bit-exact across implementations per
// the standard) with hand-rolled transforms, since std distributions are
// implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    double uniform() {  // [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Modulo bias is < 2^-50 for n < 2^14.
    uint64_t below(uint64_t n) { return engine_() % n; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = r * std::sin(two_pi * u2);
        have_spare_ = true;
        return r * std::cos(two_pi * u2);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

int default_jobs();

// Runs fn(i) for i in [0, n) on up to `jobs` worker threads. Work items must
// write only to their own output slots; completion order is unspecified but
// the slot layout makes results independent of the thread count.
void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn);

// Little-endian binary helpers for the fixed file formats.
void put_u32le(std::vector<unsigned char>& out, uint32_t v);
void put_f32le(std::vector<unsigned char>& out, float v);
uint32_t get_u32le(const unsigned char* p);
float get_f32le(const unsigned char* p);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

}  // namespace svt
