#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace infosuff {

// SplitMix64. Chosen over std:: engines so that seeded shuffles and
// bootstrap resamples are bit-identical across platforms and compilers.
class SplitMix64 {
 public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n). Lemire multiply-shift; slight bias is irrelevant
    // here, determinism is what matters.
    std::uint64_t bounded(std::uint64_t n) {
        return std::uint64_t((static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Uniform double in [0, 1) with 53 bits.
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

 private:
    std::uint64_t state_;
};

// Derives an independent stream seed from a parent seed and a label,
// so per-cell / per-resample streams do not overlap by construction.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

template <typename T>
void seeded_shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = std::size_t(rng.bounded(i));
        std::swap(v[i - 1], v[j]);
    }
}

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// lowercase + collapse runs of whitespace to single spaces + strip punctuation
std::string normalize_text(std::string_view s);

// Shortest round-trip decimal form (std::to_chars), deterministic across runs.
std::string fmt_double(double v);

// Fixed decimals, for the rounded Markdown tables.
std::string fmt_fixed(double v, int decimals);

std::int64_t now_ms();

}  // namespace infosuff
