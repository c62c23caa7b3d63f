#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace infosuff {

// Minimal SHA-256 (FIPS 180-4). Used for cache keys, trial ids, and
// corpus provenance digests; not a security boundary.
class Sha256 {
 public:
    Sha256();

    void update(const void* data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }

    std::array<std::uint8_t, 32> digest();

 private:
    void process_block(const std::uint8_t* block);

    std::array<std::uint32_t, 8> state_;
    std::array<std::uint8_t, 64> buffer_;
    std::uint64_t total_len_ = 0;
    std::size_t buffer_len_ = 0;
};

std::string sha256_hex(std::string_view data);

}  // namespace infosuff
