#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace nlc {

// Reflected CRC-32 (polynomial 0xEDB88320), the variant used by zip/png.
uint32_t crc32(std::span<const uint8_t> data, uint32_t seed = 0);

// Streaming 128-bit FNV-1a over bytes; used to fingerprint model weights.
class Fnv128 {
public:
    Fnv128();
    void update(std::span<const uint8_t> data);
    void update_u64(uint64_t v);  // little-endian bytes
    std::array<uint8_t, 16> digest() const;
    std::string hex() const;

private:
    unsigned __int128 state_;
};

}  // namespace nlc
