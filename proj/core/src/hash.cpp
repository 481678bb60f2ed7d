#include "nlc/hash.hpp"

namespace nlc {

namespace {

struct Crc32Table {
    uint32_t entries[256];
    constexpr Crc32Table() : entries() {
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            entries[i] = c;
        }
    }
};
constexpr Crc32Table crc_table;

// FNV-1a 128-bit offset basis and prime
constexpr unsigned __int128 fnv_basis =
    (static_cast<unsigned __int128>(0x6c62272e07bb0142ULL) << 64) | 0x62b821756295c58dULL;
constexpr unsigned __int128 fnv_prime =
    (static_cast<unsigned __int128>(0x0000000001000000ULL) << 64) | 0x000000000000013bULL;

}  // namespace

uint32_t crc32(std::span<const uint8_t> data, uint32_t seed) {
    uint32_t c = seed ^ 0xFFFFFFFFu;
    for (uint8_t b : data) c = crc_table.entries[(c ^ b) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

Fnv128::Fnv128() : state_(fnv_basis) {}

void Fnv128::update(std::span<const uint8_t> data) {
    unsigned __int128 s = state_;
    for (uint8_t b : data) {
        s ^= b;
        s *= fnv_prime;
    }
    state_ = s;
}

void Fnv128::update_u64(uint64_t v) {
    uint8_t bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<uint8_t>(v >> (8 * i));
    update(std::span<const uint8_t>(bytes, 8));
}

std::array<uint8_t, 16> Fnv128::digest() const {
    std::array<uint8_t, 16> out;
    for (int i = 0; i < 16; ++i)
        out[static_cast<size_t>(i)] = static_cast<uint8_t>(state_ >> (8 * i));
    return out;
}

std::string Fnv128::hex() const {
    static const char* digits = "0123456789abcdef";
    const auto d = digest();
    std::string s(32, '0');
    for (int i = 0; i < 16; ++i) {
        s[static_cast<size_t>(2 * i)] = digits[d[static_cast<size_t>(i)] >> 4];
        s[static_cast<size_t>(2 * i + 1)] = digits[d[static_cast<size_t>(i)] & 0xF];
    }
    return s;
}

}  // namespace nlc
