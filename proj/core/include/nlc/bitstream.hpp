#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlc/model.hpp"

namespace nlc {

// Little-endian container: magic "NLC1", version u8, variant u8, M u16,
// width u32, height u32, model hash 16 bytes, hyper-segment length u32,
// latent-segment length u32, CRC32 of the preceding fields u32, segments.
struct BitstreamHeader {
    static constexpr uint8_t current_version = 1;
    static constexpr size_t encoded_size = 44;

    uint8_t version = current_version;
    ModelVariant variant = ModelVariant::combined;
    uint16_t m = 0;
    uint32_t width = 0, height = 0;  // pre-padding image dims
    std::array<uint8_t, 16> model_hash{};
};

struct Bitstream {
    BitstreamHeader header;
    std::vector<uint8_t> hyper;
    std::vector<uint8_t> latent;

    size_t total_bytes() const {
        return BitstreamHeader::encoded_size + hyper.size() + latent.size();
    }

    std::vector<uint8_t> serialize() const;
    // Validates magic, version, checksum, and segment bounds.
    static Bitstream parse(std::span<const uint8_t> bytes);
};

std::vector<uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace nlc
