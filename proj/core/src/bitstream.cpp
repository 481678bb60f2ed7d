#include "nlc/bitstream.hpp"

#include <fstream>

#include "nlc/errors.hpp"
#include "nlc/hash.hpp"

namespace nlc {

namespace {

constexpr char magic[4] = {'N', 'L', 'C', '1'};

void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }
void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint16_t get_u16(std::span<const uint8_t> b, size_t at) {
    return static_cast<uint16_t>(b[at] | (b[at + 1] << 8));
}
uint32_t get_u32(std::span<const uint8_t> b, size_t at) {
    return static_cast<uint32_t>(b[at]) | (static_cast<uint32_t>(b[at + 1]) << 8) |
           (static_cast<uint32_t>(b[at + 2]) << 16) |
           (static_cast<uint32_t>(b[at + 3]) << 24);
}

}  // namespace

std::vector<uint8_t> Bitstream::serialize() const {
    std::vector<uint8_t> out;
    out.reserve(total_bytes());
    for (char c : magic) out.push_back(static_cast<uint8_t>(c));
    put_u8(out, header.version);
    put_u8(out, static_cast<uint8_t>(header.variant));
    put_u16(out, header.m);
    put_u32(out, header.width);
    put_u32(out, header.height);
    out.insert(out.end(), header.model_hash.begin(), header.model_hash.end());
    put_u32(out, static_cast<uint32_t>(hyper.size()));
    put_u32(out, static_cast<uint32_t>(latent.size()));
    put_u32(out, crc32(std::span<const uint8_t>(out.data(), out.size())));
    out.insert(out.end(), hyper.begin(), hyper.end());
    out.insert(out.end(), latent.begin(), latent.end());
    return out;
}

Bitstream Bitstream::parse(std::span<const uint8_t> bytes) {
    check_data(bytes.size() >= BitstreamHeader::encoded_size, "bitstream: truncated header");
    for (size_t i = 0; i < 4; ++i)
        check_data(bytes[i] == static_cast<uint8_t>(magic[i]), "bitstream: bad magic");
    const uint32_t stored_crc = get_u32(bytes, 40);
    const uint32_t computed_crc = crc32(bytes.subspan(0, 40));
    check_data(stored_crc == computed_crc, "bitstream: header checksum mismatch");

    Bitstream b;
    b.header.version = bytes[4];
    check_data(b.header.version == BitstreamHeader::current_version,
               "bitstream: unsupported version " + std::to_string(b.header.version));
    check_data(bytes[5] <= static_cast<uint8_t>(ModelVariant::combined),
               "bitstream: unknown variant id");
    b.header.variant = static_cast<ModelVariant>(bytes[5]);
    b.header.m = get_u16(bytes, 6);
    b.header.width = get_u32(bytes, 8);
    b.header.height = get_u32(bytes, 12);
    for (size_t i = 0; i < 16; ++i) b.header.model_hash[i] = bytes[16 + i];
    const uint32_t hyper_len = get_u32(bytes, 32);
    const uint32_t latent_len = get_u32(bytes, 36);
    check_data(bytes.size() == BitstreamHeader::encoded_size +
                                   static_cast<size_t>(hyper_len) + latent_len,
               "bitstream: segment lengths disagree with file size");
    const uint8_t* seg = bytes.data() + BitstreamHeader::encoded_size;
    b.hyper.assign(seg, seg + hyper_len);
    b.latent.assign(seg + hyper_len, seg + hyper_len + latent_len);
    return b;
}

std::vector<uint8_t> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    check_data(in.good(), "cannot open " + path);
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<uint8_t> bytes(static_cast<size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    check_data(in.gcount() == size, "short read on " + path);
    return bytes;
}

void write_binary_file(const std::string& path, std::span<const uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    check_data(out.good(), "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    check_data(out.good(), "write failed for " + path);
}

}  // namespace nlc
