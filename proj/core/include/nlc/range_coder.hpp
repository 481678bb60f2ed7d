#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nlc {

// Byte-oriented arithmetic coder with carry propagation through a pending
// byte counter. Symbols are intervals [cum_lo, cum_hi) out of `total`, with
// total at most 2^16 so the 32-bit range never starves. The always-zero
// leading byte of the classic formulation is dropped, so termination costs
// exactly four bytes and an empty stream is four zero bytes.
class RangeEncoder {
public:
    void encode(uint32_t cum_lo, uint32_t cum_hi, uint32_t total);
    // Fixed-width big-endian payload, coded as uniform chunks of up to 8 bits;
    // costs exactly `bits` bits of range.
    void encode_bits(uint32_t value, int bits);

    // Flushes the final state and hands over the stream. The encoder is spent
    // afterwards.
    std::vector<uint8_t> finish();

    size_t byte_count() const { return out_.size(); }

private:
    void shift_low();

    uint64_t low_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
    uint8_t cache_ = 0;
    uint64_t pending_ = 1;  // bytes owed: cache plus trailing 0xFFs
    bool lead_dropped_ = false;
    std::vector<uint8_t> out_;
};

class RangeDecoder {
public:
    // Reads the four initialization bytes immediately.
    explicit RangeDecoder(std::span<const uint8_t> bytes);

    // Cumulative position of the next symbol in [0, total); follow up with
    // decode_advance using the matching symbol interval.
    uint32_t decode_target(uint32_t total);
    void decode_advance(uint32_t cum_lo, uint32_t cum_hi, uint32_t total);
    uint32_t decode_bits(int bits);

    size_t consumed() const { return pos_; }

private:
    uint8_t next_byte();

    std::span<const uint8_t> in_;
    size_t pos_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
    uint32_t code_ = 0;
    uint32_t slice_ = 0;  // range / total from the pending decode_target
};

}  // namespace nlc
