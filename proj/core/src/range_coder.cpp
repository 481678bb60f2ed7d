#include "nlc/range_coder.hpp"

#include "nlc/errors.hpp"

namespace nlc {

namespace {
constexpr uint32_t renorm_bound = 1u << 24;
}

void RangeEncoder::shift_low() {
    // Emit when the top byte is settled: either it cannot be hit by a later
    // carry (< 0xFF) or a carry just arrived and resolves the pending run.
    if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
        const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
        uint8_t byte = cache_;
        do {
            if (lead_dropped_)
                out_.push_back(static_cast<uint8_t>(byte + carry));
            else
                lead_dropped_ = true;  // the initial zero cache, provably carry-free
            byte = 0xFF;
        } while (--pending_ != 0);
        cache_ = static_cast<uint8_t>(low_ >> 24);
    }
    ++pending_;
    low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(uint32_t cum_lo, uint32_t cum_hi, uint32_t total) {
    check_arg(total >= 2 && total <= (1u << 16), "range encoder: bad total");
    check_arg(cum_lo < cum_hi && cum_hi <= total, "range encoder: bad symbol interval");
    const uint32_t slice = range_ / total;
    low_ += static_cast<uint64_t>(slice) * cum_lo;
    // the top symbol absorbs the division remainder
    range_ = cum_hi == total ? range_ - slice * cum_lo : slice * (cum_hi - cum_lo);
    while (range_ < renorm_bound) {
        shift_low();
        range_ <<= 8;
    }
}

void RangeEncoder::encode_bits(uint32_t value, int bits) {
    check_arg(bits >= 1 && bits <= 32, "range encoder: bad bit width");
    check_arg(bits == 32 || value < (1u << bits), "range encoder: value exceeds bit width");
    while (bits > 0) {
        const int chunk = bits > 8 ? 8 : bits;
        bits -= chunk;
        const uint32_t v = (value >> bits) & ((1u << chunk) - 1u);
        encode(v, v + 1, 1u << chunk);
    }
}

std::vector<uint8_t> RangeEncoder::finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : in_(bytes) {
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
    check_data(pos_ < in_.size(), "range decoder: bitstream exhausted");
    return in_[pos_++];
}

uint32_t RangeDecoder::decode_target(uint32_t total) {
    check_arg(total >= 2 && total <= (1u << 16), "range decoder: bad total");
    slice_ = range_ / total;
    const uint32_t v = code_ / slice_;
    return v >= total ? total - 1 : v;
}

void RangeDecoder::decode_advance(uint32_t cum_lo, uint32_t cum_hi, uint32_t total) {
    check_arg(cum_lo < cum_hi && cum_hi <= total, "range decoder: bad symbol interval");
    code_ -= slice_ * cum_lo;
    range_ = cum_hi == total ? range_ - slice_ * cum_lo : slice_ * (cum_hi - cum_lo);
    while (range_ < renorm_bound) {
        code_ = (code_ << 8) | next_byte();
        range_ <<= 8;
    }
}

uint32_t RangeDecoder::decode_bits(int bits) {
    check_arg(bits >= 1 && bits <= 32, "range decoder: bad bit width");
    uint32_t value = 0;
    while (bits > 0) {
        const int chunk = bits > 8 ? 8 : bits;
        bits -= chunk;
        const uint32_t v = decode_target(1u << chunk);
        decode_advance(v, v + 1, 1u << chunk);
        value = (value << chunk) | v;
    }
    return value;
}

}  // namespace nlc
