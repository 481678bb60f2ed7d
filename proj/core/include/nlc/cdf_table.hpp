#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace nlc {

// Quantized cumulative distribution for range coding integers in
// [lo_value, lo_value + symbol_count). Slot masses sum to 2^precision and
// every slot keeps at least one unit so any symbol stays codable. A trailing
// escape slot, when present, routes out-of-support values to a raw-bits path.
class CdfTable {
public:
    static constexpr int min_precision = 8;
    static constexpr int max_precision = 16;

    // pmf[i] is the unnormalized mass of integer lo_value + i; tail_mass is
    // the leftover mass outside the support. The escape slot is appended when
    // the tail deserves at least one quantized unit or when forced.
    static CdfTable from_pmf(std::span<const double> pmf, int32_t lo_value, int precision,
                             double tail_mass = 0.0, bool force_escape = false);

    int precision() const { return precision_; }
    uint32_t total() const { return 1u << precision_; }
    int32_t lo_value() const { return lo_; }
    int64_t symbol_count() const {
        return static_cast<int64_t>(cum_.size()) - 1 - (escape_ ? 1 : 0);
    }
    bool has_escape() const { return escape_; }
    int64_t escape_index() const { return symbol_count(); }

    // slot index for an integer value; the escape index if out of support
    int64_t index_of(int32_t value) const;
    int32_t value_of(int64_t index) const;  // support slots only

    std::pair<uint32_t, uint32_t> slot_range(int64_t index) const;
    // slot whose [lo, hi) interval contains the decoder's cumulative target
    int64_t lookup(uint32_t target) const;

    // cumulative bounds, one entry per slot plus the terminal total
    std::span<const uint32_t> cumulative() const { return cum_; }

private:
    std::vector<uint32_t> cum_;
    int32_t lo_ = 0;
    int precision_ = max_precision;
    bool escape_ = false;
};

}  // namespace nlc
