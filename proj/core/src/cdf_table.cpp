#include "nlc/cdf_table.hpp"

#include <algorithm>
#include <cmath>

#include "nlc/errors.hpp"

namespace nlc {

CdfTable CdfTable::from_pmf(std::span<const double> pmf, int32_t lo_value, int precision,
                            double tail_mass, bool force_escape) {
    check_arg(precision >= min_precision && precision <= max_precision,
              "cdf table: precision out of range");
    check_arg(!pmf.empty(), "cdf table: empty pmf");
    double sum = tail_mass;
    for (double p : pmf) {
        check_arg(std::isfinite(p) && p >= 0.0, "cdf table: pmf mass must be finite and >= 0");
        sum += p;
    }
    check_arg(std::isfinite(tail_mass) && tail_mass >= 0.0, "cdf table: bad tail mass");
    check_arg(sum > 0.0, "cdf table: zero total mass");

    const uint32_t total = 1u << precision;
    const bool escape = force_escape || tail_mass / sum * total >= 1.0;
    const size_t slots = pmf.size() + (escape ? 1 : 0);
    check_arg(slots <= total, "cdf table: more slots than quantization units");

    std::vector<uint64_t> mass(slots);
    uint64_t used = 0;
    for (size_t i = 0; i < slots; ++i) {
        const double w = i < pmf.size() ? pmf[i] : tail_mass;
        uint64_t m = static_cast<uint64_t>(std::floor(w / sum * total));
        if (m < 1) m = 1;
        mass[i] = m;
        used += m;
    }
    auto argmax = [&]() {
        size_t best = 0;
        for (size_t i = 1; i < slots; ++i)
            if (mass[i] > mass[best]) best = i;
        return best;
    };
    if (used < total) {
        // spread the flooring deficit by largest remainder; clamped slots have
        // negative keys and only absorb units after every real remainder
        std::vector<size_t> order(slots);
        std::vector<double> key(slots);
        for (size_t i = 0; i < slots; ++i) {
            order[i] = i;
            const double w = i < pmf.size() ? pmf[i] : tail_mass;
            key[i] = w / sum * total - static_cast<double>(mass[i]);
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return key[a] > key[b]; });
        uint64_t deficit = total - used;
        for (size_t i = 0; deficit > 0; i = (i + 1) % slots, --deficit)
            ++mass[order[i]];
    } else {
        // floors overshoot only through the >= 1 clamps; shave the largest
        while (used > total) {
            const size_t b = argmax();
            const uint64_t cut = std::min(used - total, mass[b] - 1);
            check_model(cut > 0, "cdf table: cannot normalize mass");
            mass[b] -= cut;
            used -= cut;
        }
    }

    CdfTable t;
    t.lo_ = lo_value;
    t.precision_ = precision;
    t.escape_ = escape;
    t.cum_.resize(slots + 1);
    t.cum_[0] = 0;
    for (size_t i = 0; i < slots; ++i)
        t.cum_[i + 1] = t.cum_[i] + static_cast<uint32_t>(mass[i]);
    return t;
}

int64_t CdfTable::index_of(int32_t value) const {
    const int64_t idx = static_cast<int64_t>(value) - lo_;
    if (idx >= 0 && idx < symbol_count()) return idx;
    check_arg(escape_, "cdf table: value out of support and no escape slot");
    return escape_index();
}

int32_t CdfTable::value_of(int64_t index) const {
    check_arg(index >= 0 && index < symbol_count(), "cdf table: not a support slot");
    return lo_ + static_cast<int32_t>(index);
}

std::pair<uint32_t, uint32_t> CdfTable::slot_range(int64_t index) const {
    check_arg(index >= 0 && index + 1 < static_cast<int64_t>(cum_.size()),
              "cdf table: slot index out of range");
    return {cum_[static_cast<size_t>(index)], cum_[static_cast<size_t>(index) + 1]};
}

int64_t CdfTable::lookup(uint32_t target) const {
    check_arg(target < total(), "cdf table: target out of range");
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    return static_cast<int64_t>(it - cum_.begin()) - 1;
}

}  // namespace nlc
