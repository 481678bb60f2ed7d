#include "nlc/context.hpp"

#include "nlc/errors.hpp"

namespace nlc {

int64_t context_kernel_extent(ContextKind kind) {
    switch (kind) {
        case ContextKind::k3: return 3;
        case ContextKind::k5: return 5;
        case ContextKind::k7: return 7;
        case ContextKind::single_neighbor: return 3;
        case ContextKind::prev_row3: return 3;
    }
    check_arg(false, "unknown context kind");
    return 0;
}

std::vector<uint8_t> context_mask(ContextKind kind) {
    const int64_t k = context_kernel_extent(kind);
    const int64_t c = k / 2;
    std::vector<uint8_t> mask(static_cast<size_t>(k * k), 0);
    auto set = [&](int64_t ky, int64_t kx) { mask[static_cast<size_t>(ky * k + kx)] = 1; };
    switch (kind) {
        case ContextKind::k3:
        case ContextKind::k5:
        case ContextKind::k7:
            // strictly-before-center in raster order
            for (int64_t ky = 0; ky < k; ++ky)
                for (int64_t kx = 0; kx < k; ++kx)
                    if (ky < c || (ky == c && kx < c)) set(ky, kx);
            break;
        case ContextKind::single_neighbor:
            set(c, c - 1);
            break;
        case ContextKind::prev_row3:
            set(c - 1, c - 1);
            set(c - 1, c);
            set(c - 1, c + 1);
            break;
    }
    return mask;
}

std::vector<std::pair<int, int>> context_taps(ContextKind kind) {
    const int64_t k = context_kernel_extent(kind);
    const auto mask = context_mask(kind);
    std::vector<std::pair<int, int>> taps;
    for (int64_t ky = 0; ky < k; ++ky)
        for (int64_t kx = 0; kx < k; ++kx)
            if (mask[static_cast<size_t>(ky * k + kx)])
                taps.emplace_back(static_cast<int>(ky), static_cast<int>(kx));
    return taps;
}

std::string context_kind_name(ContextKind kind) {
    switch (kind) {
        case ContextKind::k3: return "k3";
        case ContextKind::k5: return "k5";
        case ContextKind::k7: return "k7";
        case ContextKind::single_neighbor: return "single-neighbor";
        case ContextKind::prev_row3: return "prev-row-3";
    }
    check_arg(false, "unknown context kind");
    return {};
}

ContextKind context_kind_from_name(const std::string& name) {
    if (name == "k3") return ContextKind::k3;
    if (name == "k5") return ContextKind::k5;
    if (name == "k7") return ContextKind::k7;
    if (name == "single-neighbor") return ContextKind::single_neighbor;
    if (name == "prev-row-3") return ContextKind::prev_row3;
    check_arg(false, "unknown context kind: " + name);
    return ContextKind::k5;
}

ScanOrder context_scan_order(ContextKind kind) {
    return kind == ContextKind::single_neighbor ? ScanOrder::column_major
                                                : ScanOrder::raster;
}

}  // namespace nlc
