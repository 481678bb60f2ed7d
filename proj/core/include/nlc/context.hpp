#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nlc {

// Causal neighborhoods for the context model. All masks exclude the center
// and everything after it in raster order; the reduced shapes keep only a
// subset of the past.
enum class ContextKind : uint8_t {
    k3 = 0,
    k5 = 1,
    k7 = 2,
    single_neighbor = 3,  // left neighbor only
    prev_row3 = 4,        // three nearest positions of the previous row
};

int64_t context_kernel_extent(ContextKind kind);

// Row-major 0/1 mask of size extent*extent.
std::vector<uint8_t> context_mask(ContextKind kind);

// Visible (ky, kx) offsets in raster order.
std::vector<std::pair<int, int>> context_taps(ContextKind kind);

std::string context_kind_name(ContextKind kind);
ContextKind context_kind_from_name(const std::string& name);

// Traversal order for sequential coding. The left-only neighborhood makes
// rows mutually independent, so it is coded column by column and rows can be
// processed in parallel; every other kind depends on the current row's past
// and is coded in raster order.
enum class ScanOrder { raster, column_major };
ScanOrder context_scan_order(ContextKind kind);

}  // namespace nlc
