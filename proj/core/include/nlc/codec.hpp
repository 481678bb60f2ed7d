#pragma once

#include "nlc/bitstream.hpp"
#include "nlc/cdf_table.hpp"
#include "nlc/model.hpp"
#include "nlc/tensor.hpp"

namespace nlc {

// integer supports of the coding tables
inline constexpr int32_t latent_support_lo = -64;
inline constexpr int32_t latent_support_hi = 63;
inline constexpr int32_t hyper_support_lo = -32;
inline constexpr int32_t hyper_support_hi = 31;
inline constexpr int coding_precision = 16;

// Pads to multiples of `multiple` by edge replication (bottom/right).
Tensor pad_image(const Tensor& x, int64_t multiple = 64);
Tensor crop_image(const Tensor& x, int64_t height, int64_t width);

// Coding table for one integer lattice under a location/scale distribution;
// the encoder and decoder both build their tables through this one routine.
CdfTable conditional_table(DistributionKind kind, double mu, double sigma);
CdfTable density_table(const FactorizedDensity& fd, int64_t channel, int32_t lo,
                       int32_t hi);

struct CompressResult {
    Bitstream stream;
    Tensor reconstruction;  // encoder-side decode, already cropped
    Tensor yhat;            // quantized latents (1,M,h,w)
    Tensor zhat;            // quantized hyper-latents, empty if none
    // information content under the model's real-valued (floored) pmf
    double entropy_bits_latent = 0.0;
    double entropy_bits_hyper = 0.0;
};

CompressResult compress_image(Model& model, const Tensor& image);

// `serial` walks positions one by one. `wavefront` batches the parameter
// evaluation along the free axis of the restricted contexts (rows for the
// left-neighbor mask, a row at a time for the previous-row mask); the coded
// symbol order is unchanged, so both schedules must produce identical bits.
enum class DecodeSchedule { serial, wavefront };

struct DecompressResult {
    Tensor image;  // cropped reconstruction
    Tensor yhat;
    Tensor zhat;
};

DecompressResult decompress_stream(Model& model, const Bitstream& stream,
                                   DecodeSchedule schedule = DecodeSchedule::serial);

struct LatentInspection {
    int64_t channel = 0;               // highest-entropy channel
    std::vector<double> channel_bits;  // per-channel information content
    double total_bits = 0.0;
    // grids (1,1,h,w) for the selected channel
    Tensor latents, mu, error, sigma, normalized, bits;
};

LatentInspection inspect_latents(Model& model, const Tensor& image);

// lag-1 spatial autocorrelation of a (1,1,h,w) grid, max of |row| and |col| lags
double lag1_autocorrelation(const Tensor& grid);

}  // namespace nlc
