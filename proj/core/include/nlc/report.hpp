#pragma once

#include <string>
#include <vector>

#include "nlc/tensor.hpp"

namespace nlc {

// One rate-distortion point: a checkpoint evaluated over a corpus, metrics
// averaged per image. bpp_actual comes from serialized bitstream bytes;
// bpp_entropy is the model's information content for the coded segments.
struct RdPoint {
    double lambda = 0.0;
    std::string variant;
    double bpp_actual = 0.0;
    double bpp_entropy = 0.0;
    double psnr_db = 0.0;
    double msssim = 0.0;
    double msssim_db = 0.0;
    std::string model_hash;  // hex digest
    std::string note;        // nonempty when the checkpoint could not be evaluated
};

// Evaluates every checkpoint over the corpus; rows sorted by lambda
// ascending. Unreadable checkpoints become flagged rows, not failures.
std::vector<RdPoint> rd_report(const std::vector<std::string>& checkpoint_paths,
                               const std::vector<Tensor>& corpus);

std::string rd_csv(const std::vector<RdPoint>& points);
std::string rd_json(const std::vector<RdPoint>& points);

// writes the CSV to `csv_path` and a JSON mirror next to it (.json)
void write_rd_report(const std::vector<RdPoint>& points, const std::string& csv_path);

}  // namespace nlc
