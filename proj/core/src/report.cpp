#include "nlc/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nlc/checkpoint.hpp"
#include "nlc/codec.hpp"
#include "nlc/errors.hpp"
#include "nlc/hash.hpp"
#include "nlc/metrics.hpp"

namespace nlc {

namespace {

std::string hex_digest(const std::array<uint8_t, 16>& d) {
    static const char* hexd = "0123456789abcdef";
    std::string s;
    s.reserve(32);
    for (uint8_t b : d) {
        s.push_back(hexd[b >> 4]);
        s.push_back(hexd[b & 15]);
    }
    return s;
}

RdPoint evaluate_checkpoint(const std::string& path,
                            const std::vector<Tensor>& corpus) {
    RdPoint pt;
    Checkpoint ckpt;
    try {
        ckpt = load_checkpoint(path);
    } catch (const ModelError& e) {
        pt.note = std::string(e.what());
        return pt;
    }
    pt.lambda = ckpt.lambda;
    pt.variant = variant_name(ckpt.config.variant);
    pt.model_hash = hex_digest(checkpoint_model_hash(ckpt));

    Model model(ckpt.config);
    try {
        apply_checkpoint_params(model, ckpt);
    } catch (const ModelError& e) {
        pt.note = std::string(e.what());
        return pt;
    }

    double bpp_sum = 0.0, ent_sum = 0.0, psnr_sum = 0.0, ms_sum = 0.0;
    for (const Tensor& img : corpus) {
        const CompressResult res = compress_image(model, img);
        const double pixels =
            static_cast<double>(img.shape()[2]) * img.shape()[3];
        bpp_sum += 8.0 * res.stream.total_bytes() / pixels;
        ent_sum += (res.entropy_bits_latent + res.entropy_bits_hyper) / pixels;
        psnr_sum += psnr(img, res.reconstruction);
        ms_sum += ms_ssim(img, res.reconstruction);
    }
    const double n = static_cast<double>(corpus.size());
    pt.bpp_actual = bpp_sum / n;
    pt.bpp_entropy = ent_sum / n;
    pt.psnr_db = psnr_sum / n;
    pt.msssim = ms_sum / n;
    pt.msssim_db = ms_ssim_db(pt.msssim);
    return pt;
}

}  // namespace

std::vector<RdPoint> rd_report(const std::vector<std::string>& checkpoint_paths,
                               const std::vector<Tensor>& corpus) {
    check_arg(!checkpoint_paths.empty(), "rd_report: no checkpoints");
    check_arg(!corpus.empty(), "rd_report: empty corpus");
    std::vector<RdPoint> points;
    points.reserve(checkpoint_paths.size());
    for (const auto& path : checkpoint_paths)
        points.push_back(evaluate_checkpoint(path, corpus));
    std::stable_sort(points.begin(), points.end(),
                     [](const RdPoint& a, const RdPoint& b) {
                         return a.lambda < b.lambda;
                     });
    return points;
}

std::string rd_csv(const std::vector<RdPoint>& points) {
    std::ostringstream out;
    out.precision(10);
    out << "lambda,variant,bpp_actual,bpp_entropy,psnr_db,msssim,msssim_db\n";
    for (const auto& p : points)
        out << p.lambda << ',' << p.variant << ',' << p.bpp_actual << ','
            << p.bpp_entropy << ',' << p.psnr_db << ',' << p.msssim << ','
            << p.msssim_db << '\n';
    return out.str();
}

std::string rd_json(const std::vector<RdPoint>& points) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : points) {
        nlohmann::json row{{"lambda", p.lambda},
                           {"variant", p.variant},
                           {"bpp_actual", p.bpp_actual},
                           {"bpp_entropy", p.bpp_entropy},
                           {"psnr_db", p.psnr_db},
                           {"msssim", p.msssim},
                           {"msssim_db", p.msssim_db},
                           {"model_hash", p.model_hash}};
        if (!p.note.empty()) row["note"] = p.note;
        rows.push_back(std::move(row));
    }
    return rows.dump(2) + "\n";
}

void write_rd_report(const std::vector<RdPoint>& points,
                     const std::string& csv_path) {
    {
        std::ofstream f(csv_path, std::ios::binary);
        check_data(f.good(), "rd_report: cannot open " + csv_path);
        f << rd_csv(points);
    }
    std::string json_path = csv_path;
    const size_t dot = json_path.rfind('.');
    if (dot != std::string::npos) json_path.resize(dot);
    json_path += ".json";
    std::ofstream f(json_path, std::ios::binary);
    check_data(f.good(), "rd_report: cannot open " + json_path);
    f << rd_json(points);
}

}  // namespace nlc
