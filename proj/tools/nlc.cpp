#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlc/checkpoint.hpp"
#include "nlc/codec.hpp"
#include "nlc/errors.hpp"
#include "nlc/image.hpp"
#include "nlc/metrics.hpp"
#include "nlc/report.hpp"
#include "nlc/training.hpp"

namespace fs = std::filesystem;
using nlc::check_data;

namespace {

// exit codes: 0 success, 1 usage, 2 data error, 3 model error
constexpr int exit_usage = 1;
constexpr int exit_data = 2;
constexpr int exit_model = 3;

void echo_kv(const std::string& key, const std::string& value) {
    std::cout << "  " << key << ": " << value << "\n";
}

nlc::Model load_model(const std::string& path, nlc::Checkpoint* out_ckpt = nullptr) {
    nlc::Checkpoint ckpt = nlc::load_checkpoint(path);
    nlc::Model model(ckpt.config);
    nlc::apply_checkpoint_params(model, ckpt);
    if (out_ckpt) *out_ckpt = std::move(ckpt);
    return model;
}

int cmd_train(const std::string& corpus_dir, double lambda,
              const std::string& variant, int64_t steps, uint64_t seed,
              const std::string& out) {
    std::cout << "effective config:\n";
    echo_kv("subcommand", "train");
    echo_kv("corpus", corpus_dir);
    echo_kv("lambda", std::to_string(lambda));
    echo_kv("variant", variant);
    echo_kv("steps", std::to_string(steps));
    echo_kv("seed", std::to_string(seed));
    echo_kv("out", out);

    nlc::ModelConfig mcfg;
    mcfg.variant = nlc::variant_from_name(variant);
    mcfg.seed = seed;
    nlc::Model model(mcfg);

    nlc::TrainingConfig tcfg;
    tcfg.lambda = lambda;
    tcfg.steps = steps;
    tcfg.seed = seed;

    const auto corpus = nlc::load_image_corpus(corpus_dir);
    const std::string log_path = out + ".log.jsonl";
    std::ofstream log(log_path, std::ios::binary);
    check_data(log.good(), "train: cannot open log " + log_path);

    const nlc::TrainResult res = nlc::train(model, corpus, tcfg, &log);
    nlc::save_checkpoint(out, res.checkpoint);

    const auto& first = res.history.front();
    const auto& last = res.history.back();
    std::cout << "steps run: " << res.history.size() << "\n"
              << "first loss: " << first.loss << "\n"
              << "final loss: " << last.loss << "\n"
              << "checkpoint: " << out << "\n"
              << "log: " << log_path << "\n";
    return 0;
}

int cmd_compress(const std::string& model_path, const std::string& in,
                 const std::string& out) {
    std::cout << "effective config:\n";
    echo_kv("subcommand", "compress");
    echo_kv("model", model_path);
    echo_kv("in", in);
    echo_kv("out", out);

    nlc::Model model = load_model(model_path);
    const nlc::Tensor image = nlc::load_image(in);
    const nlc::CompressResult res = nlc::compress_image(model, image);
    nlc::write_binary_file(out, res.stream.serialize());

    const double pixels = static_cast<double>(image.shape()[2]) * image.shape()[3];
    std::cout << "bytes: " << res.stream.total_bytes() << "\n"
              << "bpp: " << 8.0 * res.stream.total_bytes() / pixels << "\n"
              << "psnr_db: " << nlc::psnr(image, res.reconstruction) << "\n"
              << "wrote: " << out << "\n";
    return 0;
}

int cmd_decompress(const std::string& model_path, const std::string& in,
                   const std::string& out) {
    std::cout << "effective config:\n";
    echo_kv("subcommand", "decompress");
    echo_kv("model", model_path);
    echo_kv("in", in);
    echo_kv("out", out);

    nlc::Model model = load_model(model_path);
    const auto bytes = nlc::read_binary_file(in);
    const nlc::Bitstream stream = nlc::Bitstream::parse(bytes);
    const nlc::DecompressResult res = nlc::decompress_stream(model, stream);
    nlc::save_image(out, res.image);
    std::cout << "wrote: " << out << "\n";
    return 0;
}

int cmd_eval(const std::string& models_dir, const std::string& corpus_dir,
             const std::string& out) {
    std::cout << "effective config:\n";
    echo_kv("subcommand", "eval");
    echo_kv("models", models_dir);
    echo_kv("corpus", corpus_dir);
    echo_kv("out", out);

    check_data(fs::is_directory(models_dir), "eval: not a directory: " + models_dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(models_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ckpt")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    check_data(!paths.empty(), "eval: no .ckpt files in " + models_dir);

    const auto corpus = nlc::load_image_corpus(corpus_dir);
    const auto points = nlc::rd_report(paths, corpus);
    nlc::write_rd_report(points, out);
    std::cout << nlc::rd_csv(points) << "wrote: " << out << "\n";
    return 0;
}

int cmd_inspect(const std::string& model_path, const std::string& in,
                const std::string& out) {
    std::cout << "effective config:\n";
    echo_kv("subcommand", "inspect");
    echo_kv("model", model_path);
    echo_kv("in", in);
    echo_kv("out", out);

    nlc::Model model = load_model(model_path);
    const nlc::Tensor image = nlc::load_image(in);
    const nlc::LatentInspection insp = nlc::inspect_latents(model, image);

    auto grid_json = [](const nlc::Tensor& t) {
        nlohmann::json rows = nlohmann::json::array();
        const int64_t h = t.shape()[2], w = t.shape()[3];
        const auto v = t.values();
        for (int64_t y = 0; y < h; ++y) {
            nlohmann::json row = nlohmann::json::array();
            for (int64_t x = 0; x < w; ++x) row.push_back(v[y * w + x]);
            rows.push_back(std::move(row));
        }
        return rows;
    };

    nlohmann::json doc{
        {"channel", insp.channel},
        {"total_bits", insp.total_bits},
        {"channel_bits", insp.channel_bits},
        {"grid_height", insp.latents.shape()[2]},
        {"grid_width", insp.latents.shape()[3]},
        {"latents", grid_json(insp.latents)},
        {"mu", grid_json(insp.mu)},
        {"error", grid_json(insp.error)},
        {"sigma", grid_json(insp.sigma)},
        {"normalized", grid_json(insp.normalized)},
        {"bits", grid_json(insp.bits)},
        {"autocorr_latents", nlc::lag1_autocorrelation(insp.latents)},
        {"autocorr_normalized", nlc::lag1_autocorrelation(insp.normalized)},
    };
    std::ofstream f(out, std::ios::binary);
    check_data(f.good(), "inspect: cannot open " + out);
    f << doc.dump(2) << "\n";
    std::cout << "channel: " << insp.channel << "\n"
              << "total_bits: " << insp.total_bits << "\n"
              << "autocorr_normalized: "
              << nlc::lag1_autocorrelation(insp.normalized) << "\n"
              << "wrote: " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learned image codec"};
    app.require_subcommand(1);

    std::string corpus_dir, variant = "combined", ckpt_out;
    double lambda = 0.01;
    int64_t steps = 2000;
    uint64_t seed = 1;
    // config handling lives on the root app: CLI11 only reads config files
    // for the top-level parser, so the train subcommand forwards unmatched
    // flags up and the file addresses its options through a [train] section
    app.set_config("--config", "",
                   "INI config supplying any flag, e.g. [train] lambda=0.01; "
                   "explicit flags win");
    auto* train = app.add_subcommand("train", "optimize a model on an image corpus");
    train->fallthrough();
    train->add_option("--corpus", corpus_dir, "directory of PPM images")->required();
    train->add_option("--lambda", lambda, "rate-distortion weight");
    train->add_option("--variant", variant,
                      "fully-factorized | scale-only | mean-scale | context-only | combined");
    train->add_option("--steps", steps, "optimization steps");
    train->add_option("--seed", seed, "seed for init, patches, and noise");
    train->add_option("--out", ckpt_out, "checkpoint output path")->required();

    std::string c_model, c_in, c_out;
    auto* compress = app.add_subcommand("compress", "image -> .nlc bitstream");
    compress->add_option("--model", c_model, "checkpoint path")->required();
    compress->add_option("--in", c_in, "input image (PPM)")->required();
    compress->add_option("--out", c_out, "output bitstream path")->required();

    std::string d_model, d_in, d_out;
    auto* decompress = app.add_subcommand("decompress", ".nlc bitstream -> image");
    decompress->add_option("--model", d_model, "checkpoint path")->required();
    decompress->add_option("--in", d_in, "input bitstream")->required();
    decompress->add_option("--out", d_out, "output image (PPM)")->required();

    std::string e_models, e_corpus, e_out;
    auto* eval = app.add_subcommand("eval", "rate-distortion report over checkpoints");
    eval->add_option("--models", e_models, "directory of .ckpt files")->required();
    eval->add_option("--corpus", e_corpus, "directory of PPM images")->required();
    eval->add_option("--out", e_out, "output CSV path (JSON mirror written too)")
        ->required();

    std::string i_model, i_in, i_out;
    auto* inspect = app.add_subcommand("inspect", "latent diagnostics for one image");
    inspect->add_option("--model", i_model, "checkpoint path")->required();
    inspect->add_option("--in", i_in, "input image (PPM)")->required();
    inspect->add_option("--out", i_out, "output JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (app.got_subcommand(train))
            return cmd_train(corpus_dir, lambda, variant, steps, seed, ckpt_out);
        if (app.got_subcommand(compress)) return cmd_compress(c_model, c_in, c_out);
        if (app.got_subcommand(decompress))
            return cmd_decompress(d_model, d_in, d_out);
        if (app.got_subcommand(eval)) return cmd_eval(e_models, e_corpus, e_out);
        if (app.got_subcommand(inspect)) return cmd_inspect(i_model, i_in, i_out);
    } catch (const nlc::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const nlc::ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return exit_model;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_data;
    }
    return exit_usage;
}
