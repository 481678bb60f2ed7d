#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "nlc/model.hpp"

namespace nlc {

// Versioned binary snapshot of a model plus optimizer state. Parameter values
// round-trip bit-exactly, so a reloaded model reproduces forward passes
// within one build. The model hash covers the config block and parameter
// records only (optimizer state and step counter are excluded), so it
// identifies the coding behavior, not the training position.
struct Checkpoint {
    static constexpr uint8_t current_version = 1;

    ModelConfig config;
    uint64_t step = 0;
    double lambda = 0.0;  // rate-distortion weight the run was trained at
    std::vector<std::pair<std::string, Tensor>> params;
    std::vector<std::pair<std::string, Tensor>> optimizer;
};

std::vector<uint8_t> serialize_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(std::span<const uint8_t> bytes);

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

// Fingerprint of the coding-relevant region (config + named parameters).
std::array<uint8_t, 16> checkpoint_model_hash(const Checkpoint& c);
std::array<uint8_t, 16> model_hash(Model& model);

// Copies checkpoint parameter values into a model built from the same config;
// refuses name or shape mismatches.
void apply_checkpoint_params(Model& model, const Checkpoint& c);

// Convenience: capture a model's parameters (optimizer slots supplied by the
// caller, may be empty).
Checkpoint snapshot_model(Model& model, uint64_t step,
                          std::vector<std::pair<std::string, Tensor>> optimizer = {});

}  // namespace nlc
