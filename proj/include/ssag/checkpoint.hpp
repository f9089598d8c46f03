#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ssag/optimizer.hpp"

namespace ssag {

// Everything needed to resume training bit-identically: config text, model
// parameters, batch-norm running stats, optimizer moments and the noise
// stream state. Binary little-endian; doubles round-trip exactly.
struct CheckpointBlob {
    std::string config_text; // key=value lines, hashed for compatibility
    std::uint32_t epochs_completed = 0;
    std::string rng_state;
    std::vector<std::pair<std::string, std::pair<std::vector<int>, std::vector<double>>>> tensors;
    std::vector<std::pair<std::string, std::vector<double>>> buffers;
    // optimizer groups: name -> (step count, per-param moment arrays)
    struct OptGroup {
        std::uint64_t step_count = 0;
        std::vector<std::vector<double>> m;
        std::vector<std::vector<double>> v;
    };
    std::map<std::string, OptGroup> optimizers;
};

std::uint64_t fnv1a64(const std::string& text);

void checkpoint_write(const std::string& path, const CheckpointBlob& blob);
CheckpointBlob checkpoint_read(const std::string& path);

} // namespace ssag
