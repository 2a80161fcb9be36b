#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "demarklab/nn/layers.hpp"

namespace dml::nn {

// Model checkpoints are a single binary container: an 8-byte magic, a little-
// endian u64 header length, a JSON header (format version, kind, config,
// config hash, seed, epoch count, loss trace, blob table), then the raw
// little-endian double blobs in table order.
inline constexpr char kCheckpointMagic[8] = {'D', 'M', 'L', 'C', 'K', 'P', 'T', '1'};
inline constexpr int kCheckpointVersion = 1;

std::string fnv1a_hex(const std::string& bytes);

struct CheckpointMeta {
    std::string kind;            // "attack" or "watermarker"
    nlohmann::json config;
    std::uint64_t seed = 0;
    int epochs = 0;
    std::vector<double> loss_trace;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta, const ParamRefs& params);

// Reads and validates the header (magic, version, config hash) without
// touching blobs; the caller builds the model from meta.config first.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

// Fills `params` (matched by name) from the container's blobs.
void read_checkpoint_params(const std::filesystem::path& path, const ParamRefs& params);

} // namespace dml::nn
