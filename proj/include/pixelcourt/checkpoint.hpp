#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "pixelcourt/config.hpp"
#include "pixelcourt/model.hpp"

namespace pixelcourt {

inline constexpr uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by load_state when the checkpoint lacks tensors the model needs.
class MissingTensorsError : public CheckpointError {
public:
    explicit MissingTensorsError(std::vector<std::string> names);
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
};

struct CheckpointData {
    uint32_t version = kCheckpointVersion;
    std::string config_text;
    std::map<std::string, torch::Tensor> tensors;
};

/// Layout (little-endian): "PXCT" | u32 version | u32 len + config text | u32 count |
/// per tensor: u32 len + name, u8 dtype, u32 ndim, i64 dims[ndim], raw bytes | u32 crc32 of everything before.
void write_checkpoint(const CheckpointData& data, const std::filesystem::path& path);
CheckpointData read_checkpoint(const std::filesystem::path& path);

/// All parameters and buffers by qualified name.
std::map<std::string, torch::Tensor> state_of(const torch::nn::Module& module);

/// Copies tensors into the module. Shape or dtype mismatches and missing names are errors;
/// unexpected extra names are ignored.
void load_state(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& tensors);

void save_checkpoint(const PixelCourt& model, const TrainConfig& config, const std::filesystem::path& path);

struct LoadedModel {
    PixelCourt model{nullptr};
    TrainConfig config;
};

/// Rebuilds the model from the embedded config and loads its tensors. Returns it in eval mode.
LoadedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace pixelcourt
