#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "pixelcourt/datagen.hpp"

namespace pixelcourt {

void write_png(const ImagePlane& image, const std::filesystem::path& path);
void write_png(const BinaryMap& map, const std::filesystem::path& path);

/// Reads an 8-bit PNG (any channel count) as an RGB plane in [0, 1].
ImagePlane read_image(const std::filesystem::path& path);
/// Reads a grayscale PNG and thresholds at 128.
BinaryMap read_binary_map(const std::filesystem::path& path);

/// Encode/decode round trip through an 8-bit JPEG at the given quality.
ImagePlane jpeg_round_trip(const ImagePlane& image, int quality);

/// Writes a single-channel map (H x W, or 1 x H x W) with values in [0, 1] as 8-bit grayscale.
void write_heatmap(const torch::Tensor& map, const std::filesystem::path& path);
/// Same, min-max stretched to the full 8-bit range first.
void write_heatmap_normalized(const torch::Tensor& map, const std::filesystem::path& path);

/// Nearest-neighbour / area resize used when a corpus is loaded at a different resolution.
/// Patch-colored action map: `actions` is rows x cols (int64 in 0..2), painted onto height x width.
/// Colors: conservative blue, correction orange, reconstruction red.
void write_action_map(const torch::Tensor& actions, int height, int width, const std::filesystem::path& path);

ImagePlane resize_image(const ImagePlane& image, int height, int width);
BinaryMap resize_map(const BinaryMap& map, int height, int width);

torch::Tensor to_tensor(const ImagePlane& image);  // 3 x H x W, float32
torch::Tensor to_tensor(const BinaryMap& map);     // 1 x H x W, float32

struct Batch {
    torch::Tensor images;  // B x 3 x H x W
    torch::Tensor masks;   // B x 1 x H x W
    torch::Tensor edges;   // B x 1 x H x W
};

Batch make_batch(std::span<const Sample> samples);
Batch make_batch(std::span<const Sample> samples, std::span<const size_t> indices);

}  // namespace pixelcourt
