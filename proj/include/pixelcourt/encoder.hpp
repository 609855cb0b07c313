#pragma once

#include <array>

#include <torch/torch.h>

#include "pixelcourt/config.hpp"

namespace pixelcourt {

/// Four levels at strides 2, 4, 8 and 16.
struct FeaturePyramid {
    std::array<torch::Tensor, 4> levels;

    static constexpr std::array<int, 4> strides{2, 4, 8, 16};
};

enum class Stream { prosecution, defense };

/// Adapted stride-8 inputs of the two streams (mf for prosecution, af for defense).
struct StreamFeatures {
    torch::Tensor mf;
    torch::Tensor af;
};

/// conv3x3 -> BN -> SiLU -> conv3x3 (stride 2) -> BN -> SiLU
class ConvStageImpl : public torch::nn::Module {
public:
    ConvStageImpl(int in_channels, int out_channels);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d conv1{nullptr};
    torch::nn::BatchNorm2d norm1{nullptr};
    torch::nn::Conv2d conv2{nullptr};
    torch::nn::BatchNorm2d norm2{nullptr};
};
TORCH_MODULE(ConvStage);

/// Shared multiscale encoder.
class EncoderImpl : public torch::nn::Module {
public:
    explicit EncoderImpl(const std::array<int, 4>& channels);

    /// image: B x 3 x H x W in [0, 1]; H and W must be multiples of 16.
    FeaturePyramid forward(const torch::Tensor& image);

    const std::array<int, 4>& channels() const { return channels_; }

private:
    std::array<int, 4> channels_;
    std::array<ConvStage, 4> stages_{nullptr, nullptr, nullptr, nullptr};
};
TORCH_MODULE(Encoder);

/// Per-stream 1x1 convolution over the stride-8 level.
class StreamAdapterImpl : public torch::nn::Module {
public:
    StreamAdapterImpl(int in_channels, int out_channels);
    torch::Tensor forward(const FeaturePyramid& pyramid);

    torch::nn::Conv2d conv{nullptr};
};
TORCH_MODULE(StreamAdapter);

/// Rejects image batches whose spatial size is not a multiple of 16.
void check_image_batch(const torch::Tensor& image);

}  // namespace pixelcourt
