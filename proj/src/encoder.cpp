#include "pixelcourt/encoder.hpp"

#include <stdexcept>
#include <string>

namespace pixelcourt {

namespace nn = torch::nn;

void check_image_batch(const torch::Tensor& image) {
    if (image.dim() != 4 || image.size(1) != 3) {
        throw std::invalid_argument("expected an image batch of shape B x 3 x H x W");
    }
    if (image.size(2) % 16 != 0 || image.size(3) % 16 != 0 || image.size(2) < 16 || image.size(3) < 16) {
        throw std::invalid_argument("image dims must be multiples of 16, got " + std::to_string(image.size(2)) + "x" +
                                    std::to_string(image.size(3)));
    }
}

ConvStageImpl::ConvStageImpl(int in_channels, int out_channels)
    : conv1(nn::Conv2dOptions(in_channels, out_channels, 3).padding(1).bias(false)),
      norm1(out_channels),
      conv2(nn::Conv2dOptions(out_channels, out_channels, 3).stride(2).padding(1).bias(false)),
      norm2(out_channels) {
    register_module("conv1", conv1);
    register_module("norm1", norm1);
    register_module("conv2", conv2);
    register_module("norm2", norm2);
}

torch::Tensor ConvStageImpl::forward(const torch::Tensor& x) {
    auto h = torch::silu(norm1(conv1(x)));
    return torch::silu(norm2(conv2(h)));
}

EncoderImpl::EncoderImpl(const std::array<int, 4>& channels) : channels_(channels) {
    int in = 3;
    for (size_t i = 0; i < stages_.size(); ++i) {
        stages_[i] = register_module("stage" + std::to_string(i + 1), ConvStage(in, channels[i]));
        in = channels[i];
    }
}

FeaturePyramid EncoderImpl::forward(const torch::Tensor& image) {
    check_image_batch(image);
    FeaturePyramid pyramid;
    auto x = image - 0.5;
    for (size_t i = 0; i < stages_.size(); ++i) {
        x = stages_[i]->forward(x);
        pyramid.levels[i] = x;
    }
    return pyramid;
}

StreamAdapterImpl::StreamAdapterImpl(int in_channels, int out_channels)
    : conv(nn::Conv2dOptions(in_channels, out_channels, 1)) {
    register_module("conv", conv);
}

torch::Tensor StreamAdapterImpl::forward(const FeaturePyramid& pyramid) { return conv(pyramid.levels[2]); }

}  // namespace pixelcourt
