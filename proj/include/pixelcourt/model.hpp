#pragma once

#include <optional>

#include <torch/torch.h>

#include "pixelcourt/config.hpp"
#include "pixelcourt/debate.hpp"
#include "pixelcourt/encoder.hpp"
#include "pixelcourt/judge.hpp"
#include "pixelcourt/losses.hpp"

namespace pixelcourt {

struct ForwardOptions {
    double gumbel_tau = 1.0;
    /// Gumbel noise source; nullopt gives the deterministic argmax used at evaluation.
    std::optional<at::Generator> generator;
};

struct ModelOutput {
    FeaturePyramid pyramid;
    StreamFeatures streams;
    DebateOutput debate;
    torch::Tensor freq;
    torch::Tensor EV;
    torch::Tensor dM;   // B x 1 x h x w
    torch::Tensor Rel;  // B x 1 x H x W
    torch::Tensor B;    // heuristic baseline
    torch::Tensor PM;   // verdict
    PatchStateTable states;
    ActionMap actions;
    torch::Tensor values;  // critic, B x N
};

/// Prosecution/defense streams over a shared encoder, the debate stage and the judge.
class PixelCourtImpl : public torch::nn::Module {
public:
    explicit PixelCourtImpl(const ModelConfig& config);

    ModelOutput forward(const torch::Tensor& image, const ForwardOptions& options = {});

    const ModelConfig& config() const { return config_; }

    Encoder encoder{nullptr};
    StreamAdapter adapter_t{nullptr}, adapter_r{nullptr};
    Debate debate{nullptr};
    EvidenceAggregator evidence{nullptr};
    DisputeHead dispute{nullptr};
    ReliabilityHead reliability{nullptr};
    PolicyMlp actor{nullptr};
    PolicyMlp critic{nullptr};
    RefineNet refine{nullptr};

private:
    ModelConfig config_;
};
TORCH_MODULE(PixelCourt);

/// Seeds the global torch RNG and builds a freshly initialized model.
PixelCourt build_model(const ModelConfig& config, uint64_t seed);

/// Every loss term for one forward pass. G and G_e are B x 1 x H x W binary maps.
LossBundle compute_losses(const ModelOutput& out, const torch::Tensor& G, const torch::Tensor& G_e,
                          const TrainConfig& config);

}  // namespace pixelcourt
