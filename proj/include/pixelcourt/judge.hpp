#pragma once

#include <optional>

#include <torch/torch.h>

#include "pixelcourt/config.hpp"
#include "pixelcourt/debate.hpp"

namespace pixelcourt {

inline constexpr int kNumActions = 3;  // conservative, correction, reconstruction
inline constexpr int kStateDim = 7;
inline constexpr int kFrequencyChannels = 7;
inline constexpr double kEps = 1e-6;

/// Fixed forensic filters at stride 8: |Laplacian| per RGB channel (3), |SRM residual| of the
/// grayscale image for three classic kernels (3), and the 8x8 block-DCT energy fraction outside
/// the four lowest-frequency coefficients (1).
torch::Tensor frequency_features(const torch::Tensor& image);

/// Per-block DCT high-frequency energy fraction, B x 1 x H/8 x W/8.
torch::Tensor block_dct_energy(const torch::Tensor& gray);

/// The three SRM kernels, 3 x 1 x 5 x 5.
torch::Tensor srm_kernels();

/// Per-pixel two-layer MLP over channels with a residual connection.
class MlpAdapterImpl : public torch::nn::Module {
public:
    MlpAdapterImpl(int channels, int hidden);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(MlpAdapter);

struct EvidenceInputs {
    torch::Tensor tP, rP, tE, rE;  // B x 1 x H x W
    torch::Tensor freq;            // B x 7 x h x w
    torch::Tensor tF, rF;          // B x C x h x w
};

/// EV = A2(A1(V + proj(tF)) + proj(rF)), V = conv encoder of the stacked maps and frequency cues.
class EvidenceAggregatorImpl : public torch::nn::Module {
public:
    EvidenceAggregatorImpl(int stream_channels, int evidence_channels);
    torch::Tensor forward(const EvidenceInputs& in);

    torch::nn::Conv2d enc1{nullptr}, enc2{nullptr}, proj_t{nullptr}, proj_r{nullptr};
    MlpAdapter adapter_t{nullptr}, adapter_r{nullptr};
};
TORCH_MODULE(EvidenceAggregator);

/// Two 3x3 convolutions, a 1x1 convolution and a sigmoid, at stride 8.
class DisputeHeadImpl : public torch::nn::Module {
public:
    explicit DisputeHeadImpl(int evidence_channels);
    torch::Tensor forward(const torch::Tensor& EV);

private:
    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, out{nullptr};
};
TORCH_MODULE(DisputeHead);

/// 3x3 conv, 1x1 conv, sigmoid, bilinearly upsampled (logits) to the image size.
class ReliabilityHeadImpl : public torch::nn::Module {
public:
    explicit ReliabilityHeadImpl(int evidence_channels);
    torch::Tensor forward(const torch::Tensor& EV, at::IntArrayRef out_size);

private:
    torch::nn::Conv2d conv1{nullptr}, out{nullptr};
};
TORCH_MODULE(ReliabilityHead);

struct PatchGrid {
    int rows = 8;
    int cols = 8;
    int count() const { return rows * cols; }
};

/// Observation vectors s_i = [mean, std, max, entropy, dispute, gap, uncertainty], B x N x 7.
struct PatchStateTable {
    torch::Tensor states;
    PatchGrid grid;
};

/// Binary entropy with probabilities clamped to [1e-6, 1 - 1e-6], natural log.
torch::Tensor binary_entropy(const torch::Tensor& p);

/// Shannon entropy of a 16-bin histogram over [min, max] of `values`, divided by ln 16.
double histogram_entropy(const torch::Tensor& values, int bins = 16);

/// Patch statistics. The grid must divide both the stride-8 map and the image size.
/// Returned states carry no gradient.
PatchStateTable patch_states(const torch::Tensor& EV, const torch::Tensor& dM, const torch::Tensor& tP,
                             const torch::Tensor& rP, PatchGrid grid);

/// Two-layer MLP applied row-wise to the state table.
class PolicyMlpImpl : public torch::nn::Module {
public:
    PolicyMlpImpl(int hidden, int outputs);
    torch::Tensor forward(const torch::Tensor& states);

    torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(PolicyMlp);

struct ActionMap {
    torch::Tensor logits;     // B x N x 3
    torch::Tensor y_soft;     // B x N x 3
    torch::Tensor y_hard;     // B x N x 3 one-hot, no gradient
    torch::Tensor ac;         // straight-through: forward y_hard, gradient of y_soft
    torch::Tensor actions;    // B x N int64
    torch::Tensor log_probs;  // log pi(a_i | s_i), B x N
};

/// Gumbel-softmax sampling with a straight-through one-hot. `generator == nullopt` disables the
/// noise (evaluation). Ties in argmax resolve to the lowest index.
ActionMap actor_sample(const torch::Tensor& logits, double tau, std::optional<at::Generator> generator);

/// Gumbel(0, 1) noise via -ln(-ln(U)).
torch::Tensor gumbel_noise(at::IntArrayRef shape, const at::TensorOptions& options, at::Generator generator);

/// Constant action field for a fixed action index.
ActionMap fixed_actions(int64_t batch, int64_t patches, int action, const at::TensorOptions& options);

/// Patch-constant spatialization of a B x N x K table onto a B x K x h x w grid.
torch::Tensor spatialize(const torch::Tensor& table, PatchGrid grid, int64_t height, int64_t width);

/// max(tP, 1 - rP)
torch::Tensor baseline(const torch::Tensor& tP, const torch::Tensor& rP);

/// Per-image soft IoU (B values): sum(p*g) / (sum p + sum g - sum(p*g) + 1e-6).
torch::Tensor soft_iou(const torch::Tensor& pred, const torch::Tensor& gt);

/// Per-image reward soft_iou(PM, G) - soft_iou(B, G), detached.
torch::Tensor reward(const torch::Tensor& PM, const torch::Tensor& B, const torch::Tensor& G);

/// Two-down/two-up U-shaped refinement network conditioned on the action field.
class RefineNetImpl : public torch::nn::Module {
public:
    RefineNetImpl(int in_channels, int low_channels);
    /// Returns the verdict PM in [0, 1] at `out_size`.
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& low, at::IntArrayRef out_size);

private:
    torch::nn::Conv2d enc1a{nullptr}, enc1b{nullptr}, enc2{nullptr}, mid{nullptr}, dec2{nullptr}, dec1{nullptr},
        out{nullptr};
    DetailHead detail{nullptr};
};
TORCH_MODULE(RefineNet);

}  // namespace pixelcourt
