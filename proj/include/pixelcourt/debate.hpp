#pragma once

#include <torch/torch.h>

#include "pixelcourt/config.hpp"
#include "pixelcourt/encoder.hpp"

namespace pixelcourt {

/// Channel-mean squared difference, B x 1 x h x w.
torch::Tensor disagreement(const torch::Tensor& mf, const torch::Tensor& af);

/// Softmax over keys of `logits` (B x heads x Tq x Tk) after subtracting suppression * D.
/// With PenaltyBroadcast::key, column j is penalized by D_j; with ::query, row i by D_i.
/// `penalty` is B x T (T = Tq = Tk).
torch::Tensor suppressed_softmax(const torch::Tensor& logits, const torch::Tensor& penalty, double suppression,
                                 PenaltyBroadcast broadcast);

struct AttentionResult {
    torch::Tensor MF;
    torch::Tensor AF;
    torch::Tensor weights_m;  // prosecution queries over defense keys, B x heads x T x T
    torch::Tensor weights_a;  // defense queries over prosecution keys
};

/// Bidirectional cross-attention with a disagreement penalty on the logits and residual fusion.
class CrossAttentionImpl : public torch::nn::Module {
public:
    CrossAttentionImpl(int channels, int heads, double suppression, PenaltyBroadcast broadcast);

    AttentionResult forward(const torch::Tensor& mf, const torch::Tensor& af, const torch::Tensor& D);

    /// Multi-head attention of `query` tokens over `key`/`value` tokens, all B x C x h x w.
    /// Returns the attended values (B x C x h x w) and writes the weights.
    torch::Tensor attend(const torch::Tensor& query, const torch::Tensor& key, const torch::Tensor& value,
                         const torch::Tensor& D, torch::Tensor* weights) const;

    int heads() const { return heads_; }
    double suppression = 1.0;
    PenaltyBroadcast broadcast = PenaltyBroadcast::key;

    torch::nn::Conv2d m_query{nullptr}, m_key{nullptr}, m_value{nullptr};
    torch::nn::Conv2d a_query{nullptr}, a_key{nullptr}, a_value{nullptr};
    torch::nn::Conv2d m_proj{nullptr}, a_proj{nullptr};

private:
    int heads_;
};
TORCH_MODULE(CrossAttention);

struct PushPullResult {
    torch::Tensor MF_hat;
    torch::Tensor AF_hat;
    torch::Tensor alpha;  // C x h x w gate in (0, 1)
    torch::Tensor delta;  // tanh(MF - AF)
};

/// Symmetric reallocation: MF + alpha*delta, AF - alpha*delta.
class PushPullImpl : public torch::nn::Module {
public:
    explicit PushPullImpl(int channels);
    PushPullResult forward(const torch::Tensor& MF, const torch::Tensor& AF);

    torch::nn::Conv2d gate{nullptr};
};
TORCH_MODULE(PushPull);

/// ReLU(BN(Laplace(I))) pooled to stride 8.
class EdgePriorImpl : public torch::nn::Module {
public:
    EdgePriorImpl();
    torch::Tensor forward(const torch::Tensor& image);
    /// Raw per-channel Laplacian response at full resolution (replicate border).
    torch::Tensor laplacian(const torch::Tensor& image) const;

    torch::nn::BatchNorm2d norm{nullptr};

private:
    torch::Tensor kernel_;
};
TORCH_MODULE(EdgePrior);

/// Simplified CBAM: channel gate from pooled descriptors, then a 7x7 spatial gate.
class ChannelSpatialAttentionImpl : public torch::nn::Module {
public:
    explicit ChannelSpatialAttentionImpl(int channels, int reduction = 4);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d fc1{nullptr}, fc2{nullptr}, spatial{nullptr};
};
TORCH_MODULE(ChannelSpatialAttention);

/// Full-resolution residual logits from stride-8 features plus the stride-2 backbone level.
class DetailHeadImpl : public torch::nn::Module {
public:
    DetailHeadImpl(int in_channels, int low_channels);
    torch::Tensor forward(const torch::Tensor& feat, const torch::Tensor& low, at::IntArrayRef out_size);

private:
    torch::nn::Conv2d reduce{nullptr}, fuse{nullptr}, out{nullptr};
};
TORCH_MODULE(DetailHead);

struct BoundaryResult {
    torch::Tensor coarse;  // B x 1 x h x w at stride 8
    torch::Tensor E;       // B x 1 x H x W
};

class BoundaryHeadImpl : public torch::nn::Module {
public:
    BoundaryHeadImpl(int stream_channels, int low_channels);
    /// low: stride-2 backbone level; pooled internally to stride 8 for the context branch.
    BoundaryResult forward(const torch::Tensor& E_raw, const torch::Tensor& low, const torch::Tensor& stream_feat,
                           at::IntArrayRef out_size);

private:
    torch::nn::Conv2d context{nullptr}, fuse{nullptr}, out{nullptr};
    ChannelSpatialAttention refine{nullptr};
    DetailHead detail{nullptr};
};
TORCH_MODULE(BoundaryHead);

struct StreamHeadResult {
    torch::Tensor F;
    torch::Tensor P;
};

/// Gated boundary injection F = feat + Conv(feat * E) followed by the mask head.
class StreamHeadImpl : public torch::nn::Module {
public:
    StreamHeadImpl(int stream_channels, int low_channels);
    StreamHeadResult forward(const torch::Tensor& feat, const torch::Tensor& E_coarse, const torch::Tensor& low,
                             at::IntArrayRef out_size);

    torch::nn::Conv2d inject{nullptr};

private:
    torch::nn::Conv2d mask{nullptr};
    DetailHead detail{nullptr};
};
TORCH_MODULE(StreamHead);

struct StreamOutput {
    torch::Tensor F;         // C x h x w
    torch::Tensor P;         // 1 x H x W
    torch::Tensor E;         // 1 x H x W
    torch::Tensor E_coarse;  // 1 x h x w
};

struct DebateOutput {
    StreamOutput prosecution;
    StreamOutput defense;
    torch::Tensor D;
    torch::Tensor alpha;
    torch::Tensor delta;
    torch::Tensor E_raw;
};

class DebateImpl : public torch::nn::Module {
public:
    DebateImpl(const ModelConfig& config, int low_channels);

    DebateOutput forward(const torch::Tensor& image, const torch::Tensor& mf, const torch::Tensor& af,
                         const FeaturePyramid& pyramid);

    bool bypass = false;

    CrossAttention attention{nullptr};
    PushPull push_pull{nullptr};
    EdgePrior edge_prior{nullptr};
    BoundaryHead boundary_t{nullptr}, boundary_r{nullptr};
    StreamHead head_t{nullptr}, head_r{nullptr};
};
TORCH_MODULE(Debate);

}  // namespace pixelcourt
