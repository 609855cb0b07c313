#include "pixelcourt/debate.hpp"

#include <cmath>
#include <stdexcept>

namespace pixelcourt {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

nn::Conv2d conv1x1(int in, int out, bool bias = true) { return nn::Conv2d(nn::Conv2dOptions(in, out, 1).bias(bias)); }

nn::Conv2d conv3x3(int in, int out) { return nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1)); }

torch::Tensor upsample(const torch::Tensor& x, at::IntArrayRef size) {
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>(size.begin(), size.end()))
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
}

// B x C x h x w -> B x heads x (h*w) x d
torch::Tensor to_tokens(const torch::Tensor& x, int heads) {
    const auto B = x.size(0);
    const auto C = x.size(1);
    return x.reshape({B, heads, C / heads, x.size(2) * x.size(3)}).transpose(2, 3);
}

}  // namespace

torch::Tensor disagreement(const torch::Tensor& mf, const torch::Tensor& af) {
    if (mf.sizes() != af.sizes()) {
        throw std::invalid_argument("disagreement: mf and af shapes differ");
    }
    return (mf - af).pow(2).mean(1, /*keepdim=*/true);
}

torch::Tensor suppressed_softmax(const torch::Tensor& logits, const torch::Tensor& penalty, double suppression,
                                 PenaltyBroadcast broadcast) {
    const auto B = logits.size(0);
    const auto T = penalty.size(1);
    const auto shaped = broadcast == PenaltyBroadcast::key ? penalty.reshape({B, 1, 1, T}) : penalty.reshape({B, 1, T, 1});
    return torch::softmax(logits - suppression * shaped, -1);
}

CrossAttentionImpl::CrossAttentionImpl(int channels, int heads, double suppression_, PenaltyBroadcast broadcast_)
    : suppression(suppression_), broadcast(broadcast_), heads_(heads) {
    if (heads <= 0 || channels % heads != 0) {
        throw std::invalid_argument("cross-attention: channels must be divisible by heads");
    }
    if (!(suppression_ >= 0.0)) {
        throw std::invalid_argument("cross-attention: suppression must be >= 0");
    }
    m_query = register_module("m_query", conv1x1(channels, channels));
    m_key = register_module("m_key", conv1x1(channels, channels));
    m_value = register_module("m_value", conv1x1(channels, channels));
    a_query = register_module("a_query", conv1x1(channels, channels));
    a_key = register_module("a_key", conv1x1(channels, channels));
    a_value = register_module("a_value", conv1x1(channels, channels));
    m_proj = register_module("m_proj", conv1x1(channels, channels));
    a_proj = register_module("a_proj", conv1x1(channels, channels));
}

torch::Tensor CrossAttentionImpl::attend(const torch::Tensor& query, const torch::Tensor& key,
                                         const torch::Tensor& value, const torch::Tensor& D,
                                         torch::Tensor* weights) const {
    const auto B = query.size(0);
    const auto C = query.size(1);
    const auto h = query.size(2);
    const auto w = query.size(3);
    const double d = static_cast<double>(C / heads_);
    auto q = to_tokens(query, heads_);
    auto k = to_tokens(key, heads_);
    auto v = to_tokens(value, heads_);
    auto logits = torch::matmul(q, k.transpose(2, 3)) / std::sqrt(d);
    auto attn = suppressed_softmax(logits, D.reshape({B, h * w}), suppression, broadcast);
    if (weights != nullptr) {
        *weights = attn;
    }
    return torch::matmul(attn, v).transpose(2, 3).reshape({B, C, h, w});
}

AttentionResult CrossAttentionImpl::forward(const torch::Tensor& mf, const torch::Tensor& af, const torch::Tensor& D) {
    if (mf.sizes() != af.sizes()) {
        throw std::invalid_argument("cross-attention: mf and af shapes differ");
    }
    AttentionResult out;
    auto SM = attend(m_query(mf), a_key(af), a_value(af), D, &out.weights_m);
    auto SA = attend(a_query(af), m_key(mf), m_value(mf), D, &out.weights_a);
    out.MF = mf + m_proj(SM);
    out.AF = af + a_proj(SA);
    return out;
}

PushPullImpl::PushPullImpl(int channels)
    : gate(nn::Conv2dOptions(2 * channels, channels, 3).padding(1)) {
    register_module("gate", gate);
}

PushPullResult PushPullImpl::forward(const torch::Tensor& MF, const torch::Tensor& AF) {
    if (MF.sizes() != AF.sizes()) {
        throw std::invalid_argument("push-pull: shapes differ");
    }
    PushPullResult out;
    out.delta = torch::tanh(MF - AF);
    out.alpha = torch::sigmoid(gate(torch::cat({MF, AF}, 1)));
    const auto step = out.alpha * out.delta;
    out.MF_hat = MF + step;
    out.AF_hat = AF - step;
    return out;
}

EdgePriorImpl::EdgePriorImpl() : norm(3) {
    register_module("norm", norm);
    auto k = torch::tensor({0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0}, torch::kFloat32).reshape({1, 1, 3, 3});
    kernel_ = register_buffer("laplace", k.repeat({3, 1, 1, 1}));
}

torch::Tensor EdgePriorImpl::laplacian(const torch::Tensor& image) const {
    auto padded = F::pad(image, F::PadFuncOptions({1, 1, 1, 1}).mode(torch::kReplicate));
    return F::conv2d(padded, kernel_.to(image.dtype()), F::Conv2dFuncOptions().groups(3));
}

torch::Tensor EdgePriorImpl::forward(const torch::Tensor& image) {
    auto e = torch::relu(norm(laplacian(image)));
    return F::avg_pool2d(e, F::AvgPool2dFuncOptions(8));
}

ChannelSpatialAttentionImpl::ChannelSpatialAttentionImpl(int channels, int reduction) {
    const int hidden = std::max(1, channels / reduction);
    fc1 = register_module("fc1", conv1x1(channels, hidden));
    fc2 = register_module("fc2", conv1x1(hidden, channels));
    spatial = register_module("spatial", nn::Conv2d(nn::Conv2dOptions(2, 1, 7).padding(3)));
}

torch::Tensor ChannelSpatialAttentionImpl::forward(const torch::Tensor& x) {
    auto avg = x.mean({2, 3}, true);
    auto mx = x.amax({2, 3}, true);
    auto channel_gate = torch::sigmoid(fc2(torch::silu(fc1(avg))) + fc2(torch::silu(fc1(mx))));
    auto y = x * channel_gate;
    auto desc = torch::cat({y.mean(1, true), y.amax(1, true)}, 1);
    return y * torch::sigmoid(spatial(desc));
}

DetailHeadImpl::DetailHeadImpl(int in_channels, int low_channels) {
    reduce = register_module("reduce", conv1x1(in_channels, 8));
    fuse = register_module("fuse", conv3x3(8 + low_channels, 16));
    out = register_module("out", conv1x1(16, 1));
}

torch::Tensor DetailHeadImpl::forward(const torch::Tensor& feat, const torch::Tensor& low, at::IntArrayRef out_size) {
    auto x = upsample(reduce(feat), low.sizes().slice(2));
    x = torch::silu(fuse(torch::cat({x, low}, 1)));
    return upsample(out(x), out_size);
}

BoundaryHeadImpl::BoundaryHeadImpl(int stream_channels, int low_channels) {
    context = register_module("context", conv1x1(low_channels + stream_channels, 32));
    fuse = register_module("fuse", conv1x1(3 + 32, 16));
    refine = register_module("refine", ChannelSpatialAttention(16));
    out = register_module("out", conv1x1(16, 1));
    detail = register_module("detail", DetailHead(16, low_channels));
}

BoundaryResult BoundaryHeadImpl::forward(const torch::Tensor& E_raw, const torch::Tensor& low,
                                         const torch::Tensor& stream_feat, at::IntArrayRef out_size) {
    const auto coarse_size = stream_feat.sizes().slice(2);
    auto low8 = F::adaptive_avg_pool2d(low, F::AdaptiveAvgPool2dFuncOptions(
                                                std::vector<int64_t>(coarse_size.begin(), coarse_size.end())));
    auto ctx = context(torch::cat({low8, stream_feat}, 1));
    auto x = refine(fuse(torch::cat({E_raw, ctx}, 1)));
    auto logit = out(x);
    BoundaryResult result;
    result.coarse = torch::sigmoid(logit);
    result.E = torch::sigmoid(upsample(logit, out_size) + detail(x, low, out_size));
    return result;
}

StreamHeadImpl::StreamHeadImpl(int stream_channels, int low_channels) {
    inject = register_module("inject", conv3x3(stream_channels, stream_channels));
    torch::NoGradGuard guard;
    inject->weight.zero_();
    inject->bias.zero_();
    mask = register_module("mask", conv1x1(stream_channels, 1));
    detail = register_module("detail", DetailHead(stream_channels, low_channels));
}

StreamHeadResult StreamHeadImpl::forward(const torch::Tensor& feat, const torch::Tensor& E_coarse,
                                         const torch::Tensor& low, at::IntArrayRef out_size) {
    StreamHeadResult result;
    result.F = feat + inject(feat * E_coarse);
    result.P = torch::sigmoid(upsample(mask(result.F), out_size) + detail(result.F, low, out_size));
    return result;
}

DebateImpl::DebateImpl(const ModelConfig& config, int low_channels) : bypass(config.bypass_debate) {
    const int C = config.stream_channels;
    attention = register_module("attention", CrossAttention(C, config.heads, config.suppression, config.broadcast));
    push_pull = register_module("push_pull", PushPull(C));
    edge_prior = register_module("edge_prior", EdgePrior());
    boundary_t = register_module("boundary_t", BoundaryHead(C, low_channels));
    boundary_r = register_module("boundary_r", BoundaryHead(C, low_channels));
    head_t = register_module("head_t", StreamHead(C, low_channels));
    head_r = register_module("head_r", StreamHead(C, low_channels));
}

DebateOutput DebateImpl::forward(const torch::Tensor& image, const torch::Tensor& mf, const torch::Tensor& af,
                                 const FeaturePyramid& pyramid) {
    DebateOutput out;
    out.D = disagreement(mf, af);
    torch::Tensor MF_hat = mf;
    torch::Tensor AF_hat = af;
    if (!bypass) {
        auto attn = attention(mf, af, out.D);
        auto pp = push_pull(attn.MF, attn.AF);
        MF_hat = pp.MF_hat;
        AF_hat = pp.AF_hat;
        out.alpha = pp.alpha;
        out.delta = pp.delta;
    } else {
        out.alpha = torch::zeros_like(mf);
        out.delta = torch::zeros_like(mf);
    }

    const auto out_size = image.sizes().slice(2);
    const auto& low = pyramid.levels[0];
    out.E_raw = edge_prior(image);

    auto bt = boundary_t(out.E_raw, low, MF_hat, out_size);
    auto br = boundary_r(out.E_raw, low, AF_hat, out_size);
    auto st = head_t(MF_hat, bt.coarse, low, out_size);
    auto sr = head_r(AF_hat, br.coarse, low, out_size);
    out.prosecution = {st.F, st.P, bt.E, bt.coarse};
    out.defense = {sr.F, sr.P, br.E, br.coarse};
    return out;
}

}  // namespace pixelcourt
