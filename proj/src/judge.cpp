#include "pixelcourt/judge.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pixelcourt {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

nn::Conv2d conv1x1(int in, int out, bool bias = true) { return nn::Conv2d(nn::Conv2dOptions(in, out, 1).bias(bias)); }

nn::Conv2d conv3x3(int in, int out, bool bias = true) {
    return nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1).bias(bias));
}

torch::Tensor resize_to(const torch::Tensor& x, at::IntArrayRef size) {
    std::vector<int64_t> target(size.begin(), size.end());
    if (x.size(2) > target[0]) {
        return F::adaptive_avg_pool2d(x, F::AdaptiveAvgPool2dFuncOptions(target));
    }
    if (x.size(2) == target[0] && x.size(3) == target[1]) {
        return x;
    }
    return F::interpolate(x, F::InterpolateFuncOptions().size(target).mode(torch::kBilinear).align_corners(false));
}

torch::Tensor avg_pool_half(const torch::Tensor& x) {
    return F::avg_pool2d(x, F::AvgPool2dFuncOptions(2).ceil_mode(true));
}

// Orthonormal DCT-II basis, rows are frequencies.
torch::Tensor dct_matrix(int n, const at::TensorOptions& options) {
    auto m = torch::empty({n, n}, torch::kFloat64);
    auto acc = m.accessor<double, 2>();
    for (int k = 0; k < n; ++k) {
        const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int x = 0; x < n; ++x) {
            acc[k][x] = scale * std::cos(std::numbers::pi * (2 * x + 1) * k / (2.0 * n));
        }
    }
    return m.to(options);
}

torch::Tensor replicate_pad(const torch::Tensor& x, int64_t p) {
    return F::pad(x, F::PadFuncOptions({p, p, p, p}).mode(torch::kReplicate));
}

void check_grid(int64_t h, int64_t w, PatchGrid grid, const char* what) {
    if (grid.rows <= 0 || grid.cols <= 0 || h % grid.rows != 0 || w % grid.cols != 0) {
        throw std::invalid_argument(std::string("patch grid ") + std::to_string(grid.rows) + "x" +
                                    std::to_string(grid.cols) + " does not divide " + what + " " + std::to_string(h) +
                                    "x" + std::to_string(w));
    }
}

// B x K x h x w -> B x N x (K * ph * pw), patches in row-major grid order.
torch::Tensor patch_values(const torch::Tensor& x, PatchGrid grid) {
    const auto B = x.size(0);
    const auto K = x.size(1);
    const auto ph = x.size(2) / grid.rows;
    const auto pw = x.size(3) / grid.cols;
    return x.reshape({B, K, grid.rows, ph, grid.cols, pw}).permute({0, 2, 4, 1, 3, 5}).reshape({B, grid.count(), -1});
}

}  // namespace

torch::Tensor srm_kernels() {
    // Classic SRM residual kernels (second-order "spam", KV 5x5, first-order horizontal line).
    const double k1[25] = {0, 0, 0, 0, 0, 0, -1, 2, -1, 0, 0, 2, -4, 2, 0, 0, -1, 2, -1, 0, 0, 0, 0, 0, 0};
    const double k2[25] = {-1, 2, -2, 2, -1, 2, -6, 8, -6, 2, -2, 8, -12, 8, -2, 2, -6, 8, -6, 2, -1, 2, -2, 2, -1};
    const double k3[25] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, -2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    auto out = torch::empty({3, 1, 5, 5}, torch::kFloat64);
    auto acc = out.accessor<double, 4>();
    for (int i = 0; i < 25; ++i) {
        acc[0][0][i / 5][i % 5] = k1[i] / 4.0;
        acc[1][0][i / 5][i % 5] = k2[i] / 12.0;
        acc[2][0][i / 5][i % 5] = k3[i] / 2.0;
    }
    return out;
}

torch::Tensor block_dct_energy(const torch::Tensor& gray) {
    const auto B = gray.size(0);
    const auto H = gray.size(2);
    const auto W = gray.size(3);
    if (H % 8 != 0 || W % 8 != 0) {
        throw std::invalid_argument("block DCT needs dims divisible by 8");
    }
    const auto C = dct_matrix(8, gray.options());
    // level shift to mid-gray as in JPEG, so a flat block carries only DC energy
    auto blocks = (gray - 0.5).reshape({B, H / 8, 8, W / 8, 8}).permute({0, 1, 3, 2, 4});
    auto coef = torch::matmul(torch::matmul(C, blocks), C.t());
    auto energy = coef.pow(2);
    auto total = energy.sum({-2, -1});
    auto low = energy.narrow(-2, 0, 2).narrow(-1, 0, 2).sum({-2, -1});
    auto frac = (total - low).clamp_min(0.0) / (total + kEps);
    return frac.unsqueeze(1);
}

torch::Tensor frequency_features(const torch::Tensor& image) {
    if (image.dim() != 4 || image.size(1) != 3 || image.size(2) % 8 != 0 || image.size(3) % 8 != 0) {
        throw std::invalid_argument("frequency_features: expected B x 3 x H x W with H, W divisible by 8");
    }
    torch::NoGradGuard guard;
    const auto opts = image.options();
    auto lap_k = torch::tensor({0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0}, opts).reshape({1, 1, 3, 3}).repeat({3, 1, 1, 1});
    auto lap = F::conv2d(replicate_pad(image, 1), lap_k, F::Conv2dFuncOptions().groups(3)).abs();

    auto weights = torch::tensor({0.299, 0.587, 0.114}, opts).reshape({1, 3, 1, 1});
    auto gray = (image * weights).sum(1, true);
    auto srm = F::conv2d(replicate_pad(gray, 2), srm_kernels().to(opts)).abs();

    auto pool = F::AvgPool2dFuncOptions(8);
    return torch::cat({F::avg_pool2d(lap, pool), F::avg_pool2d(srm, pool), block_dct_energy(gray)}, 1);
}

MlpAdapterImpl::MlpAdapterImpl(int channels, int hidden) {
    fc1 = register_module("fc1", conv1x1(channels, hidden));
    fc2 = register_module("fc2", conv1x1(hidden, channels));
}

torch::Tensor MlpAdapterImpl::forward(const torch::Tensor& x) { return x + fc2(torch::gelu(fc1(x))); }

EvidenceAggregatorImpl::EvidenceAggregatorImpl(int stream_channels, int evidence_channels) {
    const int in = 4 + kFrequencyChannels;
    enc1 = register_module("enc1", conv3x3(in, evidence_channels, false));
    enc2 = register_module("enc2", conv3x3(evidence_channels, evidence_channels, false));
    proj_t = register_module("proj_t", conv1x1(stream_channels, evidence_channels, false));
    proj_r = register_module("proj_r", conv1x1(stream_channels, evidence_channels, false));
    adapter_t = register_module("adapter_t", MlpAdapter(evidence_channels, 2 * evidence_channels));
    adapter_r = register_module("adapter_r", MlpAdapter(evidence_channels, 2 * evidence_channels));
}

torch::Tensor EvidenceAggregatorImpl::forward(const EvidenceInputs& in) {
    const auto size = in.freq.sizes().slice(2);
    if (in.tF.sizes().slice(2) != size || in.rF.sizes().slice(2) != size || in.tP.sizes() != in.rP.sizes() ||
        in.tE.sizes() != in.rE.sizes() || in.tP.sizes() != in.tE.sizes()) {
        throw std::invalid_argument("evidence aggregation: inconsistent input shapes");
    }
    auto maps = torch::cat({resize_to(in.tP, size), resize_to(in.rP, size), resize_to(in.tE, size),
                            resize_to(in.rE, size), in.freq},
                           1);
    auto V = enc2(torch::gelu(enc1(maps)));
    return adapter_r(adapter_t(V + proj_t(in.tF)) + proj_r(in.rF));
}

DisputeHeadImpl::DisputeHeadImpl(int evidence_channels) {
    conv1 = register_module("conv1", conv3x3(evidence_channels, 32));
    conv2 = register_module("conv2", conv3x3(32, 32));
    out = register_module("out", conv1x1(32, 1));
}

torch::Tensor DisputeHeadImpl::forward(const torch::Tensor& EV) {
    return torch::sigmoid(out(torch::silu(conv2(torch::silu(conv1(EV))))));
}

ReliabilityHeadImpl::ReliabilityHeadImpl(int evidence_channels) {
    conv1 = register_module("conv1", conv3x3(evidence_channels, 32));
    out = register_module("out", conv1x1(32, 1));
}

torch::Tensor ReliabilityHeadImpl::forward(const torch::Tensor& EV, at::IntArrayRef out_size) {
    auto logit = out(torch::silu(conv1(EV)));
    return torch::sigmoid(F::interpolate(logit, F::InterpolateFuncOptions()
                                                    .size(std::vector<int64_t>(out_size.begin(), out_size.end()))
                                                    .mode(torch::kBilinear)
                                                    .align_corners(false)));
}

torch::Tensor binary_entropy(const torch::Tensor& p) {
    auto q = p.clamp(kEps, 1.0 - kEps);
    return -(q * torch::log(q) + (1.0 - q) * torch::log(1.0 - q));
}

double histogram_entropy(const torch::Tensor& values, int bins) {
    auto v = values.detach().to(torch::kFloat64).flatten().contiguous();
    const auto n = v.numel();
    if (n == 0) {
        return 0.0;
    }
    const double* data = v.data_ptr<double>();
    double lo = data[0];
    double hi = data[0];
    for (int64_t i = 0; i < n; ++i) {
        if (!std::isfinite(data[i])) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        lo = std::min(lo, data[i]);
        hi = std::max(hi, data[i]);
    }
    if (hi - lo <= 1e-12) {
        return 0.0;
    }
    std::vector<int64_t> counts(bins, 0);
    for (int64_t i = 0; i < n; ++i) {
        int b = static_cast<int>(std::floor((data[i] - lo) / (hi - lo) * bins));
        counts[std::clamp(b, 0, bins - 1)] += 1;
    }
    double h = 0.0;
    for (auto c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log(p);
        }
    }
    return h / std::log(static_cast<double>(bins));
}

PatchStateTable patch_states(const torch::Tensor& EV, const torch::Tensor& dM, const torch::Tensor& tP,
                             const torch::Tensor& rP, PatchGrid grid) {
    check_grid(EV.size(2), EV.size(3), grid, "feature map");
    check_grid(tP.size(2), tP.size(3), grid, "image");
    if (dM.sizes().slice(2) != EV.sizes().slice(2) || tP.sizes() != rP.sizes()) {
        throw std::invalid_argument("patch_states: inconsistent input shapes");
    }
    torch::NoGradGuard guard;
    constexpr int kBins = 16;

    auto ev = patch_values(EV.detach(), grid);  // B x N x K
    auto mu = ev.mean(-1);
    auto sigma = ev.std(-1, /*unbiased=*/false);
    auto mx = std::get<0>(ev.max(-1));
    auto mn = std::get<0>(ev.min(-1));

    auto range = (mx - mn).unsqueeze(-1);
    auto safe_range = torch::where(range > 1e-12, range, torch::ones_like(range));
    // NaN evidence would give garbage indices; the NaN still reaches the loss through the other statistics.
    auto idx = ((ev - mn.unsqueeze(-1)) / safe_range * kBins).floor().nan_to_num(0.0).clamp(0, kBins - 1).to(torch::kLong);
    auto counts = torch::zeros({ev.size(0), ev.size(1), kBins}, ev.options());
    counts.scatter_add_(-1, idx, torch::ones_like(ev));
    auto p = counts / static_cast<double>(ev.size(-1));
    auto plogp = torch::where(p > 0, p * torch::log(p.clamp_min(1e-300)), torch::zeros_like(p));
    auto entropy = -plogp.sum(-1) / std::log(static_cast<double>(kBins));
    entropy = torch::where(range.squeeze(-1) > 1e-12, entropy, torch::zeros_like(entropy));

    auto dispute = patch_values(dM.detach(), grid).mean(-1);
    auto gap = patch_values((tP.detach() - (1.0 - rP.detach())).abs(), grid).mean(-1);
    auto uncertainty = patch_values(binary_entropy(tP.detach()) + binary_entropy(1.0 - rP.detach()), grid).mean(-1);

    return {torch::stack({mu, sigma, mx, entropy, dispute, gap, uncertainty}, -1), grid};
}

PolicyMlpImpl::PolicyMlpImpl(int hidden, int outputs) {
    fc1 = register_module("fc1", nn::Linear(kStateDim, hidden));
    fc2 = register_module("fc2", nn::Linear(hidden, outputs));
}

torch::Tensor PolicyMlpImpl::forward(const torch::Tensor& states) { return fc2(torch::silu(fc1(states))); }

torch::Tensor gumbel_noise(at::IntArrayRef shape, const at::TensorOptions& options, at::Generator generator) {
    auto u = torch::rand(shape, generator, options.dtype(torch::kFloat64)).clamp(1e-12, 1.0 - 1e-12);
    return (-torch::log(-torch::log(u))).to(options.dtype());
}

ActionMap actor_sample(const torch::Tensor& logits, double tau, std::optional<at::Generator> generator) {
    if (!(tau > 0.0)) {
        throw std::invalid_argument("Gumbel temperature must be > 0");
    }
    ActionMap out;
    out.logits = logits;
    auto perturbed = logits;
    if (generator.has_value()) {
        perturbed = logits + gumbel_noise(logits.sizes(), logits.options(), *generator);
    }
    out.y_soft = torch::softmax(perturbed / tau, -1);
    out.actions = out.y_soft.argmax(-1);  // first maximal index on ties
    out.y_hard = F::one_hot(out.actions, logits.size(-1)).to(logits.dtype());
    // sg(y_hard - y_soft) + y_soft, arranged so the forward value is exactly y_hard in floating point
    out.ac = out.y_hard + (out.y_soft - out.y_soft.detach());
    out.log_probs = torch::log_softmax(logits, -1).gather(-1, out.actions.unsqueeze(-1)).squeeze(-1);
    return out;
}

ActionMap fixed_actions(int64_t batch, int64_t patches, int action, const at::TensorOptions& options) {
    if (action < 0 || action >= kNumActions) {
        throw std::invalid_argument("fixed action index out of range");
    }
    ActionMap out;
    out.actions = torch::full({batch, patches}, action, options.dtype(torch::kLong));
    out.y_hard = F::one_hot(out.actions, kNumActions).to(options.dtype());
    out.y_soft = out.y_hard;
    out.ac = out.y_hard;
    out.logits = torch::zeros({batch, patches, kNumActions}, options);
    out.log_probs = torch::zeros({batch, patches}, options);
    return out;
}

torch::Tensor spatialize(const torch::Tensor& table, PatchGrid grid, int64_t height, int64_t width) {
    check_grid(height, width, grid, "target");
    const auto B = table.size(0);
    const auto K = table.size(2);
    auto coarse = table.reshape({B, grid.rows, grid.cols, K}).permute({0, 3, 1, 2});
    return coarse.repeat_interleave(height / grid.rows, 2).repeat_interleave(width / grid.cols, 3);
}

torch::Tensor baseline(const torch::Tensor& tP, const torch::Tensor& rP) {
    if (tP.sizes() != rP.sizes()) {
        throw std::invalid_argument("baseline: shapes differ");
    }
    return torch::maximum(tP, 1.0 - rP);
}

torch::Tensor soft_iou(const torch::Tensor& pred, const torch::Tensor& gt) {
    if (pred.sizes() != gt.sizes()) {
        throw std::invalid_argument("soft_iou: shapes differ");
    }
    const auto B = pred.size(0);
    auto p = pred.reshape({B, -1});
    auto g = gt.reshape({B, -1}).to(pred.dtype());
    auto inter = (p * g).sum(1);
    return inter / (p.sum(1) + g.sum(1) - inter + kEps);
}

torch::Tensor reward(const torch::Tensor& PM, const torch::Tensor& B, const torch::Tensor& G) {
    torch::NoGradGuard guard;
    return (soft_iou(PM.detach(), G) - soft_iou(B.detach(), G));
}

RefineNetImpl::RefineNetImpl(int in_channels, int low_channels) {
    enc1a = register_module("enc1a", conv3x3(in_channels, 32));
    enc1b = register_module("enc1b", conv3x3(32, 32));
    enc2 = register_module("enc2", conv3x3(32, 64));
    mid = register_module("mid", conv3x3(64, 64));
    dec2 = register_module("dec2", conv3x3(128, 64));
    dec1 = register_module("dec1", conv3x3(96, 32));
    out = register_module("out", conv1x1(32, 1));
    detail = register_module("detail", DetailHead(32, low_channels));
}

torch::Tensor RefineNetImpl::forward(const torch::Tensor& x, const torch::Tensor& low, at::IntArrayRef out_size) {
    auto up = [](const torch::Tensor& t, const torch::Tensor& like) {
        return F::interpolate(t, F::InterpolateFuncOptions()
                                     .size(std::vector<int64_t>{like.size(2), like.size(3)})
                                     .mode(torch::kBilinear)
                                     .align_corners(false));
    };
    auto e1 = torch::silu(enc1b(torch::silu(enc1a(x))));
    auto e2 = torch::silu(enc2(avg_pool_half(e1)));
    auto m = torch::silu(mid(avg_pool_half(e2)));
    auto d2 = torch::silu(dec2(torch::cat({up(m, e2), e2}, 1)));
    auto d1 = torch::silu(dec1(torch::cat({up(d2, e1), e1}, 1)));
    auto logit = F::interpolate(out(d1), F::InterpolateFuncOptions()
                                             .size(std::vector<int64_t>(out_size.begin(), out_size.end()))
                                             .mode(torch::kBilinear)
                                             .align_corners(false));
    return torch::sigmoid(logit + detail(d1, low, out_size));
}

}  // namespace pixelcourt
