#include "pixelcourt/losses.hpp"

#include "pixelcourt/judge.hpp"

namespace pixelcourt {

namespace F = torch::nn::functional;

namespace {

torch::Tensor clamp_prob(const torch::Tensor& p) { return p.clamp(kEps, 1.0 - kEps); }

bool finite(const torch::Tensor& t) { return !t.defined() || torch::isfinite(t.detach()).all().item<bool>(); }

}  // namespace

torch::Tensor bce(const torch::Tensor& pred, const torch::Tensor& target) {
    auto p = clamp_prob(pred);
    return -(target * torch::log(p) + (1.0 - target) * torch::log(1.0 - p));
}

torch::Tensor structure_loss(const torch::Tensor& P, const torch::Tensor& G) {
    auto g = G.to(P.dtype());
    auto pooled = F::avg_pool2d(g, F::AvgPool2dFuncOptions(31).stride(1).padding(15).count_include_pad(true));
    auto weight = 1.0 + 5.0 * (pooled - g).abs();
    auto wbce = (weight * bce(P, g)).sum({2, 3}) / weight.sum({2, 3});
    auto p = clamp_prob(P);
    auto inter = (p * g * weight).sum({2, 3});
    auto uni = ((p + g) * weight).sum({2, 3});
    auto wiou = 1.0 - (inter + 1.0) / (uni - inter + 1.0);
    return (wbce + wiou).mean();
}

torch::Tensor edge_loss(const torch::Tensor& E, const torch::Tensor& G_e) {
    auto g = G_e.to(E.dtype());
    auto per_image_bce = bce(E, g).mean({1, 2, 3});
    auto dice = 1.0 - (2.0 * (E * g).sum({1, 2, 3}) + 1.0) / (E.sum({1, 2, 3}) + g.sum({1, 2, 3}) + 1.0);
    return (per_image_bce + dice).mean();
}

torch::Tensor symmetric_kl(const torch::Tensor& p, const torch::Tensor& q) {
    auto a = clamp_prob(p);
    auto b = clamp_prob(q);
    auto kl_ab = a * torch::log(a / b) + (1.0 - a) * torch::log((1.0 - a) / (1.0 - b));
    auto kl_ba = b * torch::log(b / a) + (1.0 - b) * torch::log((1.0 - b) / (1.0 - a));
    return kl_ab + kl_ba;
}

torch::Tensor seg_losses(const torch::Tensor& tP, const torch::Tensor& rP, const torch::Tensor& PM,
                         const torch::Tensor& G) {
    return structure_loss(tP, G) + structure_loss(rP, 1.0 - G) + structure_loss(PM, G);
}

torch::Tensor bg_losses(const torch::Tensor& tE, const torch::Tensor& rE, const torch::Tensor& G_e) {
    return edge_loss(tE, G_e) + edge_loss(rE, G_e);
}

torch::Tensor consistency_loss(const torch::Tensor& tP, const torch::Tensor& rP, const torch::Tensor& Rel,
                               const torch::Tensor& tE, const torch::Tensor& rE, double tau_rel) {
    auto gate = (Rel.detach() > tau_rel).to(tP.dtype()) * (1.0 - tE) * (1.0 - rE);
    return (gate * symmetric_kl(tP, 1.0 - rP)).sum() / (gate.sum() + kEps);
}

torch::Tensor normalize_per_image(const torch::Tensor& x) {
    const auto B = x.size(0);
    auto flat = x.reshape({B, -1});
    auto lo = std::get<0>(flat.min(1, true));
    auto hi = std::get<0>(flat.max(1, true));
    auto range = hi - lo;
    auto safe = torch::where(range > 1e-12, range, torch::ones_like(range));
    auto out = torch::where(range > 1e-12, (flat - lo) / safe, torch::zeros_like(flat));
    return out.reshape(x.sizes());
}

torch::Tensor reliability_target(const torch::Tensor& PM, const torch::Tensor& tP, const torch::Tensor& rP) {
    torch::NoGradGuard guard;
    auto entropy = binary_entropy(PM.detach());
    auto gap = (tP.detach() - (1.0 - rP.detach())).abs();
    return 1.0 - 0.5 * normalize_per_image(entropy) - 0.5 * normalize_per_image(gap);
}

torch::Tensor calibration_loss(const torch::Tensor& Rel, const torch::Tensor& PM, const torch::Tensor& tP,
                               const torch::Tensor& rP, const torch::Tensor& G, double beta) {
    auto target = reliability_target(PM, tP, rP);
    return bce(Rel, target).mean() + beta * (PM - G.to(PM.dtype())).pow(2).mean();
}

RlLosses rl_losses(const torch::Tensor& log_probs, const torch::Tensor& r, const torch::Tensor& values,
                   bool advantage) {
    auto reward = r.detach().reshape({-1, 1}).to(log_probs.dtype());
    auto weight = advantage ? (reward - values.detach()) : reward.expand_as(log_probs);
    RlLosses out;
    out.pg = -(weight * log_probs).mean(1).mean();
    out.val = (values - reward).pow(2).mean(1).mean();
    return out;
}

std::map<std::string, double> LossBundle::scalars() const {
    std::map<std::string, double> out;
    auto put = [&](const char* name, const torch::Tensor& t) {
        if (t.defined()) {
            out[name] = t.detach().to(torch::kFloat64).mean().item<double>();
        }
    };
    put("L_seg", seg);
    put("L_bg", bg);
    put("L_c", c);
    put("L_cal", cal);
    put("L_rel", rel);
    put("L_pg", pg);
    put("L_val", val);
    put("L_all", all);
    put("reward", r);
    return out;
}

torch::Tensor total_loss(LossBundle& b, const LossWeights& w) {
    const std::pair<const char*, const torch::Tensor*> parts[] = {{"L_seg", &b.seg}, {"L_bg", &b.bg}, {"L_c", &b.c},
                                                                  {"L_cal", &b.cal}, {"L_pg", &b.pg}, {"L_val", &b.val}};
    std::string bad;
    for (const auto& [name, t] : parts) {
        if (!t->defined()) {
            throw std::invalid_argument(std::string("total_loss: missing part ") + name);
        }
        if (!finite(*t)) {
            bad += std::string(bad.empty() ? "" : ", ") + name;
        }
    }
    if (!bad.empty()) {
        throw NonFiniteLoss("non-finite loss parts: " + bad);
    }
    b.rel = b.cal + w.lambda_c * b.c;
    b.all = b.seg + b.bg + w.reliability * b.rel + w.lambda_rl * (b.pg + b.val);
    return b.all;
}

}  // namespace pixelcourt
