#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include <torch/torch.h>

namespace pixelcourt {

/// Elementwise binary cross-entropy, prediction clamped to [1e-6, 1 - 1e-6]. Soft targets allowed.
torch::Tensor bce(const torch::Tensor& pred, const torch::Tensor& target);

/// Boundary-weighted BCE plus weighted soft-IoU, weights 1 + 5*|avgpool31(G) - G|. Batch mean.
torch::Tensor structure_loss(const torch::Tensor& P, const torch::Tensor& G);

/// Mean BCE plus Dice with +1 smoothing, per image, batch mean.
torch::Tensor edge_loss(const torch::Tensor& E, const torch::Tensor& G_e);

/// Elementwise KL(Bern(p) || Bern(q)) + KL(Bern(q) || Bern(p)), both clamped to [1e-6, 1 - 1e-6].
torch::Tensor symmetric_kl(const torch::Tensor& p, const torch::Tensor& q);

/// L_s(tP, G) + L_s(rP, 1 - G) + L_s(PM, G)
torch::Tensor seg_losses(const torch::Tensor& tP, const torch::Tensor& rP, const torch::Tensor& PM,
                         const torch::Tensor& G);

/// L_e(tE, G_e) + L_e(rE, G_e)
torch::Tensor bg_losses(const torch::Tensor& tE, const torch::Tensor& rE, const torch::Tensor& G_e);

/// Gated SymKL between tP and 1 - rP on reliable (Rel > tau_rel) non-boundary pixels.
torch::Tensor consistency_loss(const torch::Tensor& tP, const torch::Tensor& rP, const torch::Tensor& Rel,
                               const torch::Tensor& tE, const torch::Tensor& rE, double tau_rel);

/// Per-image min-max normalization to [0, 1]; a flat map becomes zeros.
torch::Tensor normalize_per_image(const torch::Tensor& x);

/// R* = 1 - 0.5 Norm(H(PM)) - 0.5 Norm(|tP - (1 - rP)|), detached.
torch::Tensor reliability_target(const torch::Tensor& PM, const torch::Tensor& tP, const torch::Tensor& rP);

/// BCE(Rel, R*) + beta * mean((PM - G)^2)
torch::Tensor calibration_loss(const torch::Tensor& Rel, const torch::Tensor& PM, const torch::Tensor& tP,
                               const torch::Tensor& rP, const torch::Tensor& G, double beta);

struct RlLosses {
    torch::Tensor pg;
    torch::Tensor val;
};

/// Policy-gradient and value losses. log_probs and values are B x N, r is one reward per image.
/// With `advantage` the policy term uses r - V instead of r. No gradient reaches r.
RlLosses rl_losses(const torch::Tensor& log_probs, const torch::Tensor& r, const torch::Tensor& values,
                   bool advantage = false);

struct LossWeights {
    double lambda_c = 0.1;
    double lambda_rl = 0.1;
    double reliability = 1.0;  // 0 drops L_rel entirely
};

struct LossBundle {
    torch::Tensor seg, bg, c, cal, rel, pg, val, all;
    torch::Tensor r;  // per-image reward

    std::map<std::string, double> scalars() const;
};

class NonFiniteLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fills bundle.rel and bundle.all: L_rel = L_cal + lambda_c L_c,
/// L_all = L_seg + L_bg + w_rel L_rel + lambda_rl (L_pg + L_val). Throws NonFiniteLoss on NaN/Inf parts.
torch::Tensor total_loss(LossBundle& bundle, const LossWeights& weights);

}  // namespace pixelcourt
