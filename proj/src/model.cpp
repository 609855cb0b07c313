#include "pixelcourt/model.hpp"

namespace pixelcourt {

PixelCourtImpl::PixelCourtImpl(const ModelConfig& config) : config_(config) {
    config.validate();
    const auto& ch = config.encoder_channels;
    const int C = config.stream_channels;
    encoder = register_module("encoder", Encoder(ch));
    adapter_t = register_module("adapter_t", StreamAdapter(ch[2], C));
    adapter_r = register_module("adapter_r", StreamAdapter(ch[2], C));
    debate = register_module("debate", Debate(config, ch[0]));
    evidence = register_module("evidence", EvidenceAggregator(C, config.evidence_channels));
    dispute = register_module("dispute", DisputeHead(config.evidence_channels));
    reliability = register_module("reliability", ReliabilityHead(config.evidence_channels));
    actor = register_module("actor", PolicyMlp(config.policy_hidden, kNumActions));
    critic = register_module("critic", PolicyMlp(config.policy_hidden, 1));
    refine = register_module("refine", RefineNet(config.evidence_channels + kNumActions + 1 + kStateDim, ch[0]));
}

ModelOutput PixelCourtImpl::forward(const torch::Tensor& image, const ForwardOptions& options) {
    ModelOutput out;
    const auto out_size = image.sizes().slice(2);
    out.pyramid = encoder(image);
    out.streams = {adapter_t(out.pyramid), adapter_r(out.pyramid)};
    out.debate = debate(image, out.streams.mf, out.streams.af, out.pyramid);
    const auto& t = out.debate.prosecution;
    const auto& r = out.debate.defense;

    out.freq = frequency_features(image).to(t.F.dtype());
    out.EV = evidence(EvidenceInputs{t.P, r.P, t.E, r.E, out.freq, t.F, r.F});
    out.dM = dispute(out.EV);
    out.Rel = reliability(out.EV, out_size);
    out.B = baseline(t.P, r.P);

    const PatchGrid grid{config_.patch_rows, config_.patch_cols};
    out.states = patch_states(out.EV, out.dM, t.P, r.P, grid);
    const auto batch = image.size(0);
    if (config_.fixed_action >= 0) {
        out.actions = fixed_actions(batch, grid.count(), config_.fixed_action, out.EV.options());
    } else {
        out.actions = actor_sample(actor(out.states.states), options.gumbel_tau, options.generator);
    }
    out.values = critic(out.states.states).squeeze(-1);

    if (config_.judge_disabled) {
        out.PM = out.B;
        return out;
    }
    const auto h = out.EV.size(2);
    const auto w = out.EV.size(3);
    auto action_table = config_.actor_refine_gradient ? out.actions.ac : out.actions.ac.detach();
    auto x = torch::cat({out.EV, spatialize(action_table, grid, h, w), out.dM, spatialize(out.states.states, grid, h, w)},
                        1);
    out.PM = refine(x, out.pyramid.levels[0], out_size);
    return out;
}

PixelCourt build_model(const ModelConfig& config, uint64_t seed) {
    torch::manual_seed(seed);
    return PixelCourt(config);
}

LossBundle compute_losses(const ModelOutput& out, const torch::Tensor& G, const torch::Tensor& G_e,
                          const TrainConfig& config) {
    const auto& t = out.debate.prosecution;
    const auto& r = out.debate.defense;
    const auto g = G.to(out.PM.dtype());
    const auto ge = G_e.to(out.PM.dtype());

    LossBundle b;
    b.seg = seg_losses(t.P, r.P, out.PM, g);
    b.bg = bg_losses(t.E, r.E, ge);
    b.c = consistency_loss(t.P, r.P, out.Rel, t.E, r.E, config.tau_rel);
    b.cal = calibration_loss(out.Rel, out.PM, t.P, r.P, g, config.beta);
    b.r = reward(out.PM, out.B, g);

    const bool rl_active = config.model.fixed_action < 0;
    if (rl_active) {
        auto rl = rl_losses(out.actions.log_probs, b.r, out.values, config.advantage);
        b.pg = rl.pg;
        b.val = rl.val;
    } else {
        b.pg = torch::zeros({}, out.PM.options());
        b.val = torch::zeros({}, out.PM.options());
    }
    total_loss(b, LossWeights{config.lambda_c, config.lambda_rl, config.reliability_weight});
    return b;
}

}  // namespace pixelcourt
