#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace pixelcourt {

/// Which side of the attention logit matrix the disagreement penalty is broadcast over.
enum class PenaltyBroadcast { key, query };

struct ModelConfig {
    std::array<int, 4> encoder_channels{16, 32, 64, 128};
    int stream_channels = 64;
    int heads = 4;
    double suppression = 1.0;  // lambda in the suppressed cross-attention
    PenaltyBroadcast broadcast = PenaltyBroadcast::key;
    int evidence_channels = 64;
    int patch_rows = 8;
    int patch_cols = 8;
    int policy_hidden = 64;

    // ablation switches
    bool bypass_debate = false;
    bool judge_disabled = false;  // verdict replaced by the heuristic baseline
    int fixed_action = -1;        // >= 0 replaces sampled actions (actor unused)

    // When true the straight-through action field passes refinement gradients back into the actor.
    bool actor_refine_gradient = false;

    void validate() const;
};

struct TrainConfig {
    ModelConfig model;
    int image_size = 64;
    int batch_size = 8;
    double learning_rate = 1e-4;
    int epochs = 20;
    int max_steps = 0;  // 0 = run all epochs
    double lambda_c = 0.1;
    double lambda_rl = 0.1;
    double tau_rel = 0.6;
    double beta = 0.1;
    double reliability_weight = 1.0;
    double gumbel_tau_start = 1.0;
    double gumbel_tau_decay = 0.97;
    double gumbel_tau_floor = 0.3;
    bool advantage = false;  // use (r - V) instead of r in the policy gradient
    uint64_t seed = 0;
    int checkpoint_interval = 1;  // epochs between checkpoints

    double gumbel_tau(int epoch) const;
    void validate() const;
};

/// Sets one key. Throws std::invalid_argument for unknown keys or unparsable values.
void apply_setting(TrainConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` text, '#' starts a comment.
TrainConfig parse_config(std::string_view text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

std::map<std::string, std::string> to_settings(const TrainConfig& config);
std::string to_text(const TrainConfig& config);

/// Global seed fallback read from PIXELCOURT_SEED when no seed is given explicitly.
uint64_t env_seed(uint64_t fallback = 0);

}  // namespace pixelcourt
