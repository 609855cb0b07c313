#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "pixelcourt/config.hpp"
#include "pixelcourt/datagen.hpp"
#include "pixelcourt/model.hpp"
#include "pixelcourt/trainer.hpp"

namespace pixelcourt {

struct SweepRow {
    std::string kind;  // perturbation kind, or "osn:<platform>" for social-media presets
    double severity = 0.0;
    double f1 = 0.0;
    double soft_iou = 0.0;
    int64_t n_images = 0;
};

struct SweepCell {
    std::string label;
    Perturbation perturbation;
};

/// JPEG quality {95, 70, 50, 30}, noise sigma {0, 0.05, 0.1, 0.2}, blur sigma {0, 1, 2, 3}.
std::vector<SweepCell> default_robustness_grid();

/// Social-media transmission approximated by JPEG re-encoding at fixed qualities.
std::vector<SweepCell> social_media_presets();

/// Evaluates every cell on perturbed copies of `samples`. The perturbation of sample i uses
/// derive_seed(seed, i), so each row depends only on (model, samples, cell, seed).
std::vector<SweepRow> robustness_sweep(PixelCourt& model, std::span<const Sample> samples,
                                       std::span<const SweepCell> cells, uint64_t seed, double threshold = 0.5);

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);

/// One F1-vs-severity PNG per kind, named <kind>.png. Returns the written paths.
std::vector<std::filesystem::path> render_sweep_plots(std::span<const SweepRow> rows,
                                                      const std::filesystem::path& out_dir);

inline const std::vector<double> kLambdaRlGrid = {0.01, 0.05, 0.1, 0.5, 1.0};

struct LambdaRow {
    double lambda_rl = 0.0;
    double train_f1 = 0.0;
    double holdout_f1 = 0.0;
    double mean_reward = 0.0;
    double final_loss = 0.0;
};

std::vector<LambdaRow> lambda_rl_sweep(const TrainConfig& base, std::span<const Sample> train_set,
                                       std::span<const Sample> holdout, std::span<const double> values = kLambdaRlGrid);

void write_lambda_csv(std::span<const LambdaRow> rows, const std::filesystem::path& path);
std::vector<LambdaRow> read_lambda_csv(const std::filesystem::path& path);

struct CalibrationBin {
    double lower = 0.0;
    double upper = 0.0;
    double mean_rel = 0.0;
    double accuracy = 0.0;
    int64_t count = 0;
};

struct CalibrationReport {
    std::vector<CalibrationBin> bins;  // empty bins omitted
    double ece = 0.0;
    int64_t total = 0;
};

/// Reliability diagram over `bins` equal-width bins of [0, 1]; bin k holds Rel in [k/bins, (k+1)/bins),
/// the last bin is closed. ECE = sum_k (n_k / n) |accuracy_k - mean_rel_k|.
CalibrationReport calibration_report(const torch::Tensor& rel, const torch::Tensor& correct, int bins = 10);

/// Rel against correctness of PM thresholded at `threshold`.
CalibrationReport calibration_report(PixelCourt& model, std::span<const Sample> samples, int bins = 10,
                                     double threshold = 0.5);

nlohmann::ordered_json to_json(const CalibrationReport& report);

enum class Variant { full, no_debate, no_judge, no_rl, no_reliability };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
inline const std::vector<Variant> kAllVariants = {Variant::full, Variant::no_debate, Variant::no_judge, Variant::no_rl,
                                                  Variant::no_reliability};

/// Config switches for one ablation row. no_rl pins every patch to `fixed_action`.
TrainConfig apply_variant(TrainConfig config, Variant variant, int fixed_action = 0);

struct AblationRow {
    Variant variant = Variant::full;
    EvalMetrics train;
    EvalMetrics holdout;
    double mean_abs_reward = 0.0;  // over all training steps
};

std::vector<AblationRow> run_ablation(const TrainConfig& base, std::span<const Sample> train_set,
                                      std::span<const Sample> holdout, std::span<const Variant> variants = kAllVariants);

nlohmann::ordered_json to_json(const AblationRow& row);

}  // namespace pixelcourt
