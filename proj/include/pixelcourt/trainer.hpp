#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "pixelcourt/config.hpp"
#include "pixelcourt/datagen.hpp"
#include "pixelcourt/model.hpp"

namespace pixelcourt {

/// JSON-lines metrics stream: {"step": s, "name": n, "value": v}, optionally with "image".
class MetricsLog {
public:
    MetricsLog() = default;
    explicit MetricsLog(const std::filesystem::path& path);

    void write(int64_t step, std::string_view name, double value);
    void write(int64_t step, std::string_view name, double value, int64_t image);
    bool is_open() const { return out_.is_open(); }

private:
    std::ofstream out_;
};

struct StepRecord {
    int64_t step = 0;
    int epoch = 0;
    double gumbel_tau = 1.0;
    std::map<std::string, double> losses;
    std::vector<double> rewards;
};

struct TrainOptions {
    /// Checkpoints and metrics.jsonl go here; empty keeps everything in memory.
    std::filesystem::path out_dir;
    std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
    PixelCourt model{nullptr};
    std::vector<StepRecord> steps;
    std::vector<std::filesystem::path> checkpoints;

    std::vector<double> loss_trace() const;
};

/// Raised when a loss or gradient goes non-finite. The optimizer step is skipped, so
/// `last_checkpoint` (possibly empty) is the last good state on disk.
class TrainingAborted : public std::runtime_error {
public:
    TrainingAborted(const std::string& what, std::filesystem::path last_checkpoint)
        : std::runtime_error(what), last_checkpoint(std::move(last_checkpoint)) {}
    std::filesystem::path last_checkpoint;
};

/// Resizes samples to `size` x `size` when needed; edge maps are rebuilt from the resized mask.
std::vector<Sample> conform_samples(std::span<const Sample> samples, int size);

/// Joint training of every module with one Adam optimizer. With max_steps > 0 training runs
/// exactly that many steps, continuing across epochs as needed.
TrainResult train(const TrainConfig& config, std::span<const Sample> samples, const TrainOptions& options = {});
TrainResult train(const TrainConfig& config, const std::filesystem::path& manifest, const TrainOptions& options = {});

struct Confusion {
    int64_t tp = 0, fp = 0, fn = 0, tn = 0;

    double precision() const;
    double recall() const;
    /// 2TP / (2TP + FP + FN); 1 when there are no positives at all.
    double f1() const;
    Confusion& operator+=(const Confusion& o);
};

/// Pixels with prob >= threshold count as predicted positive.
Confusion confusion(const torch::Tensor& prob, const torch::Tensor& gt, double threshold);

struct EvalMetrics {
    double f1 = 0.0;  // micro-averaged over all pixels
    double precision = 0.0;
    double recall = 0.0;
    double soft_iou = 0.0;     // mean over images
    double mean_reward = 0.0;  // mean over images
    std::optional<double> rel_correct;
    std::optional<double> rel_incorrect;
    int64_t n_images = 0;
    int64_t n_pixels = 0;
    std::vector<double> image_f1;
};

nlohmann::ordered_json to_json(const EvalMetrics& m);

/// Deterministic evaluation (no Gumbel noise, eval-mode normalization).
EvalMetrics evaluate(PixelCourt& model, std::span<const Sample> samples, double threshold = 0.5,
                     int batch_size = 8);

/// Verdict maps for a set of samples, B x 1 x H x W, in eval mode.
torch::Tensor predict_verdicts(PixelCourt& model, std::span<const Sample> samples, int batch_size = 8);

EvalMetrics evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                                double threshold = 0.5);

}  // namespace pixelcourt
