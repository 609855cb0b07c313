#include "pixelcourt/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include <ATen/CPUGeneratorImpl.h>

#include "pixelcourt/checkpoint.hpp"
#include "pixelcourt/image_io.hpp"

namespace pixelcourt {

namespace {

constexpr uint64_t kGumbelStream = 0x67756d62656cULL;

bool gradients_finite(const PixelCourt& model) {
    for (const auto& p : model->parameters()) {
        const auto& g = p.grad();
        if (g.defined() && !torch::isfinite(g).all().item<bool>()) {
            return false;
        }
    }
    return true;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch) {
    char name[32];
    std::snprintf(name, sizeof(name), "checkpoint_%04d.pxc", epoch);
    return dir / name;
}

}  // namespace

MetricsLog::MetricsLog(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path, std::ios::trunc);
    if (!out_) {
        throw std::runtime_error("cannot open metrics log: " + path.string());
    }
}

void MetricsLog::write(int64_t step, std::string_view name, double value) {
    if (!out_.is_open()) {
        return;
    }
    nlohmann::ordered_json j;
    j["step"] = step;
    j["name"] = name;
    j["value"] = value;
    out_ << j.dump() << '\n';
}

void MetricsLog::write(int64_t step, std::string_view name, double value, int64_t image) {
    if (!out_.is_open()) {
        return;
    }
    nlohmann::ordered_json j;
    j["step"] = step;
    j["name"] = name;
    j["value"] = value;
    j["image"] = image;
    out_ << j.dump() << '\n';
}

std::vector<double> TrainResult::loss_trace() const {
    std::vector<double> out;
    out.reserve(steps.size());
    for (const auto& s : steps) {
        out.push_back(s.losses.at("L_all"));
    }
    return out;
}

std::vector<Sample> conform_samples(std::span<const Sample> samples, int size) {
    std::vector<Sample> out(samples.begin(), samples.end());
    for (auto& s : out) {
        if (s.image.height == size && s.image.width == size) {
            continue;
        }
        s.image = resize_image(s.image, size, size);
        s.mask = resize_map(s.mask, size, size);
        s.edge_gt = edge_from_mask(s.mask);
    }
    return out;
}

TrainResult train(const TrainConfig& config, std::span<const Sample> samples, const TrainOptions& options) {
    config.validate();
    if (samples.empty()) {
        throw std::invalid_argument("train: empty corpus");
    }
    const auto data = conform_samples(samples, config.image_size);

    TrainResult result;
    result.model = build_model(config.model, config.seed);
    auto& model = result.model;
    model->train();
    torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(config.learning_rate));
    auto generator = at::make_generator<at::CPUGeneratorImpl>(derive_seed(config.seed, kGumbelStream));

    MetricsLog metrics;
    if (!options.out_dir.empty()) {
        std::filesystem::create_directories(options.out_dir);
        metrics = MetricsLog(options.out_dir / "metrics.jsonl");
    }
    std::filesystem::path last_good;
    auto save = [&](int epoch) {
        if (options.out_dir.empty()) {
            return;
        }
        last_good = checkpoint_path(options.out_dir, epoch);
        save_checkpoint(model, config, last_good);
        result.checkpoints.push_back(last_good);
    };

    const size_t n = data.size();
    const size_t batch = std::min<size_t>(config.batch_size, n);
    const int64_t per_epoch = static_cast<int64_t>((n + batch - 1) / batch);
    const int64_t total = config.max_steps > 0 ? config.max_steps : per_epoch * config.epochs;

    int64_t step = 0;
    int epoch = 0;
    int last_saved = -1;
    std::vector<size_t> order(n);
    while (step < total) {
        std::iota(order.begin(), order.end(), size_t{0});
        std::mt19937_64 rng(derive_seed(config.seed, static_cast<uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);

        bool epoch_complete = true;
        for (size_t start = 0; start < n; start += batch) {
            if (step >= total) {
                epoch_complete = false;
                break;
            }
            const auto count = std::min(batch, n - start);
            const auto b = make_batch(data, std::span<const size_t>(order).subspan(start, count));

            ForwardOptions fwd;
            fwd.gumbel_tau = config.gumbel_tau(epoch);
            fwd.generator = generator;
            const auto out = model(b.images, fwd);

            LossBundle losses;
            try {
                losses = compute_losses(out, b.masks, b.edges, config);
            } catch (const NonFiniteLoss& e) {
                throw TrainingAborted("step " + std::to_string(step) + ": " + e.what(), last_good);
            }
            optimizer.zero_grad();
            losses.all.backward();
            if (!gradients_finite(model)) {
                throw TrainingAborted("step " + std::to_string(step) + ": non-finite gradient", last_good);
            }
            optimizer.step();

            StepRecord rec;
            rec.step = step;
            rec.epoch = epoch;
            rec.gumbel_tau = fwd.gumbel_tau;
            rec.losses = losses.scalars();
            const auto r = losses.r.detach().to(torch::kFloat64).contiguous();
            rec.rewards.assign(r.data_ptr<double>(), r.data_ptr<double>() + r.numel());
            for (const auto& [name, value] : rec.losses) {
                metrics.write(step, name, value);
            }
            for (size_t i = 0; i < rec.rewards.size(); ++i) {
                metrics.write(step, "reward", rec.rewards[i], static_cast<int64_t>(order[start + i]));
            }
            if (options.on_step) {
                options.on_step(rec);
            }
            result.steps.push_back(std::move(rec));
            ++step;
        }
        if (epoch_complete && (epoch + 1) % config.checkpoint_interval == 0) {
            save(epoch);
            last_saved = epoch;
        }
        ++epoch;
    }
    if (last_saved != epoch - 1) {
        save(epoch - 1);
    }
    return result;
}

TrainResult train(const TrainConfig& config, const std::filesystem::path& manifest, const TrainOptions& options) {
    const auto samples = load_corpus(manifest);
    return train(config, samples, options);
}

double Confusion::precision() const { return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp); }

double Confusion::recall() const { return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn); }

double Confusion::f1() const {
    const auto denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * tp / static_cast<double>(denom);
}

Confusion& Confusion::operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
}

Confusion confusion(const torch::Tensor& prob, const torch::Tensor& gt, double threshold) {
    if (prob.sizes() != gt.sizes()) {
        throw std::invalid_argument("confusion: shape mismatch");
    }
    const auto pred = prob.ge(threshold);
    const auto truth = gt.gt(0.5);
    Confusion c;
    c.tp = (pred & truth).sum().item<int64_t>();
    c.fp = (pred & ~truth).sum().item<int64_t>();
    c.fn = (~pred & truth).sum().item<int64_t>();
    c.tn = (~pred & ~truth).sum().item<int64_t>();
    return c;
}

nlohmann::ordered_json to_json(const EvalMetrics& m) {
    nlohmann::ordered_json j;
    j["f1"] = m.f1;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["soft_iou"] = m.soft_iou;
    j["mean_reward"] = m.mean_reward;
    j["rel_correct"] = m.rel_correct ? nlohmann::ordered_json(*m.rel_correct) : nlohmann::ordered_json(nullptr);
    j["rel_incorrect"] = m.rel_incorrect ? nlohmann::ordered_json(*m.rel_incorrect) : nlohmann::ordered_json(nullptr);
    j["n_images"] = m.n_images;
    j["n_pixels"] = m.n_pixels;
    return j;
}

namespace {

template <typename Fn>
void for_each_batch(PixelCourt& model, std::span<const Sample> samples, int batch_size, Fn&& fn) {
    if (samples.empty()) {
        throw std::invalid_argument("evaluate: empty corpus");
    }
    const bool was_training = model->is_training();
    model->eval();
    torch::NoGradGuard guard;
    const size_t step = static_cast<size_t>(std::max(1, batch_size));
    for (size_t start = 0; start < samples.size(); start += step) {
        const auto b = make_batch(samples.subspan(start, std::min(step, samples.size() - start)));
        fn(b, model(b.images));
    }
    model->train(was_training);
}

}  // namespace

torch::Tensor predict_verdicts(PixelCourt& model, std::span<const Sample> samples, int batch_size) {
    std::vector<torch::Tensor> parts;
    for_each_batch(model, samples, batch_size, [&](const Batch&, const ModelOutput& out) { parts.push_back(out.PM); });
    return torch::cat(parts);
}

EvalMetrics evaluate(PixelCourt& model, std::span<const Sample> samples, double threshold, int batch_size) {
    EvalMetrics m;
    Confusion total;
    double iou_sum = 0.0;
    double reward_sum = 0.0;
    double rel_ok = 0.0;
    double rel_bad = 0.0;
    int64_t n_ok = 0;
    int64_t n_bad = 0;
    for_each_batch(model, samples, batch_size, [&](const Batch& b, const ModelOutput& out) {
        const auto PM = out.PM.to(torch::kFloat64);
        const auto G = b.masks.to(torch::kFloat64);
        for (int64_t i = 0; i < PM.size(0); ++i) {
            const auto c = confusion(PM[i], G[i], threshold);
            m.image_f1.push_back(c.f1());
            total += c;
        }
        iou_sum += soft_iou(PM, G).sum().item<double>();
        reward_sum += reward(PM, out.B.to(torch::kFloat64), G).sum().item<double>();
        const auto correct = PM.ge(threshold).eq(G.gt(0.5));
        const auto rel = out.Rel.to(torch::kFloat64);
        rel_ok += rel.masked_select(correct).sum().item<double>();
        rel_bad += rel.masked_select(~correct).sum().item<double>();
        n_ok += correct.sum().item<int64_t>();
        n_bad += (~correct).sum().item<int64_t>();
        m.n_pixels += G.numel();
    });
    m.n_images = static_cast<int64_t>(samples.size());
    m.f1 = total.f1();
    m.precision = total.precision();
    m.recall = total.recall();
    m.soft_iou = iou_sum / m.n_images;
    m.mean_reward = reward_sum / m.n_images;
    if (n_ok > 0) m.rel_correct = rel_ok / n_ok;
    if (n_bad > 0) m.rel_incorrect = rel_bad / n_bad;
    return m;
}

EvalMetrics evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                                double threshold) {
    auto loaded = load_checkpoint(checkpoint);
    const auto samples = conform_samples(load_corpus(manifest), loaded.config.image_size);
    return evaluate(loaded.model, samples, threshold, loaded.config.batch_size);
}

}  // namespace pixelcourt
