#include "pixelcourt/eval.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pixelcourt/image_io.hpp"
#include "pixelcourt/plot.hpp"

namespace pixelcourt {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out.precision(10);
    return out;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path, size_t columns) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != columns) {
            throw std::runtime_error("malformed row in " + path.string() + ": " + line);
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

std::vector<SweepCell> default_robustness_grid() {
    std::vector<SweepCell> cells;
    for (double q : {95.0, 70.0, 50.0, 30.0}) cells.push_back({"jpeg", {PerturbationKind::jpeg, q}});
    for (double s : {0.0, 0.05, 0.1, 0.2}) cells.push_back({"gaussian_noise", {PerturbationKind::gaussian_noise, s}});
    for (double s : {0.0, 1.0, 2.0, 3.0}) cells.push_back({"gaussian_blur", {PerturbationKind::gaussian_blur, s}});
    return cells;
}

std::vector<SweepCell> social_media_presets() {
    return {
        {"osn:facebook", {PerturbationKind::jpeg, 71}},
        {"osn:wechat", {PerturbationKind::jpeg, 50}},
        {"osn:weibo", {PerturbationKind::jpeg, 80}},
        {"osn:whatsapp", {PerturbationKind::jpeg, 65}},
    };
}

std::vector<SweepRow> robustness_sweep(PixelCourt& model, std::span<const Sample> samples,
                                       std::span<const SweepCell> cells, uint64_t seed, double threshold) {
    std::vector<SweepRow> rows;
    for (const auto& cell : cells) {
        cell.perturbation.validate();
        std::vector<Sample> perturbed(samples.begin(), samples.end());
        for (size_t i = 0; i < perturbed.size(); ++i) {
            perturbed[i].image = perturb(perturbed[i].image, cell.perturbation, derive_seed(seed, i));
        }
        const auto m = evaluate(model, perturbed, threshold);
        rows.push_back({cell.label, cell.perturbation.severity, m.f1, m.soft_iou, m.n_images});
    }
    return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "kind,severity,f1,soft_iou,n_images\n";
    for (const auto& r : rows) {
        out << r.kind << ',' << r.severity << ',' << r.f1 << ',' << r.soft_iou << ',' << r.n_images << '\n';
    }
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path) {
    std::vector<SweepRow> rows;
    for (const auto& c : read_rows(path, 5)) {
        rows.push_back({c[0], std::stod(c[1]), std::stod(c[2]), std::stod(c[3]), std::stoll(c[4])});
    }
    return rows;
}

std::vector<std::filesystem::path> render_sweep_plots(std::span<const SweepRow> rows,
                                                      const std::filesystem::path& out_dir) {
    std::map<std::string, Series> by_kind;
    for (const auto& r : rows) {
        // Social-media presets share one plot keyed by quality.
        const bool osn = r.kind.rfind("osn:", 0) == 0;
        auto& s = by_kind[osn ? "social_media" : r.kind];
        s.label = osn ? "F1 (JPEG presets)" : "F1";
        s.x.push_back(r.severity);
        s.y.push_back(r.f1);
    }
    std::vector<std::filesystem::path> written;
    for (auto& [kind, series] : by_kind) {
        PlotStyle style;
        style.title = "F1 under " + kind;
        style.x_label = kind == "jpeg" || kind == "social_media" ? "JPEG quality" : "sigma";
        style.y_label = "F1";
        const auto path = out_dir / (kind + ".png");
        render_line_plot({series}, style, path);
        written.push_back(path);
    }
    return written;
}

std::vector<LambdaRow> lambda_rl_sweep(const TrainConfig& base, std::span<const Sample> train_set,
                                       std::span<const Sample> holdout, std::span<const double> values) {
    std::vector<LambdaRow> rows;
    const auto hold = conform_samples(holdout, base.image_size);
    const auto fit = conform_samples(train_set, base.image_size);
    for (double v : values) {
        auto config = base;
        config.lambda_rl = v;
        auto result = train(config, fit);
        LambdaRow row;
        row.lambda_rl = v;
        row.train_f1 = evaluate(result.model, fit).f1;
        const auto h = evaluate(result.model, hold);
        row.holdout_f1 = h.f1;
        row.mean_reward = h.mean_reward;
        row.final_loss = result.steps.empty() ? 0.0 : result.steps.back().losses.at("L_all");
        rows.push_back(row);
    }
    return rows;
}

void write_lambda_csv(std::span<const LambdaRow> rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "lambda_rl,train_f1,holdout_f1,mean_reward,final_loss\n";
    for (const auto& r : rows) {
        out << r.lambda_rl << ',' << r.train_f1 << ',' << r.holdout_f1 << ',' << r.mean_reward << ',' << r.final_loss
            << '\n';
    }
}

std::vector<LambdaRow> read_lambda_csv(const std::filesystem::path& path) {
    std::vector<LambdaRow> rows;
    for (const auto& c : read_rows(path, 5)) {
        rows.push_back({std::stod(c[0]), std::stod(c[1]), std::stod(c[2]), std::stod(c[3]), std::stod(c[4])});
    }
    return rows;
}

CalibrationReport calibration_report(const torch::Tensor& rel, const torch::Tensor& correct, int bins) {
    if (bins <= 0) {
        throw std::invalid_argument("calibration: bins must be positive");
    }
    if (rel.sizes() != correct.sizes()) {
        throw std::invalid_argument("calibration: shape mismatch");
    }
    const auto r = rel.detach().to(torch::kFloat64).flatten().contiguous();
    const auto c = correct.detach().to(torch::kFloat64).flatten().contiguous();
    const auto* rp = r.data_ptr<double>();
    const auto* cp = c.data_ptr<double>();
    std::vector<double> rel_sum(bins, 0.0), acc_sum(bins, 0.0);
    std::vector<int64_t> count(bins, 0);
    for (int64_t i = 0; i < r.numel(); ++i) {
        const int k = std::clamp(static_cast<int>(std::floor(rp[i] * bins)), 0, bins - 1);
        rel_sum[k] += rp[i];
        acc_sum[k] += cp[i];
        ++count[k];
    }
    CalibrationReport report;
    report.total = r.numel();
    for (int k = 0; k < bins; ++k) {
        if (count[k] == 0) continue;
        CalibrationBin b;
        b.lower = static_cast<double>(k) / bins;
        b.upper = static_cast<double>(k + 1) / bins;
        b.count = count[k];
        b.mean_rel = rel_sum[k] / count[k];
        b.accuracy = acc_sum[k] / count[k];
        report.ece += static_cast<double>(count[k]) / report.total * std::abs(b.accuracy - b.mean_rel);
        report.bins.push_back(b);
    }
    return report;
}

CalibrationReport calibration_report(PixelCourt& model, std::span<const Sample> samples, int bins, double threshold) {
    const bool was_training = model->is_training();
    model->eval();
    std::vector<torch::Tensor> rels, oks;
    {
        torch::NoGradGuard guard;
        for (size_t start = 0; start < samples.size(); start += 8) {
            const auto b = make_batch(samples.subspan(start, std::min<size_t>(8, samples.size() - start)));
            const auto out = model(b.images);
            rels.push_back(out.Rel);
            oks.push_back(out.PM.ge(threshold).eq(b.masks.gt(0.5)));
        }
    }
    model->train(was_training);
    return calibration_report(torch::cat(rels), torch::cat(oks), bins);
}

nlohmann::ordered_json to_json(const CalibrationReport& report) {
    nlohmann::ordered_json j;
    j["ece"] = report.ece;
    j["total"] = report.total;
    j["bins"] = nlohmann::ordered_json::array();
    for (const auto& b : report.bins) {
        j["bins"].push_back(
            {{"lower", b.lower}, {"upper", b.upper}, {"mean_rel", b.mean_rel}, {"accuracy", b.accuracy}, {"count", b.count}});
    }
    return j;
}

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_debate: return "no_debate";
        case Variant::no_judge: return "no_judge";
        case Variant::no_rl: return "no_rl";
        case Variant::no_reliability: return "no_reliability";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    for (auto v : kAllVariants) {
        if (to_string(v) == name) return v;
    }
    throw std::invalid_argument("unknown ablation variant: " + std::string(name));
}

TrainConfig apply_variant(TrainConfig config, Variant variant, int fixed_action) {
    switch (variant) {
        case Variant::full: break;
        case Variant::no_debate: config.model.bypass_debate = true; break;
        case Variant::no_judge: config.model.judge_disabled = true; break;
        case Variant::no_rl: config.model.fixed_action = fixed_action; break;
        case Variant::no_reliability: config.reliability_weight = 0.0; break;
    }
    config.validate();
    return config;
}

std::vector<AblationRow> run_ablation(const TrainConfig& base, std::span<const Sample> train_set,
                                      std::span<const Sample> holdout, std::span<const Variant> variants) {
    const auto fit = conform_samples(train_set, base.image_size);
    const auto hold = conform_samples(holdout, base.image_size);
    std::vector<AblationRow> rows;
    for (auto v : variants) {
        auto result = train(apply_variant(base, v), fit);
        AblationRow row;
        row.variant = v;
        row.train = evaluate(result.model, fit);
        row.holdout = evaluate(result.model, hold);
        double total = 0.0;
        size_t n = 0;
        for (const auto& s : result.steps) {
            for (double r : s.rewards) {
                total += std::abs(r);
                ++n;
            }
        }
        row.mean_abs_reward = n == 0 ? 0.0 : total / n;
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::ordered_json to_json(const AblationRow& row) {
    nlohmann::ordered_json j;
    j["variant"] = to_string(row.variant);
    j["train"] = to_json(row.train);
    j["holdout"] = to_json(row.holdout);
    j["mean_abs_reward"] = row.mean_abs_reward;
    return j;
}

}  // namespace pixelcourt
