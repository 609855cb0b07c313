// Command-line front end: corpus generation, training, evaluation, prediction and sweeps.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pixelcourt/checkpoint.hpp"
#include "pixelcourt/config.hpp"
#include "pixelcourt/datagen.hpp"
#include "pixelcourt/eval.hpp"
#include "pixelcourt/image_io.hpp"
#include "pixelcourt/model.hpp"
#include "pixelcourt/plot.hpp"
#include "pixelcourt/trainer.hpp"

namespace fs = std::filesystem;
using namespace pixelcourt;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path resolve_manifest(const fs::path& data) {
    const auto p = fs::is_directory(data) ? data / "manifest.jsonl" : data;
    if (!fs::exists(p)) {
        throw UsageError("no manifest at " + p.string());
    }
    return p;
}

struct ConfigArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<uint64_t> seed;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);
        cmd->add_option("--set", overrides, "override a config key (key=value), repeatable");
        cmd->add_option("--seed", seed, "global seed (default: config, then PIXELCOURT_SEED, then 0)");
    }

    TrainConfig resolve() const {
        TrainConfig config;
        config.seed = env_seed(0);
        if (!config_path.empty()) {
            config = load_config(config_path, config);
        }
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                throw UsageError("--set expects key=value, got '" + kv + "'");
            }
            apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (seed) {
            config.seed = *seed;
        }
        config.validate();
        return config;
    }
};

/// Holdout from --holdout, or the last quarter of the training manifest when absent.
std::pair<std::vector<Sample>, std::vector<Sample>> split_data(const std::string& data, const std::string& holdout) {
    auto samples = load_corpus(resolve_manifest(data));
    if (!holdout.empty()) {
        return {std::move(samples), load_corpus(resolve_manifest(holdout))};
    }
    if (samples.size() < 2) {
        throw UsageError("need at least two samples to split off a holdout set");
    }
    const size_t cut = samples.size() - std::max<size_t>(1, samples.size() / 4);
    std::vector<Sample> hold(samples.begin() + static_cast<std::ptrdiff_t>(cut), samples.end());
    samples.resize(cut);
    return {std::move(samples), std::move(hold)};
}

void write_json(const nlohmann::ordered_json& j, const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

ImagePlane load_for_model(const fs::path& path, int size) {
    return resize_image(read_image(path), size, size);
}

void render_metrics_plot(const fs::path& metrics, const fs::path& out) {
    std::ifstream in(metrics);
    std::map<std::string, Series> series;
    std::string line;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        if (j.contains("image")) continue;
        const auto name = j["name"].get<std::string>();
        if (name != "L_all" && name != "L_seg" && name != "L_bg" && name != "L_rel") continue;
        auto& s = series[name];
        s.label = name;
        s.x.push_back(j["step"].get<double>());
        s.y.push_back(j["value"].get<double>());
    }
    std::vector<Series> all;
    for (auto& [_, s] : series) all.push_back(std::move(s));
    PlotStyle style;
    style.title = "training losses";
    style.x_label = "step";
    style.y_label = "loss";
    style.y_lo = style.y_hi = 0.0;
    render_line_plot(all, style, out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pixelcourt: adversarial debate and RL judge for image manipulation localization"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "build a synthetic tamper corpus");
    CorpusOptions corpus;
    std::optional<uint64_t> gen_seed;
    std::string gen_out;
    gen->add_option("--n", corpus.count, "number of samples")->check(CLI::PositiveNumber);
    gen->add_option("--size", corpus.size, "image side in pixels (multiple of 16, >= 32)");
    gen->add_option("--seed", gen_seed, "corpus seed (default PIXELCOURT_SEED or 0)");
    gen->add_option("--pristine-every", corpus.pristine_every, "insert a pristine sample every k samples (0 = none)");
    gen->add_option("--out", gen_out, "output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a model on a corpus");
    ConfigArgs train_cfg;
    train_cfg.attach(tr);
    std::string train_data, train_out;
    int log_every = 10;
    tr->add_option("--data", train_data, "corpus directory or manifest.jsonl")->required();
    tr->add_option("--out", train_out, "run directory for checkpoints and metrics.jsonl")->required();
    tr->add_option("--log-every", log_every, "progress line interval in steps (0 = quiet)");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string ev_ckpt, ev_data, ev_out;
    double ev_threshold = 0.5;
    int ev_bins = 10;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    ev->add_option("--data", ev_data, "corpus directory or manifest.jsonl")->required();
    ev->add_option("--threshold", ev_threshold, "binarization threshold")->check(CLI::Range(0.0, 1.0));
    ev->add_option("--bins", ev_bins, "calibration bins")->check(CLI::PositiveNumber);
    ev->add_option("--out", ev_out, "also write the JSON record here");

    // predict
    auto* pr = app.add_subcommand("predict", "write PM, Rel, dM and B maps for one image");
    std::string pr_ckpt, pr_image, pr_out;
    bool pr_debug = false;
    pr->add_option("--ckpt", pr_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    pr->add_option("--image", pr_image, "input image (PNG/JPEG)")->required()->check(CLI::ExistingFile);
    pr->add_option("--out", pr_out, "output directory")->required();
    pr->add_flag("--debug", pr_debug, "also dump D, alpha, delta, edge maps and the action map");

    // sweep-robust
    auto* sr = app.add_subcommand("sweep-robust", "F1 under JPEG, noise and blur perturbations");
    std::string sr_ckpt, sr_data, sr_out;
    std::optional<uint64_t> sr_seed;
    bool sr_osn = false;
    double sr_threshold = 0.5;
    sr->add_option("--ckpt", sr_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    sr->add_option("--data", sr_data, "corpus directory or manifest.jsonl")->required();
    sr->add_option("--out", sr_out, "output directory (robustness.csv and plots)")->required();
    sr->add_option("--seed", sr_seed, "perturbation seed");
    sr->add_option("--threshold", sr_threshold, "binarization threshold")->check(CLI::Range(0.0, 1.0));
    sr->add_flag("--osn", sr_osn, "append social-media JPEG presets (approximation)");

    // sweep-lrl
    auto* sl = app.add_subcommand("sweep-lrl", "train one short run per lambda_rl value");
    ConfigArgs sl_cfg;
    sl_cfg.attach(sl);
    std::string sl_data, sl_holdout, sl_out;
    std::vector<double> sl_values = kLambdaRlGrid;
    sl->add_option("--data", sl_data, "training corpus")->required();
    sl->add_option("--holdout", sl_holdout, "holdout corpus (default: last quarter of --data)");
    sl->add_option("--values", sl_values, "lambda_rl values");
    sl->add_option("--out", sl_out, "output directory (lambda_rl.csv)")->required();

    // ablate
    auto* ab = app.add_subcommand("ablate", "train and evaluate ablation variants");
    ConfigArgs ab_cfg;
    ab_cfg.attach(ab);
    std::string ab_data, ab_holdout, ab_out;
    std::vector<std::string> ab_variants;
    ab->add_option("--data", ab_data, "training corpus")->required();
    ab->add_option("--holdout", ab_holdout, "holdout corpus (default: last quarter of --data)");
    ab->add_option("--variants", ab_variants, "subset of full,no_debate,no_judge,no_rl,no_reliability");
    ab->add_option("--out", ab_out, "output directory (ablation.json, ablation.csv)")->required();

    // report
    auto* rp = app.add_subcommand("report", "render plots from sweep CSVs and metrics logs");
    std::string rp_in, rp_out;
    rp->add_option("--in", rp_in, "directory holding robustness.csv / lambda_rl.csv / metrics.jsonl")
        ->required()
        ->check(CLI::ExistingDirectory);
    rp->add_option("--out", rp_out, "plot directory (default: --in)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << sub->help();
        return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
    }

    try {
        if (*gen) {
            corpus.seed = gen_seed.value_or(env_seed(0));
            const auto records = write_corpus(corpus, gen_out);
            std::cout << "wrote " << records.size() << " samples to " << gen_out << "\n";
        } else if (*tr) {
            const auto config = train_cfg.resolve();
            TrainOptions options;
            options.out_dir = train_out;
            options.on_step = [&](const StepRecord& s) {
                if (log_every > 0 && s.step % log_every == 0) {
                    std::fprintf(stderr, "step %lld epoch %d loss %.5f reward %.4f\n", static_cast<long long>(s.step),
                                 s.epoch, s.losses.at("L_all"), s.losses.at("reward"));
                }
            };
            fs::create_directories(train_out);
            std::ofstream(fs::path(train_out) / "config.txt") << to_text(config);
            const auto result = train(config, resolve_manifest(train_data), options);
            std::cout << "trained " << result.steps.size() << " steps; last checkpoint "
                      << result.checkpoints.back().string() << "\n";
        } else if (*ev) {
            const auto manifest = resolve_manifest(ev_data);
            auto loaded = load_checkpoint(ev_ckpt);
            const auto samples = conform_samples(load_corpus(manifest), loaded.config.image_size);
            auto record = to_json(evaluate(loaded.model, samples, ev_threshold));
            record["threshold"] = ev_threshold;
            record["calibration"] = to_json(calibration_report(loaded.model, samples, ev_bins, ev_threshold));
            std::cout << record.dump(2) << "\n";
            if (!ev_out.empty()) {
                write_json(record, ev_out);
            }
        } else if (*pr) {
            auto loaded = load_checkpoint(pr_ckpt);
            const int size = loaded.config.image_size;
            const auto image = to_tensor(load_for_model(pr_image, size)).unsqueeze(0);
            torch::NoGradGuard guard;
            const auto out = loaded.model(image);
            const fs::path dir = pr_out;
            write_heatmap(out.PM[0], dir / "pm.png");
            write_heatmap(out.Rel[0], dir / "rel.png");
            write_heatmap(out.dM[0], dir / "dm.png");
            write_heatmap(out.B[0], dir / "b.png");
            if (pr_debug) {
                const auto& cfg = loaded.config.model;
                write_heatmap_normalized(out.debate.D[0], dir / "debug_d.png");
                write_heatmap(out.debate.alpha[0].mean(0), dir / "debug_alpha.png");
                write_heatmap((out.debate.delta[0].mean(0) + 1.0) / 2.0, dir / "debug_delta.png");
                write_heatmap(out.debate.prosecution.E[0], dir / "debug_te.png");
                write_heatmap(out.debate.defense.E[0], dir / "debug_re.png");
                write_action_map(out.actions.actions[0].reshape({cfg.patch_rows, cfg.patch_cols}), size, size,
                                 dir / "debug_actions.png");
            }
            nlohmann::ordered_json j;
            j["image"] = pr_image;
            j["mean_pm"] = out.PM.mean().item<double>();
            j["mean_rel"] = out.Rel.mean().item<double>();
            j["mean_dm"] = out.dM.mean().item<double>();
            std::cout << j.dump() << "\n";
        } else if (*sr) {
            auto loaded = load_checkpoint(sr_ckpt);
            const auto samples = conform_samples(load_corpus(resolve_manifest(sr_data)), loaded.config.image_size);
            auto cells = default_robustness_grid();
            if (sr_osn) {
                const auto osn = social_media_presets();
                cells.insert(cells.end(), osn.begin(), osn.end());
            }
            const auto rows = robustness_sweep(loaded.model, samples, cells, sr_seed.value_or(env_seed(0)), sr_threshold);
            write_sweep_csv(rows, fs::path(sr_out) / "robustness.csv");
            render_sweep_plots(rows, sr_out);
            for (const auto& r : rows) {
                std::printf("%-16s %6.3g  f1 %.4f  soft_iou %.4f\n", r.kind.c_str(), r.severity, r.f1, r.soft_iou);
            }
        } else if (*sl) {
            const auto config = sl_cfg.resolve();
            const auto [fit, hold] = split_data(sl_data, sl_holdout);
            const auto rows = lambda_rl_sweep(config, fit, hold, sl_values);
            write_lambda_csv(rows, fs::path(sl_out) / "lambda_rl.csv");
            for (const auto& r : rows) {
                std::printf("lambda_rl %-5g train_f1 %.4f holdout_f1 %.4f\n", r.lambda_rl, r.train_f1, r.holdout_f1);
            }
        } else if (*ab) {
            const auto config = ab_cfg.resolve();
            std::vector<Variant> variants;
            for (const auto& v : ab_variants) variants.push_back(parse_variant(v));
            if (variants.empty()) variants = kAllVariants;
            const auto [fit, hold] = split_data(ab_data, ab_holdout);
            const auto rows = run_ablation(config, fit, hold, variants);
            nlohmann::ordered_json j = nlohmann::ordered_json::array();
            fs::create_directories(ab_out);
            std::ofstream csv(fs::path(ab_out) / "ablation.csv");
            csv << "variant,train_f1,holdout_f1,holdout_soft_iou,mean_abs_reward\n";
            for (const auto& r : rows) {
                j.push_back(to_json(r));
                csv << to_string(r.variant) << ',' << r.train.f1 << ',' << r.holdout.f1 << ',' << r.holdout.soft_iou
                    << ',' << r.mean_abs_reward << '\n';
                std::printf("%-15s train_f1 %.4f holdout_f1 %.4f\n", std::string(to_string(r.variant)).c_str(),
                            r.train.f1, r.holdout.f1);
            }
            write_json(j, fs::path(ab_out) / "ablation.json");
        } else if (*rp) {
            const fs::path in = rp_in;
            const fs::path out = rp_out.empty() ? in : fs::path(rp_out);
            int rendered = 0;
            if (fs::exists(in / "robustness.csv")) {
                rendered += static_cast<int>(render_sweep_plots(read_sweep_csv(in / "robustness.csv"), out).size());
            }
            if (fs::exists(in / "lambda_rl.csv")) {
                Series train_s{"train F1", {}, {}}, hold_s{"holdout F1", {}, {}};
                for (const auto& r : read_lambda_csv(in / "lambda_rl.csv")) {
                    train_s.x.push_back(std::log10(r.lambda_rl));
                    train_s.y.push_back(r.train_f1);
                    hold_s.x.push_back(std::log10(r.lambda_rl));
                    hold_s.y.push_back(r.holdout_f1);
                }
                render_line_plot({train_s, hold_s}, {"F1 vs lambda_rl", "log10 lambda_rl", "F1"}, out / "lambda_rl.png");
                ++rendered;
            }
            if (fs::exists(in / "metrics.jsonl")) {
                render_metrics_plot(in / "metrics.jsonl", out / "losses.png");
                ++rendered;
            }
            if (rendered == 0) {
                throw UsageError("nothing to render in " + in.string());
            }
            std::cout << "rendered " << rendered << " plot(s) to " << out.string() << "\n";
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
