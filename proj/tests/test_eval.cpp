#include "testing.hpp"

#include "fixtures.hpp"
#include "pixelcourt/eval.hpp"
#include "pixelcourt/image_io.hpp"

using namespace pixelcourt;

namespace {

PixelCourt tiny_model(uint64_t seed = 0) {
    auto m = build_model(fixture::tiny_config(seed).model, seed);
    m->eval();
    return m;
}

}  // namespace

TEST_SUITE("eval") {
    TEST_CASE("severity-0 rows equal the unperturbed F1 exactly") {
        auto model = tiny_model(1);
        const auto samples = fixture::corpus(3, 32, 4);
        const auto clean = evaluate(model, samples);
        const auto grid = default_robustness_grid();
        const auto rows = robustness_sweep(model, samples, grid, 7);
        REQUIRE(rows.size() == grid.size());
        int zero_rows = 0;
        for (const auto& r : rows) {
            if (r.severity == 0.0) {
                ++zero_rows;
                CHECK(r.f1 == clean.f1);
                CHECK(r.soft_iou == clean.soft_iou);
            }
            CHECK(r.n_images == 3);
        }
        CHECK(zero_rows == 2);
    }

    TEST_CASE("the JPEG sweep has four rows at qualities 95, 70, 50, 30") {
        std::vector<double> q;
        for (const auto& c : default_robustness_grid()) {
            if (c.label == "jpeg") q.push_back(c.perturbation.severity);
        }
        CHECK((q == std::vector<double>{95, 70, 50, 30}));
        const auto osn = social_media_presets();
        REQUIRE(osn.size() == 4);
        for (const auto& c : osn) {
            CHECK(c.label.rfind("osn:", 0) == 0);
            CHECK(c.perturbation.kind == PerturbationKind::jpeg);
        }
    }

    TEST_CASE("sweep rows are pure functions of model, samples, cell and seed") {
        auto model = tiny_model(2);
        const auto samples = fixture::corpus(2, 32, 9);
        std::vector<SweepCell> cells = {{"gaussian_noise", {PerturbationKind::gaussian_noise, 0.1}},
                                        {"jpeg", {PerturbationKind::jpeg, 50}}};
        const auto a = robustness_sweep(model, samples, cells, 3);
        const auto b = robustness_sweep(model, samples, cells, 3);
        std::vector<SweepCell> reversed(cells.rbegin(), cells.rend());
        const auto c = robustness_sweep(model, samples, reversed, 3);
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].f1 == b[i].f1);
            CHECK(a[i].soft_iou == b[i].soft_iou);
            CHECK(a[i].f1 == c[a.size() - 1 - i].f1);
        }
    }

    TEST_CASE("sweep CSV round trip and plots") {
        const auto dir = fixture::scratch("sweep_csv");
        std::vector<SweepRow> rows = {{"jpeg", 95, 0.8, 0.7, 4},        {"jpeg", 30, 0.6, 0.5, 4},
                                      {"gaussian_noise", 0, 0.8, 0.7, 4}, {"osn:wechat", 50, 0.55, 0.45, 4},
                                      {"osn:weibo", 80, 0.65, 0.5, 4}};
        write_sweep_csv(rows, dir / "r.csv");
        std::ifstream in(dir / "r.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "kind,severity,f1,soft_iou,n_images");
        const auto back = read_sweep_csv(dir / "r.csv");
        REQUIRE(back.size() == rows.size());
        for (size_t i = 0; i < rows.size(); ++i) {
            CHECK(back[i].kind == rows[i].kind);
            CHECK(back[i].severity == rows[i].severity);
            CHECK(back[i].f1 == rows[i].f1);
            CHECK(back[i].n_images == rows[i].n_images);
        }
        const auto plots = render_sweep_plots(rows, dir);
        CHECK(plots.size() == 3);
        for (const auto& p : plots) {
            CHECK(std::filesystem::exists(p));
            CHECK(std::filesystem::file_size(p) > 0);
        }
        CHECK(std::filesystem::exists(dir / "social_media.png"));
    }

    TEST_CASE("calibration: constructed perfect case has zero ECE") {
        std::vector<float> rel, correct;
        for (int k = 0; k < 10; ++k) {
            const double centre = (k + 0.5) / 10.0;
            const int hits = static_cast<int>(std::lround(centre * 100));
            for (int i = 0; i < 100; ++i) {
                rel.push_back(static_cast<float>(centre));
                correct.push_back(i < hits ? 1.0f : 0.0f);
            }
        }
        const auto report = calibration_report(torch::tensor(rel), torch::tensor(correct));
        CHECK(report.total == 1000);
        CHECK(report.bins.size() == 10);
        CHECK(report.ece <= 1e-6);
        for (const auto& b : report.bins) CHECK(std::abs(b.mean_rel - b.accuracy) <= 1e-6);
    }

    TEST_CASE("calibration: empty bins omitted, boundaries exact") {
        auto rel = torch::tensor({0.0, 0.05, 0.1, 0.3, 0.95, 1.0}, torch::kFloat64);
        auto correct = torch::tensor({0.0, 0.0, 1.0, 1.0, 1.0, 1.0}, torch::kFloat64);
        const auto report = calibration_report(rel, correct);
        REQUIRE(report.bins.size() == 4);
        CHECK(report.bins[0].lower == 0.0);
        CHECK(report.bins[0].upper == 0.1);
        CHECK(report.bins[0].count == 2);
        CHECK(report.bins[1].lower == 0.1);  // 0.1 opens the second bin
        CHECK(report.bins[1].count == 1);
        CHECK(report.bins[2].lower == 0.3);
        CHECK(report.bins[3].lower == 0.9);
        CHECK(report.bins[3].upper == 1.0);
        CHECK(report.bins[3].count == 2);  // 1.0 lands in the closed last bin
        for (int k = 0; k <= 10; ++k) CHECK(static_cast<double>(k) / 10.0 == doctest::Approx(k * 0.1).epsilon(1e-15));
        // ECE by hand: bin0 |0 - 0.025| 2/6, bin1 |1 - 0.1| 1/6, bin3 |1 - 0.3| 1/6, bin9 |1 - 0.975| 2/6
        const double ece = (2 * 0.025 + 0.9 + 0.7 + 2 * 0.025) / 6.0;
        CHECK(report.ece == doctest::Approx(ece).epsilon(1e-12));
        const auto j = to_json(report);
        CHECK(j["bins"].size() == 4);
    }

    TEST_CASE("calibration from a model covers every pixel") {
        auto model = tiny_model(3);
        const auto samples = fixture::corpus(2, 32, 1);
        const auto report = calibration_report(model, samples);
        CHECK(report.total == 2 * 32 * 32);
        int64_t n = 0;
        for (const auto& b : report.bins) n += b.count;
        CHECK(n == report.total);
    }

    TEST_CASE("the lambda_rl grid and sweep harness") {
        CHECK((kLambdaRlGrid == std::vector<double>{0.01, 0.05, 0.1, 0.5, 1.0}));
        auto cfg = fixture::tiny_config(5);
        cfg.max_steps = 2;
        const auto train_set = fixture::corpus(4, 32, 1);
        const auto holdout = fixture::corpus(2, 32, 2);
        const std::vector<double> values = {0.1, 1.0};
        const auto rows = lambda_rl_sweep(cfg, train_set, holdout, values);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].lambda_rl == 0.1);
        CHECK(rows[1].lambda_rl == 1.0);
        const auto again = lambda_rl_sweep(cfg, train_set, holdout, std::vector<double>{0.1});
        CHECK(again[0].holdout_f1 == rows[0].holdout_f1);
        CHECK(again[0].final_loss == rows[0].final_loss);

        const auto dir = fixture::scratch("lambda_csv");
        write_lambda_csv(rows, dir / "l.csv");
        const auto back = read_lambda_csv(dir / "l.csv");
        REQUIRE(back.size() == 2);
        CHECK(back[1].lambda_rl == 1.0);
        CHECK(back[0].holdout_f1 == doctest::Approx(rows[0].holdout_f1).epsilon(1e-9));  // 10 significant digits on disk
    }

    TEST_CASE("ablation toggles") {
        const auto base = fixture::tiny_config(0);
        CHECK(apply_variant(base, Variant::no_debate).model.bypass_debate);
        CHECK(apply_variant(base, Variant::no_judge).model.judge_disabled);
        CHECK(apply_variant(base, Variant::no_rl, 1).model.fixed_action == 1);
        CHECK(apply_variant(base, Variant::no_reliability).reliability_weight == 0.0);
        CHECK(to_text(apply_variant(base, Variant::full)) == to_text(base));
        for (auto v : kAllVariants) CHECK(parse_variant(to_string(v)) == v);
        CHECK_THROWS_AS(parse_variant("without_everything"), std::invalid_argument);
    }

    TEST_CASE("without the judge the verdict is the baseline") {
        auto cfg = apply_variant(fixture::tiny_config(0), Variant::no_judge);
        auto model = build_model(cfg.model, 0);
        auto batch = make_batch(fixture::corpus(2, 32, 3));
        torch::NoGradGuard g;
        auto out = model->forward(batch.images);
        CHECK(torch::equal(out.PM, out.B));
        CHECK(reward(out.PM, out.B, batch.masks).abs().max().item<double>() == 0.0);
    }

    TEST_CASE("every variant produces a complete record") {
        auto cfg = fixture::tiny_config(0);
        cfg.max_steps = 2;
        const auto train_set = fixture::corpus(4, 32, 1);
        const auto holdout = fixture::corpus(2, 32, 2);
        const auto rows = run_ablation(cfg, train_set, holdout);
        REQUIRE(rows.size() == kAllVariants.size());
        for (const auto& r : rows) {
            CHECK(r.train.n_images == 4);
            CHECK(r.holdout.n_images == 2);
            CHECK(std::isfinite(r.holdout.f1));
            const auto j = to_json(r);
            CHECK(j.contains("variant"));
            if (r.variant == Variant::no_judge) CHECK(r.mean_abs_reward == 0.0);
        }
    }
}
