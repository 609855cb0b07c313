#include "testing.hpp"

#include "pixelcourt/encoder.hpp"

using namespace pixelcourt;

TEST_SUITE("encoder") {
    TEST_CASE("pyramid shapes at 64x64") {
        torch::manual_seed(0);
        Encoder enc(std::array<int, 4>{16, 32, 64, 128});
        const auto p = enc(torch::rand({2, 3, 64, 64}));
        const int64_t sizes[] = {32, 16, 8, 4};
        const int64_t channels[] = {16, 32, 64, 128};
        for (int k = 0; k < 4; ++k) {
            CHECK(p.levels[k].sizes() == at::IntArrayRef({2, channels[k], sizes[k], sizes[k]}));
            CHECK(64 / FeaturePyramid::strides[k] == sizes[k]);
        }
    }

    TEST_CASE("shape contract holds for other legal sizes") {
        torch::manual_seed(0);
        Encoder enc(std::array<int, 4>{8, 8, 16, 16});
        for (auto [h, w] : {std::pair{32, 32}, std::pair{48, 80}, std::pair{16, 96}}) {
            const auto p = enc(torch::rand({1, 3, h, w}));
            for (int k = 0; k < 4; ++k) {
                CHECK(p.levels[k].size(2) == h / FeaturePyramid::strides[k]);
                CHECK(p.levels[k].size(3) == w / FeaturePyramid::strides[k]);
            }
        }
    }

    TEST_CASE("illegal sizes are rejected") {
        Encoder enc(std::array<int, 4>{8, 8, 16, 16});
        CHECK_THROWS_AS(enc(torch::rand({1, 3, 40, 64})), std::invalid_argument);
        CHECK_THROWS_AS(enc(torch::rand({1, 3, 64, 50})), std::invalid_argument);
        CHECK_THROWS_AS(check_image_batch(torch::rand({3, 64, 64})), std::invalid_argument);
    }

    TEST_CASE("zero image gives finite features") {
        torch::manual_seed(1);
        Encoder enc(std::array<int, 4>{16, 32, 64, 128});
        enc->eval();
        const auto p = enc(torch::zeros({1, 3, 64, 64}));
        for (const auto& l : p.levels) CHECK(torch::isfinite(l).all().item<bool>());
    }

    TEST_CASE("eval mode is deterministic") {
        torch::manual_seed(2);
        Encoder enc(std::array<int, 4>{16, 32, 64, 128});
        enc->eval();
        const auto x = torch::rand({2, 3, 64, 64});
        const auto a = enc(x);
        const auto b = enc(x);
        for (int k = 0; k < 4; ++k) CHECK(torch::equal(a.levels[k], b.levels[k]));
    }

    TEST_CASE("stream adapters differ after init and vanish with zero weights") {
        torch::manual_seed(3);
        Encoder enc(std::array<int, 4>{16, 32, 64, 128});
        StreamAdapter t(64, 64), r(64, 64);
        const auto p = enc(torch::rand({1, 3, 64, 64}));
        const auto mf = t(p);
        const auto af = r(p);
        CHECK(mf.sizes() == at::IntArrayRef({1, 64, 8, 8}));
        CHECK(mf.sizes() == af.sizes());
        CHECK((mf - af).abs().max().item<double>() > 1e-3);

        torch::NoGradGuard guard;
        t->conv->weight.zero_();
        t->conv->bias.zero_();
        CHECK(t(p).abs().max().item<double>() == 0.0);
    }

    TEST_CASE("one stream's loss reaches the shared encoder") {
        torch::manual_seed(4);
        Encoder enc(std::array<int, 4>{16, 32, 64, 128});
        StreamAdapter t(64, 64), r(64, 64);
        const auto p = enc(torch::rand({2, 3, 64, 64}));
        t(p).pow(2).mean().backward();
        double total = 0;
        for (const auto& param : enc->parameters()) {
            if (param.grad().defined()) total += param.grad().abs().sum().item<double>();
        }
        CHECK(total > 0.0);
        for (const auto& param : r->parameters()) CHECK_FALSE(param.grad().defined());
    }
}
