#include "testing.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>

#include "oracles.hpp"
#include "pixelcourt/datagen.hpp"
#include "pixelcourt/image_io.hpp"

using namespace pixelcourt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("pixelcourt_test_" + name);
    fs::remove_all(dir);
    return dir;
}

double mean_abs_diff(const ImagePlane& a, const ImagePlane& b) {
    double s = 0;
    for (size_t i = 0; i < a.pixels.size(); ++i) s += std::abs(a.pixels[i] - b.pixels[i]);
    return s / a.pixels.size();
}

// Distance (Chebyshev) from every pixel to the nearest mask transition.
bool within_two_of_transition(const BinaryMap& mask, int y, int x) {
    for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= mask.height || xx < 0 || xx >= mask.width) continue;
            for (int ey = -1; ey <= 1; ++ey) {
                for (int ex = -1; ex <= 1; ++ex) {
                    const int ny = yy + ey, nx = xx + ex;
                    if (ny < 0 || ny >= mask.height || nx < 0 || nx >= mask.width) continue;
                    if (mask.at(ny, nx) != mask.at(yy, xx)) return true;
                }
            }
        }
    }
    return false;
}

}  // namespace

TEST_SUITE("datagen") {
    TEST_CASE("generate_base is deterministic per seed") {
        const auto a = generate_base(0, 64, 64);
        const auto b = generate_base(0, 64, 64);
        CHECK(a.pixels == b.pixels);
        CHECK(a.height == 64);
        CHECK(a.width == 64);
        CHECK(a.channels == 3);
    }

    TEST_CASE("different seeds differ in at least 1% of pixels") {
        const auto a = generate_base(0, 64, 64);
        const auto b = generate_base(1, 64, 64);
        int differing = 0;
        for (int y = 0; y < 64; ++y) {
            for (int x = 0; x < 64; ++x) {
                bool diff = false;
                for (int c = 0; c < 3; ++c) diff |= a.at(c, y, x) != b.at(c, y, x);
                differing += diff;
            }
        }
        CHECK(differing >= 0.01 * 64 * 64);
    }

    TEST_CASE("sizes must be multiples of 16 and at least 32") {
        CHECK_THROWS_AS(generate_base(7, 40, 40), std::invalid_argument);
        CHECK_THROWS_AS(generate_base(7, 50, 50), std::invalid_argument);
        CHECK_THROWS_AS(generate_base(7, 16, 16), std::invalid_argument);
        CHECK_NOTHROW(generate_base(7, 48, 48));
        CHECK_NOTHROW(generate_base(7, 32, 64));
    }

    TEST_CASE("image values lie in [0, 1]") {
        for (uint64_t seed = 0; seed < 6; ++seed) {
            const auto s = tamper(generate_base(seed, 64, 64), static_cast<ManipulationKind>(seed % 3), seed);
            for (float v : s.image.pixels) {
                REQUIRE(v >= 0.0f);
                REQUIRE(v <= 1.0f);
            }
        }
    }

    TEST_CASE("tampered region area is within [2%, 40%]") {
        for (auto kind : {ManipulationKind::copy_move, ManipulationKind::splice, ManipulationKind::inpaint_sim}) {
            for (uint64_t seed = 0; seed < 20; ++seed) {
                const auto s = tamper(generate_base(seed, 64, 64), kind, seed);
                CAPTURE(to_string(kind));
                CAPTURE(seed);
                CHECK(s.mask.fraction() >= 0.02);
                CHECK(s.mask.fraction() <= 0.40);
                CHECK(s.manipulation_kind == kind);
            }
        }
    }

    TEST_CASE("tamper rejects pristine; pristine samples carry empty masks") {
        const auto base = generate_base(2, 64, 64);
        CHECK_THROWS_AS(tamper(base, ManipulationKind::pristine, 2), std::invalid_argument);
        const auto p = make_pristine(base, 2);
        CHECK(p.mask.count() == 0);
        CHECK(p.edge_gt.count() == 0);
        CHECK(p.manipulation_kind == ManipulationKind::pristine);
        CHECK(p.image.pixels == base.pixels);
    }

    TEST_CASE("splice is deterministic") {
        const auto base = generate_base(3, 64, 64);
        const auto a = tamper(base, ManipulationKind::splice, 3);
        const auto b = tamper(base, ManipulationKind::splice, 3);
        CHECK(a.image.pixels == b.image.pixels);
        CHECK(a.mask.values == b.mask.values);
        CHECK(a.edge_gt.values == b.edge_gt.values);
    }

    TEST_CASE("tampering changes pixels inside the mask") {
        for (auto kind : {ManipulationKind::copy_move, ManipulationKind::splice, ManipulationKind::inpaint_sim}) {
            const auto base = generate_base(5, 64, 64);
            const auto s = tamper(base, kind, 5);
            double inside = 0, outside = 0;
            for (int y = 0; y < 64; ++y) {
                for (int x = 0; x < 64; ++x) {
                    double d = 0;
                    for (int c = 0; c < 3; ++c) d += std::abs(s.image.at(c, y, x) - base.at(c, y, x));
                    (s.mask.at(y, x) ? inside : outside) += d;
                }
            }
            CAPTURE(to_string(kind));
            CHECK(inside > 0.0);
            CHECK(outside == 0.0);
        }
    }

    TEST_CASE("edge_from_mask degenerate masks") {
        auto zeros = BinaryMap::zeros(32, 32);
        CHECK(edge_from_mask(zeros).count() == 0);
        auto ones = BinaryMap::zeros(32, 32);
        std::fill(ones.values.begin(), ones.values.end(), 1);
        CHECK(edge_from_mask(ones).count() == 0);
    }

    TEST_CASE("edge of an 8x8 square matches a brute-force neighbourhood scan") {
        auto m = BinaryMap::zeros(32, 32);
        for (int y = 12; y < 20; ++y)
            for (int x = 10; x < 18; ++x) m.at(y, x) = 1;
        const auto e = edge_from_mask(m);
        CHECK(static_cast<int>(e.count()) == oracle::edge_count(m.values, 32, 32));
        CHECK(e.count() == 64u);  // 10x10 - 8x8 outside plus 8x8 - 6x6 inside
    }

    TEST_CASE("edge maps stay within 2 px of mask transitions") {
        for (uint64_t seed = 0; seed < 9; ++seed) {
            const auto s = tamper(generate_base(seed, 64, 64), static_cast<ManipulationKind>(seed % 3), seed);
            CHECK(s.edge_gt.count() > 0);
            for (int y = 0; y < 64; ++y) {
                for (int x = 0; x < 64; ++x) {
                    if (s.edge_gt.at(y, x)) REQUIRE(within_two_of_transition(s.mask, y, x));
                }
            }
            CHECK(edge_from_mask(s.mask).values == s.edge_gt.values);
        }
    }

    TEST_CASE("zero-severity noise and blur are identities") {
        const auto img = generate_base(4, 64, 64);
        CHECK(perturb(img, {PerturbationKind::gaussian_blur, 0.0}, 1).pixels == img.pixels);
        CHECK(perturb(img, {PerturbationKind::gaussian_noise, 0.0}, 1).pixels == img.pixels);
    }

    TEST_CASE("stronger JPEG compression costs more fidelity") {
        const auto img = generate_base(4, 64, 64);
        const double e95 = mean_abs_diff(img, perturb(img, {PerturbationKind::jpeg, 95}, 0));
        const double e10 = mean_abs_diff(img, perturb(img, {PerturbationKind::jpeg, 10}, 0));
        CHECK(e10 > e95);
    }

    TEST_CASE("perturbations preserve shape and range and are seed-deterministic") {
        const auto img = generate_base(8, 64, 64);
        for (const Perturbation p : {Perturbation{PerturbationKind::jpeg, 30}, Perturbation{PerturbationKind::gaussian_noise, 0.2},
                                     Perturbation{PerturbationKind::gaussian_blur, 3.0}}) {
            const auto out = perturb(img, p, 11);
            CHECK(out.height == img.height);
            CHECK(out.width == img.width);
            CHECK(out.channels == img.channels);
            CHECK(*std::min_element(out.pixels.begin(), out.pixels.end()) >= 0.0f);
            CHECK(*std::max_element(out.pixels.begin(), out.pixels.end()) <= 1.0f);
            CHECK(perturb(img, p, 11).pixels == out.pixels);
        }
    }

    TEST_CASE("out-of-range severities are rejected") {
        const auto img = generate_base(8, 32, 32);
        CHECK_THROWS_AS(perturb(img, {PerturbationKind::jpeg, 5}, 0), std::invalid_argument);
        CHECK_THROWS_AS(perturb(img, {PerturbationKind::jpeg, 101}, 0), std::invalid_argument);
        CHECK_THROWS_AS(perturb(img, {PerturbationKind::gaussian_noise, 0.3}, 0), std::invalid_argument);
        CHECK_THROWS_AS(perturb(img, {PerturbationKind::gaussian_noise, -0.1}, 0), std::invalid_argument);
        CHECK_THROWS_AS(perturb(img, {PerturbationKind::gaussian_blur, 3.5}, 0), std::invalid_argument);
    }

    TEST_CASE("gaussian kernel size is 2*ceil(3 sigma)+1 and normalized") {
        for (double sigma : {0.5, 1.0, 1.7, 3.0}) {
            const auto k = gaussian_kernel(sigma);
            CHECK(k.size() == static_cast<size_t>(2 * std::ceil(3 * sigma) + 1));
            double sum = 0;
            for (double v : k) sum += v;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(k[k.size() / 2] == *std::max_element(k.begin(), k.end()));
        }
    }

    TEST_CASE("corpus on disk is byte-identical across runs and round-trips") {
        const auto a = scratch("corpus_a");
        const auto b = scratch("corpus_b");
        CorpusOptions opts{6, 64, 0, 3};
        const auto ra = write_corpus(opts, a);
        write_corpus(opts, b);
        REQUIRE(ra.size() == 6);
        CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
        for (const auto& r : ra) {
            CHECK(slurp(a / r.image) == slurp(b / r.image));
            CHECK(slurp(a / r.mask) == slurp(b / r.mask));
            CHECK(slurp(a / r.edge) == slurp(b / r.edge));
        }
        const auto back = read_manifest(a / "manifest.jsonl");
        REQUIRE(back.size() == ra.size());
        for (size_t i = 0; i < back.size(); ++i) {
            CHECK(back[i].image == ra[i].image);
            CHECK(back[i].kind == ra[i].kind);
            CHECK(back[i].seed == ra[i].seed);
        }
        CHECK(back[2].kind == ManipulationKind::pristine);

        const auto samples = load_corpus(a / "manifest.jsonl");
        for (int i = 0; i < 6; ++i) {
            const auto expect = corpus_sample(opts, i);
            CHECK(samples[i].mask.values == expect.mask.values);
            CHECK(samples[i].edge_gt.values == expect.edge_gt.values);
            CHECK(mean_abs_diff(samples[i].image, expect.image) <= 1.0 / 255.0);
        }
        fs::remove_all(a);
        fs::remove_all(b);
    }

    TEST_CASE("derive_seed spreads indices") {
        CHECK(derive_seed(0, 0) != derive_seed(0, 1));
        CHECK(derive_seed(0, 1) != derive_seed(1, 0));
        CHECK(derive_seed(5, 9) == derive_seed(5, 9));
    }
}
