#include "pixelcourt/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "pixelcourt/image_io.hpp"

namespace pixelcourt {

namespace {

using Rng = std::mt19937_64;

struct Point {
    double x;
    double y;
};

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

void check_size(int height, int width) {
    if (height < 32 || width < 32 || height % 16 != 0 || width % 16 != 0) {
        throw std::invalid_argument("image size must be >= 32 and a multiple of 16, got " +
                                    std::to_string(height) + "x" + std::to_string(width));
    }
}

// Even-odd rule at pixel centers.
BinaryMap fill_polygon(const std::vector<Point>& poly, int height, int width) {
    BinaryMap out = BinaryMap::zeros(height, width);
    const size_t n = poly.size();
    for (int y = 0; y < height; ++y) {
        const double py = y + 0.5;
        for (int x = 0; x < width; ++x) {
            const double px = x + 0.5;
            bool inside = false;
            for (size_t i = 0, j = n - 1; i < n; j = i++) {
                const Point& a = poly[i];
                const Point& b = poly[j];
                if ((a.y > py) != (b.y > py)) {
                    const double xi = (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x;
                    if (px < xi) {
                        inside = !inside;
                    }
                }
            }
            out.at(y, x) = inside ? 1 : 0;
        }
    }
    return out;
}

BinaryMap fill_ellipse(Point center, double rx, double ry, double angle, int height, int width) {
    BinaryMap out = BinaryMap::zeros(height, width);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = x + 0.5 - center.x;
            const double dy = y + 0.5 - center.y;
            const double u = (c * dx + s * dy) / rx;
            const double v = (-s * dx + c * dy) / ry;
            out.at(y, x) = (u * u + v * v <= 1.0) ? 1 : 0;
        }
    }
    return out;
}

std::vector<Point> convex_polygon(Rng& rng, int vertices) {
    std::vector<double> angles(vertices);
    for (auto& a : angles) {
        a = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    }
    std::sort(angles.begin(), angles.end());
    std::vector<Point> poly;
    poly.reserve(vertices);
    for (double a : angles) {
        const double r = uniform(rng, 0.75, 1.0);
        poly.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return poly;
}

double polygon_area(const std::vector<Point>& poly) {
    double acc = 0.0;
    for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        acc += poly[j].x * poly[i].y - poly[i].x * poly[j].y;
    }
    return std::abs(acc) * 0.5;
}

// One convex region (polygon or ellipse) whose area fraction lies in [0.02, 0.40].
BinaryMap random_region(Rng& rng, int height, int width) {
    const double total = static_cast<double>(height) * width;
    double target = uniform(rng, 0.04, 0.30);
    const bool use_ellipse = uniform(rng, 0.0, 1.0) < 0.5;
    const double max_extent = 0.45 * std::min(height, width);

    for (int attempt = 0; attempt < 20; ++attempt) {
        BinaryMap region;
        if (use_ellipse) {
            const double aspect = uniform(rng, 0.5, 2.0);
            const double area = target * total;
            double rx = std::sqrt(area * aspect / std::numbers::pi);
            double ry = std::sqrt(area / (aspect * std::numbers::pi));
            rx = std::min(rx, max_extent);
            ry = std::min(ry, max_extent);
            const double reach = std::max(rx, ry);
            const Point center{uniform(rng, reach + 1.0, width - reach - 1.0),
                               uniform(rng, reach + 1.0, height - reach - 1.0)};
            region = fill_ellipse(center, rx, ry, uniform(rng, 0.0, std::numbers::pi), height, width);
        } else {
            auto poly = convex_polygon(rng, uniform_int(rng, 5, 9));
            double scale = std::sqrt(target * total / polygon_area(poly));
            scale = std::min(scale, max_extent);
            const Point center{uniform(rng, scale + 1.0, width - scale - 1.0),
                               uniform(rng, scale + 1.0, height - scale - 1.0)};
            for (auto& p : poly) {
                p = {center.x + scale * p.x, center.y + scale * p.y};
            }
            region = fill_polygon(poly, height, width);
        }
        const double frac = region.fraction();
        if (frac >= 0.02 && frac <= 0.40) {
            return region;
        }
        target = std::clamp(target * (0.15 / std::max(frac, 1e-3)), 0.04, 0.30);
    }
    const double rx = 0.2 * width;
    const double ry = 0.2 * height;
    return fill_ellipse({width / 2.0, height / 2.0}, rx, ry, 0.0, height, width);
}

float bilinear(const ImagePlane& img, int c, double y, double x) {
    y = std::clamp(y, 0.0, img.height - 1.0);
    x = std::clamp(x, 0.0, img.width - 1.0);
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const double fy = y - y0;
    const double fx = x - x0;
    const double top = (1 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1);
    const double bottom = (1 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1);
    return static_cast<float>((1 - fy) * top + fy * bottom);
}

Point region_center(const BinaryMap& region) {
    double sx = 0.0;
    double sy = 0.0;
    size_t n = 0;
    for (int y = 0; y < region.height; ++y) {
        for (int x = 0; x < region.width; ++x) {
            if (region.at(y, x)) {
                sx += x;
                sy += y;
                ++n;
            }
        }
    }
    return {sx / std::max<size_t>(n, 1), sy / std::max<size_t>(n, 1)};
}

// Resampled paste: every masked pixel is read from `source` around a displaced, rescaled center.
void paste_resampled(ImagePlane& out, const ImagePlane& source, const BinaryMap& region, Rng& rng,
                     bool require_displacement) {
    const Point dst = region_center(region);
    Point src{};
    const double min_shift = 0.2 * std::min(out.height, out.width);
    for (int attempt = 0; attempt < 64; ++attempt) {
        src = {uniform(rng, 0.2 * out.width, 0.8 * out.width), uniform(rng, 0.2 * out.height, 0.8 * out.height)};
        if (!require_displacement || std::hypot(src.x - dst.x, src.y - dst.y) >= min_shift) {
            break;
        }
    }
    const double scale = uniform(rng, 0.8, 1.25);
    const double gain = uniform(rng, 0.9, 1.1);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            if (!region.at(y, x)) {
                continue;
            }
            const double sy = src.y + (y - dst.y) / scale;
            const double sx = src.x + (x - dst.x) / scale;
            for (int c = 0; c < out.channels; ++c) {
                out.at(c, y, x) = std::clamp(static_cast<float>(gain * bilinear(source, c, sy, sx)), 0.0f, 1.0f);
            }
        }
    }
}

// Fill the region with the mean of its one-pixel outer ring, then diffuse with 8 masked 5x5 box passes.
void inpaint_region(ImagePlane& out, const BinaryMap& region) {
    const BinaryMap ring = edge_from_mask(region);
    for (int c = 0; c < out.channels; ++c) {
        double sum = 0.0;
        size_t n = 0;
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                if (ring.at(y, x) && !region.at(y, x)) {
                    sum += out.at(c, y, x);
                    ++n;
                }
            }
        }
        const float fill = n ? static_cast<float>(sum / n) : 0.5f;
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                if (region.at(y, x)) {
                    out.at(c, y, x) = fill;
                }
            }
        }
    }
    for (int iter = 0; iter < 8; ++iter) {
        const ImagePlane prev = out;
        for (int c = 0; c < out.channels; ++c) {
            for (int y = 0; y < out.height; ++y) {
                for (int x = 0; x < out.width; ++x) {
                    if (!region.at(y, x)) {
                        continue;
                    }
                    double acc = 0.0;
                    int n = 0;
                    for (int dy = -2; dy <= 2; ++dy) {
                        for (int dx = -2; dx <= 2; ++dx) {
                            const int yy = y + dy;
                            const int xx = x + dx;
                            if (yy >= 0 && yy < out.height && xx >= 0 && xx < out.width) {
                                acc += prev.at(c, yy, xx);
                                ++n;
                            }
                        }
                    }
                    out.at(c, y, x) = static_cast<float>(acc / n);
                }
            }
        }
    }
}

int reflect_index(int i, int n) {
    if (n == 1) {
        return 0;
    }
    while (i < 0 || i >= n) {
        i = i < 0 ? -i : 2 * (n - 1) - i;
    }
    return i;
}

ImagePlane gaussian_blur(const ImagePlane& image, double sigma) {
    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    ImagePlane tmp = image;
    ImagePlane out = image;
    for (int c = 0; c < image.channels; ++c) {
        for (int y = 0; y < image.height; ++y) {
            for (int x = 0; x < image.width; ++x) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    acc += kernel[k + radius] * image.at(c, y, reflect_index(x + k, image.width));
                }
                tmp.at(c, y, x) = static_cast<float>(acc);
            }
        }
        for (int y = 0; y < image.height; ++y) {
            for (int x = 0; x < image.width; ++x) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    acc += kernel[k + radius] * tmp.at(c, reflect_index(y + k, image.height), x);
                }
                out.at(c, y, x) = std::clamp(static_cast<float>(acc), 0.0f, 1.0f);
            }
        }
    }
    return out;
}

constexpr std::array<ManipulationKind, 3> kTamperCycle = {ManipulationKind::copy_move, ManipulationKind::splice,
                                                          ManipulationKind::inpaint_sim};

char kind_tag(ManipulationKind kind) {
    switch (kind) {
        case ManipulationKind::copy_move: return 'c';
        case ManipulationKind::splice: return 's';
        case ManipulationKind::inpaint_sim: return 'i';
        case ManipulationKind::pristine: return 'p';
    }
    return '?';
}

}  // namespace

ImagePlane ImagePlane::zeros(int height, int width, int channels) {
    ImagePlane img;
    img.height = height;
    img.width = width;
    img.channels = channels;
    img.pixels.assign(static_cast<size_t>(channels) * height * width, 0.0f);
    return img;
}

size_t BinaryMap::count() const { return static_cast<size_t>(std::count(values.begin(), values.end(), uint8_t{1})); }

BinaryMap BinaryMap::zeros(int height, int width) {
    BinaryMap m;
    m.height = height;
    m.width = width;
    m.values.assign(static_cast<size_t>(height) * width, 0);
    return m;
}

std::string_view to_string(ManipulationKind kind) {
    switch (kind) {
        case ManipulationKind::copy_move: return "copy_move";
        case ManipulationKind::splice: return "splice";
        case ManipulationKind::inpaint_sim: return "inpaint_sim";
        case ManipulationKind::pristine: return "pristine";
    }
    return "unknown";
}

ManipulationKind parse_manipulation_kind(std::string_view name) {
    for (auto kind : {ManipulationKind::copy_move, ManipulationKind::splice, ManipulationKind::inpaint_sim,
                      ManipulationKind::pristine}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown manipulation kind: " + std::string(name));
}

std::string_view to_string(PerturbationKind kind) {
    switch (kind) {
        case PerturbationKind::jpeg: return "jpeg";
        case PerturbationKind::gaussian_noise: return "gaussian_noise";
        case PerturbationKind::gaussian_blur: return "gaussian_blur";
    }
    return "unknown";
}

PerturbationKind parse_perturbation_kind(std::string_view name) {
    if (name == "jpeg") return PerturbationKind::jpeg;
    if (name == "gaussian_noise" || name == "noise") return PerturbationKind::gaussian_noise;
    if (name == "gaussian_blur" || name == "blur") return PerturbationKind::gaussian_blur;
    throw std::invalid_argument("unknown perturbation kind: " + std::string(name));
}

void Perturbation::validate() const {
    bool ok = std::isfinite(severity);
    switch (kind) {
        case PerturbationKind::jpeg: ok = ok && severity >= 10.0 && severity <= 100.0; break;
        case PerturbationKind::gaussian_noise: ok = ok && severity >= 0.0 && severity <= 0.2; break;
        case PerturbationKind::gaussian_blur: ok = ok && severity >= 0.0 && severity <= 3.0; break;
    }
    if (!ok) {
        throw std::invalid_argument("severity " + std::to_string(severity) + " out of range for " +
                                    std::string(to_string(kind)));
    }
}

uint64_t derive_seed(uint64_t corpus_seed, uint64_t index) {
    // splitmix64 finalizer
    uint64_t z = corpus_seed * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return (z ^ (z >> 31)) >> 1;
}

ImagePlane generate_base(uint64_t seed, int height, int width) {
    check_size(height, width);
    Rng rng(seed);
    ImagePlane img = ImagePlane::zeros(height, width);
    img.provenance = "base:seed=" + std::to_string(seed);

    std::array<double, 3> c0{};
    std::array<double, 3> c1{};
    for (int c = 0; c < 3; ++c) {
        c0[c] = uniform(rng, 0.1, 0.9);
        c1[c] = uniform(rng, 0.1, 0.9);
    }
    const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double t = std::clamp((x / double(width) - 0.5) * ct + (y / double(height) - 0.5) * st + 0.5, 0.0, 1.0);
            for (int c = 0; c < 3; ++c) {
                img.at(c, y, x) = static_cast<float>((1 - t) * c0[c] + t * c1[c]);
            }
        }
    }

    // value noise, three octaves with smoothstep interpolation
    std::array<double, 3> tint{};
    for (auto& t : tint) {
        t = uniform(rng, 0.5, 1.0);
    }
    std::vector<double> texture(static_cast<size_t>(height) * width, 0.0);
    double amplitude = 1.0;
    for (int cells : {4, 8, 16}) {
        std::vector<double> lattice(static_cast<size_t>(cells + 1) * (cells + 1));
        for (auto& v : lattice) {
            v = uniform(rng, -1.0, 1.0);
        }
        for (int y = 0; y < height; ++y) {
            const double gy = y * double(cells) / height;
            const int iy = static_cast<int>(gy);
            const double fy = smoothstep(gy - iy);
            for (int x = 0; x < width; ++x) {
                const double gx = x * double(cells) / width;
                const int ix = static_cast<int>(gx);
                const double fx = smoothstep(gx - ix);
                auto L = [&](int r, int c) { return lattice[static_cast<size_t>(r) * (cells + 1) + c]; };
                const double top = (1 - fx) * L(iy, ix) + fx * L(iy, ix + 1);
                const double bottom = (1 - fx) * L(iy + 1, ix) + fx * L(iy + 1, ix + 1);
                texture[static_cast<size_t>(y) * width + x] += amplitude * ((1 - fy) * top + fy * bottom);
            }
        }
        amplitude *= 0.5;
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(c, y, x) += static_cast<float>(0.12 * tint[c] * texture[static_cast<size_t>(y) * width + x]);
            }
        }
    }

    const int polygons = uniform_int(rng, 3, 6);
    for (int k = 0; k < polygons; ++k) {
        auto poly = convex_polygon(rng, uniform_int(rng, 3, 7));
        const double radius = uniform(rng, 0.1, 0.3) * std::min(height, width);
        const Point center{uniform(rng, 0.0, width), uniform(rng, 0.0, height)};
        for (auto& p : poly) {
            p = {center.x + radius * p.x, center.y + radius * p.y};
        }
        const BinaryMap fill = fill_polygon(poly, height, width);
        std::array<double, 3> color{};
        for (auto& v : color) {
            v = uniform(rng, 0.0, 1.0);
        }
        const double alpha = uniform(rng, 0.5, 0.9);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                if (fill.at(y, x)) {
                    for (int c = 0; c < 3; ++c) {
                        img.at(c, y, x) = static_cast<float>((1 - alpha) * img.at(c, y, x) + alpha * color[c]);
                    }
                }
            }
        }
    }

    std::normal_distribution<double> grain(0.0, 0.02);
    for (auto& v : img.pixels) {
        v = std::clamp(static_cast<float>(v + grain(rng)), 0.0f, 1.0f);
    }
    return img;
}

Sample tamper(const ImagePlane& base, ManipulationKind kind, uint64_t seed) {
    if (kind == ManipulationKind::pristine) {
        throw std::invalid_argument("tamper: kind must not be pristine");
    }
    check_size(base.height, base.width);
    Rng rng(seed ^ (0xA5A5A5A5ULL * (static_cast<uint64_t>(kind) + 1)));

    Sample sample;
    sample.manipulation_kind = kind;
    sample.seed = seed;
    sample.mask = random_region(rng, base.height, base.width);
    sample.image = base;

    switch (kind) {
        case ManipulationKind::copy_move: paste_resampled(sample.image, base, sample.mask, rng, true); break;
        case ManipulationKind::splice: {
            const ImagePlane donor = generate_base(seed + 1, base.height, base.width);
            paste_resampled(sample.image, donor, sample.mask, rng, false);
            break;
        }
        case ManipulationKind::inpaint_sim: inpaint_region(sample.image, sample.mask); break;
        case ManipulationKind::pristine: break;
    }
    sample.image.provenance = base.provenance + ";" + std::string(to_string(kind)) + ":seed=" + std::to_string(seed);
    sample.edge_gt = edge_from_mask(sample.mask);
    return sample;
}

Sample make_pristine(const ImagePlane& base, uint64_t seed) {
    Sample sample;
    sample.image = base;
    sample.mask = BinaryMap::zeros(base.height, base.width);
    sample.edge_gt = BinaryMap::zeros(base.height, base.width);
    sample.manipulation_kind = ManipulationKind::pristine;
    sample.seed = seed;
    return sample;
}

BinaryMap edge_from_mask(const BinaryMap& mask) {
    BinaryMap edge = BinaryMap::zeros(mask.height, mask.width);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            uint8_t lo = 1;
            uint8_t hi = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = y + dy;
                    const int xx = x + dx;
                    if (yy < 0 || yy >= mask.height || xx < 0 || xx >= mask.width) {
                        continue;
                    }
                    lo = std::min(lo, mask.at(yy, xx));
                    hi = std::max(hi, mask.at(yy, xx));
                }
            }
            edge.at(y, x) = static_cast<uint8_t>(hi - lo);
        }
    }
    return edge;
}

std::vector<double> gaussian_kernel(double sigma) {
    if (sigma <= 0.0) {
        return {1.0};
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + radius];
    }
    for (auto& v : k) {
        v /= sum;
    }
    return k;
}

ImagePlane perturb(const ImagePlane& image, const Perturbation& p, uint64_t seed) {
    p.validate();
    switch (p.kind) {
        case PerturbationKind::jpeg: return jpeg_round_trip(image, static_cast<int>(std::lround(p.severity)));
        case PerturbationKind::gaussian_noise: {
            if (p.severity == 0.0) {
                return image;
            }
            Rng rng(seed);
            std::normal_distribution<double> noise(0.0, p.severity);
            ImagePlane out = image;
            for (auto& v : out.pixels) {
                v = std::clamp(static_cast<float>(v + noise(rng)), 0.0f, 1.0f);
            }
            return out;
        }
        case PerturbationKind::gaussian_blur:
            if (p.severity == 0.0) {
                return image;
            }
            return gaussian_blur(image, p.severity);
    }
    return image;
}

Sample corpus_sample(const CorpusOptions& options, int index) {
    const uint64_t seed = derive_seed(options.seed, static_cast<uint64_t>(index));
    const ImagePlane base = generate_base(seed, options.size, options.size);
    if (options.pristine_every > 0 && (index + 1) % options.pristine_every == 0) {
        return make_pristine(base, seed);
    }
    return tamper(base, kTamperCycle[static_cast<size_t>(index) % kTamperCycle.size()], seed);
}

std::vector<ManifestRecord> write_corpus(const CorpusOptions& options, const std::filesystem::path& out_dir) {
    if (options.count <= 0) {
        throw std::invalid_argument("corpus size must be positive");
    }
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "images");
    fs::create_directories(out_dir / "masks");
    fs::create_directories(out_dir / "edges");

    std::vector<ManifestRecord> records;
    std::ofstream manifest(out_dir / "manifest.jsonl", std::ios::binary | std::ios::trunc);
    if (!manifest) {
        throw std::runtime_error("cannot write manifest in " + out_dir.string());
    }
    for (int i = 0; i < options.count; ++i) {
        const Sample s = corpus_sample(options, i);
        char stem[32];
        std::snprintf(stem, sizeof(stem), "%06d_%c.png", i, kind_tag(s.manipulation_kind));
        ManifestRecord rec{i, std::string("images/") + stem, std::string("masks/") + stem,
                           std::string("edges/") + stem, s.manipulation_kind, s.seed};
        write_png(s.image, out_dir / rec.image);
        write_png(s.mask, out_dir / rec.mask);
        write_png(s.edge_gt, out_dir / rec.edge);

        nlohmann::ordered_json j;
        j["id"] = rec.id;
        j["image"] = rec.image;
        j["mask"] = rec.mask;
        j["edge"] = rec.edge;
        j["kind"] = std::string(to_string(rec.kind));
        j["seed"] = rec.seed;
        manifest << j.dump() << '\n';
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) {
        throw std::runtime_error("cannot open manifest: " + manifest_path.string());
    }
    std::vector<ManifestRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            ManifestRecord rec;
            rec.id = j.at("id").get<int>();
            rec.image = j.at("image").get<std::string>();
            rec.mask = j.at("mask").get<std::string>();
            rec.edge = j.at("edge").get<std::string>();
            rec.kind = parse_manipulation_kind(j.at("kind").get<std::string>());
            rec.seed = j.at("seed").get<uint64_t>();
            records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            throw std::runtime_error(manifest_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::vector<Sample> load_corpus(const std::filesystem::path& manifest_path) {
    const auto root = manifest_path.parent_path();
    std::vector<Sample> samples;
    for (const auto& rec : read_manifest(manifest_path)) {
        Sample s;
        s.image = read_image(root / rec.image);
        s.mask = read_binary_map(root / rec.mask);
        s.edge_gt = read_binary_map(root / rec.edge);
        s.manipulation_kind = rec.kind;
        s.seed = rec.seed;
        if (s.mask.height != s.image.height || s.mask.width != s.image.width || s.edge_gt.height != s.image.height ||
            s.edge_gt.width != s.image.width) {
            throw std::runtime_error("mask/edge size mismatch for " + rec.image);
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace pixelcourt
