#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pixelcourt {

/// Planar float image, channel-major (C x H x W), values in [0, 1].
struct ImagePlane {
    int height = 0;
    int width = 0;
    int channels = 3;
    std::vector<float> pixels;
    std::string provenance;

    float& at(int c, int y, int x) { return pixels[(static_cast<size_t>(c) * height + y) * width + x]; }
    float at(int c, int y, int x) const { return pixels[(static_cast<size_t>(c) * height + y) * width + x]; }

    static ImagePlane zeros(int height, int width, int channels = 3);
};

/// Row-major H x W map with values in {0, 1}.
struct BinaryMap {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> values;

    uint8_t& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }

    size_t count() const;
    double fraction() const { return values.empty() ? 0.0 : static_cast<double>(count()) / values.size(); }

    static BinaryMap zeros(int height, int width);
};

enum class ManipulationKind { copy_move, splice, inpaint_sim, pristine };

std::string_view to_string(ManipulationKind kind);
ManipulationKind parse_manipulation_kind(std::string_view name);

struct Sample {
    ImagePlane image;
    BinaryMap mask;
    BinaryMap edge_gt;
    ManipulationKind manipulation_kind = ManipulationKind::pristine;
    uint64_t seed = 0;
};

enum class PerturbationKind { jpeg, gaussian_noise, gaussian_blur };

std::string_view to_string(PerturbationKind kind);
PerturbationKind parse_perturbation_kind(std::string_view name);

/// Severity is JPEG quality in [10, 100], noise sigma in [0, 0.2] or blur sigma in [0, 3].
struct Perturbation {
    PerturbationKind kind = PerturbationKind::gaussian_noise;
    double severity = 0.0;

    void validate() const;
};

/// Procedural base image: colored gradient, value-noise texture, random filled polygons and
/// fine sensor-like grain. Sizes must be at least 32 and multiples of 16.
ImagePlane generate_base(uint64_t seed, int height, int width);

/// Pastes or replaces one convex region (polygon or ellipse) covering 2%..40% of the image.
Sample tamper(const ImagePlane& base, ManipulationKind kind, uint64_t seed);

/// Wraps an untouched image as a sample with empty mask and edge maps.
Sample make_pristine(const ImagePlane& base, uint64_t seed);

/// Morphological gradient (3x3 dilation minus 3x3 erosion); a band 2 px wide straddling
/// every mask transition. Neighbours outside the image are ignored.
BinaryMap edge_from_mask(const BinaryMap& mask);

ImagePlane perturb(const ImagePlane& image, const Perturbation& p, uint64_t seed);

/// Gaussian kernel of size 2*ceil(3*sigma)+1, normalized to unit sum.
std::vector<double> gaussian_kernel(double sigma);

/// Deterministic per-sample seed derived from a corpus seed and sample index.
uint64_t derive_seed(uint64_t corpus_seed, uint64_t index);

// Corpus on disk: images/, masks/, edges/ PNGs plus manifest.jsonl (one record per sample).

struct ManifestRecord {
    int id = 0;
    std::string image;
    std::string mask;
    std::string edge;
    ManipulationKind kind = ManipulationKind::pristine;
    uint64_t seed = 0;
};

struct CorpusOptions {
    int count = 8;
    int size = 64;
    uint64_t seed = 0;
    int pristine_every = 0;  // 0 disables pristine samples
};

/// Sample i of a corpus, built without touching disk.
Sample corpus_sample(const CorpusOptions& options, int index);

std::vector<ManifestRecord> write_corpus(const CorpusOptions& options, const std::filesystem::path& out_dir);

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& manifest_path);

/// Loads every sample referenced by a manifest (paths resolved relative to the manifest).
std::vector<Sample> load_corpus(const std::filesystem::path& manifest_path);

}  // namespace pixelcourt
