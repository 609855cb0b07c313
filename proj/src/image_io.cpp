#include "pixelcourt/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace pixelcourt {

namespace {

uint8_t quantize(float v) { return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

cv::Mat to_bgr8(const ImagePlane& image) {
    if (image.channels != 3) {
        throw std::invalid_argument("expected a 3-channel image");
    }
    cv::Mat mat(image.height, image.width, CV_8UC3);
    for (int y = 0; y < image.height; ++y) {
        auto* row = mat.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width; ++x) {
            row[x] = {quantize(image.at(2, y, x)), quantize(image.at(1, y, x)), quantize(image.at(0, y, x))};
        }
    }
    return mat;
}

ImagePlane from_bgr8(const cv::Mat& mat) {
    ImagePlane img = ImagePlane::zeros(mat.rows, mat.cols, 3);
    for (int y = 0; y < mat.rows; ++y) {
        const auto* row = mat.ptr<cv::Vec3b>(y);
        for (int x = 0; x < mat.cols; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(c, y, x) = row[x][2 - c] / 255.0f;
            }
        }
    }
    return img;
}

void write_or_throw(const std::filesystem::path& path, const cv::Mat& mat) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!cv::imwrite(path.string(), mat)) {
        throw std::runtime_error("failed to write " + path.string());
    }
}

}  // namespace

void write_png(const ImagePlane& image, const std::filesystem::path& path) { write_or_throw(path, to_bgr8(image)); }

void write_png(const BinaryMap& map, const std::filesystem::path& path) {
    cv::Mat mat(map.height, map.width, CV_8UC1);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            mat.at<uint8_t>(y, x) = map.at(y, x) ? 255 : 0;
        }
    }
    write_or_throw(path, mat);
}

ImagePlane read_image(const std::filesystem::path& path) {
    cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (mat.empty()) {
        throw std::runtime_error("cannot read image: " + path.string());
    }
    ImagePlane img = from_bgr8(mat);
    img.provenance = path.string();
    return img;
}

BinaryMap read_binary_map(const std::filesystem::path& path) {
    cv::Mat mat = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (mat.empty()) {
        throw std::runtime_error("cannot read map: " + path.string());
    }
    BinaryMap map = BinaryMap::zeros(mat.rows, mat.cols);
    for (int y = 0; y < mat.rows; ++y) {
        for (int x = 0; x < mat.cols; ++x) {
            map.at(y, x) = mat.at<uint8_t>(y, x) >= 128 ? 1 : 0;
        }
    }
    return map;
}

ImagePlane jpeg_round_trip(const ImagePlane& image, int quality) {
    std::vector<uchar> buffer;
    if (!cv::imencode(".jpg", to_bgr8(image), buffer, {cv::IMWRITE_JPEG_QUALITY, quality})) {
        throw std::runtime_error("JPEG encoding failed");
    }
    ImagePlane out = from_bgr8(cv::imdecode(buffer, cv::IMREAD_COLOR));
    out.provenance = image.provenance;
    return out;
}

void write_heatmap(const torch::Tensor& map, const std::filesystem::path& path) {
    auto m = map.detach().to(torch::kCPU, torch::kFloat32).squeeze().contiguous();
    if (m.dim() != 2) {
        throw std::invalid_argument("heatmap must be a single 2-D map");
    }
    auto bytes = (m.clamp(0.0, 1.0) * 255.0).round().to(torch::kUInt8).contiguous();
    cv::Mat mat(static_cast<int>(bytes.size(0)), static_cast<int>(bytes.size(1)), CV_8UC1, bytes.data_ptr<uint8_t>());
    write_or_throw(path, mat.clone());
}

void write_heatmap_normalized(const torch::Tensor& map, const std::filesystem::path& path) {
    auto m = map.detach().to(torch::kFloat64);
    const double lo = m.min().item<double>();
    const double hi = m.max().item<double>();
    write_heatmap(hi - lo > 1e-12 ? (m - lo) / (hi - lo) : torch::zeros_like(m), path);
}

void write_action_map(const torch::Tensor& actions, int height, int width, const std::filesystem::path& path) {
    static const cv::Vec3b colors[] = {{200, 120, 40}, {30, 150, 250}, {40, 40, 220}};
    const auto a = actions.detach().to(torch::kCPU, torch::kInt64).contiguous();
    if (a.dim() != 2) {
        throw std::invalid_argument("action map must be rows x cols");
    }
    const auto rows = a.size(0);
    const auto cols = a.size(1);
    const auto* data = a.data_ptr<int64_t>();
    cv::Mat mat(height, width, CV_8UC3);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const auto k = data[(y * rows / height) * cols + x * cols / width];
            mat.at<cv::Vec3b>(y, x) = colors[std::clamp<int64_t>(k, 0, 2)];
        }
    }
    write_or_throw(path, mat);
}

ImagePlane resize_image(const ImagePlane& image, int height, int width) {
    if (image.height == height && image.width == width) {
        return image;
    }
    cv::Mat resized;
    cv::resize(to_bgr8(image), resized, cv::Size(width, height), 0, 0, cv::INTER_AREA);
    ImagePlane out = from_bgr8(resized);
    out.provenance = image.provenance;
    return out;
}

BinaryMap resize_map(const BinaryMap& map, int height, int width) {
    if (map.height == height && map.width == width) {
        return map;
    }
    BinaryMap out = BinaryMap::zeros(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            out.at(y, x) = map.at(y * map.height / height, x * map.width / width);
        }
    }
    return out;
}

torch::Tensor to_tensor(const ImagePlane& image) {
    return torch::from_blob(const_cast<float*>(image.pixels.data()), {image.channels, image.height, image.width},
                            torch::kFloat32)
        .clone();
}

torch::Tensor to_tensor(const BinaryMap& map) {
    return torch::from_blob(const_cast<uint8_t*>(map.values.data()), {1, map.height, map.width}, torch::kUInt8)
        .to(torch::kFloat32);
}

Batch make_batch(std::span<const Sample> samples) {
    std::vector<size_t> all(samples.size());
    for (size_t i = 0; i < all.size(); ++i) {
        all[i] = i;
    }
    return make_batch(samples, all);
}

Batch make_batch(std::span<const Sample> samples, std::span<const size_t> indices) {
    if (indices.empty()) {
        throw std::invalid_argument("empty batch");
    }
    std::vector<torch::Tensor> images;
    std::vector<torch::Tensor> masks;
    std::vector<torch::Tensor> edges;
    for (size_t i : indices) {
        images.push_back(to_tensor(samples[i].image));
        masks.push_back(to_tensor(samples[i].mask));
        edges.push_back(to_tensor(samples[i].edge_gt));
    }
    return {torch::stack(images), torch::stack(masks), torch::stack(edges)};
}

}  // namespace pixelcourt
