#include "pixelcourt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace pixelcourt {

namespace {

constexpr char kMagic[4] = {'P', 'X', 'C', 'T'};

enum class DType : uint8_t { f32 = 0, f64 = 1, i64 = 2 };

DType dtype_code(torch::ScalarType t) {
    switch (t) {
        case torch::kFloat32: return DType::f32;
        case torch::kFloat64: return DType::f64;
        case torch::kInt64: return DType::i64;
        default: throw CheckpointError(std::string("unsupported tensor dtype: ") + c10::toString(t));
    }
}

torch::ScalarType scalar_type(uint8_t code) {
    switch (static_cast<DType>(code)) {
        case DType::f32: return torch::kFloat32;
        case DType::f64: return torch::kFloat64;
        case DType::i64: return torch::kInt64;
    }
    throw CheckpointError("corrupt checkpoint: unknown dtype code " + std::to_string(code));
}

class Writer {
public:
    template <typename T>
    void pod(T v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        buf.insert(buf.end(), p, p + sizeof(T));
    }
    void bytes(const void* p, size_t n) {
        const auto* c = static_cast<const char*>(p);
        buf.insert(buf.end(), c, c + n);
    }
    void str(const std::string& s) {
        pod<uint32_t>(static_cast<uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    std::vector<char> buf;
};

class Reader {
public:
    Reader(const char* data, size_t size) : p_(data), end_(data + size) {}

    void need(size_t n) const {
        if (static_cast<size_t>(end_ - p_) < n) {
            throw CheckpointError("corrupt checkpoint: truncated");
        }
    }
    template <typename T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, p_, sizeof(T));
        p_ += sizeof(T);
        return v;
    }
    std::string str() {
        const auto n = pod<uint32_t>();
        need(n);
        std::string s(p_, n);
        p_ += n;
        return s;
    }
    const char* take(size_t n) {
        need(n);
        const char* at = p_;
        p_ += n;
        return at;
    }
    bool done() const { return p_ == end_; }

private:
    const char* p_;
    const char* end_;
};

uint32_t checksum(const char* data, size_t n) {
    return static_cast<uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        out += (out.empty() ? "" : ", ") + n;
    }
    return out;
}

}  // namespace

MissingTensorsError::MissingTensorsError(std::vector<std::string> names)
    : CheckpointError("checkpoint is missing tensors: " + join(names)), names_(std::move(names)) {}

void write_checkpoint(const CheckpointData& data, const std::filesystem::path& path) {
    Writer w;
    w.bytes(kMagic, 4);
    w.pod<uint32_t>(data.version);
    w.str(data.config_text);
    w.pod<uint32_t>(static_cast<uint32_t>(data.tensors.size()));
    for (const auto& [name, tensor] : data.tensors) {
        const auto t = tensor.detach().contiguous().cpu();
        w.str(name);
        w.pod<uint8_t>(static_cast<uint8_t>(dtype_code(t.scalar_type())));
        w.pod<uint32_t>(static_cast<uint32_t>(t.dim()));
        for (auto d : t.sizes()) {
            w.pod<int64_t>(d);
        }
        w.bytes(t.data_ptr(), t.numel() * t.element_size());
    }
    w.pod<uint32_t>(checksum(w.buf.data(), w.buf.size()));

    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    // Write beside the target and rename so a crash never leaves a half-written checkpoint.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw CheckpointError("cannot write checkpoint: " + tmp.string());
        }
        out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
        if (!out) {
            throw CheckpointError("failed writing checkpoint: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint: " + path.string());
    }
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw CheckpointError("not a pixelcourt checkpoint: " + path.string());
    }
    const size_t body = buf.size() - 4;
    uint32_t stored = 0;
    std::memcpy(&stored, buf.data() + body, 4);
    if (stored != checksum(buf.data(), body)) {
        throw CheckpointError("corrupt checkpoint (checksum mismatch): " + path.string());
    }

    Reader r(buf.data() + 4, body - 4);
    CheckpointData data;
    data.version = r.pod<uint32_t>();
    if (data.version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(data.version) + " (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    }
    data.config_text = r.str();
    const auto count = r.pod<uint32_t>();
    for (uint32_t i = 0; i < count; ++i) {
        auto name = r.str();
        const auto type = scalar_type(r.pod<uint8_t>());
        const auto ndim = r.pod<uint32_t>();
        if (ndim > 8) {
            throw CheckpointError("corrupt checkpoint: tensor rank " + std::to_string(ndim));
        }
        std::vector<int64_t> dims(ndim);
        for (auto& d : dims) {
            d = r.pod<int64_t>();
            if (d < 0) {
                throw CheckpointError("corrupt checkpoint: negative dimension");
            }
        }
        auto t = torch::empty(dims, torch::TensorOptions().dtype(type));
        const size_t n = t.numel() * t.element_size();
        std::memcpy(t.data_ptr(), r.take(n), n);
        data.tensors.emplace(std::move(name), std::move(t));
    }
    if (!r.done()) {
        throw CheckpointError("corrupt checkpoint: trailing bytes");
    }
    return data;
}

std::map<std::string, torch::Tensor> state_of(const torch::nn::Module& module) {
    std::map<std::string, torch::Tensor> out;
    for (const auto& item : module.named_parameters(true)) {
        out.emplace(item.key(), item.value());
    }
    for (const auto& item : module.named_buffers(true)) {
        out.emplace(item.key(), item.value());
    }
    return out;
}

void load_state(torch::nn::Module& module, const std::map<std::string, torch::Tensor>& tensors) {
    const auto target = state_of(module);
    std::vector<std::string> missing;
    for (const auto& [name, _] : target) {
        if (!tensors.contains(name)) {
            missing.push_back(name);
        }
    }
    if (!missing.empty()) {
        throw MissingTensorsError(std::move(missing));
    }
    torch::NoGradGuard guard;
    for (const auto& [name, dst] : target) {
        const auto& src = tensors.at(name);
        if (src.sizes() != dst.sizes() || src.scalar_type() != dst.scalar_type()) {
            throw CheckpointError("tensor " + name + " has incompatible shape or dtype");
        }
        dst.copy_(src);
    }
}

void save_checkpoint(const PixelCourt& model, const TrainConfig& config, const std::filesystem::path& path) {
    CheckpointData data;
    data.config_text = to_text(config);
    data.tensors = state_of(*model);
    write_checkpoint(data, path);
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
    auto data = read_checkpoint(path);
    LoadedModel out;
    out.config = parse_config(data.config_text);
    out.config.validate();
    out.model = PixelCourt(out.config.model);
    load_state(*out.model, data.tensors);
    out.model->eval();
    return out;
}

}  // namespace pixelcourt
