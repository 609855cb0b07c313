#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pixelcourt/config.hpp"
#include "pixelcourt/datagen.hpp"

namespace fixture {

// Small enough for a few training steps per test on one core.
inline pixelcourt::TrainConfig tiny_config(uint64_t seed = 0) {
    pixelcourt::TrainConfig c;
    c.model.encoder_channels = {8, 8, 16, 16};
    c.model.stream_channels = 16;
    c.model.heads = 4;
    c.model.evidence_channels = 16;
    c.model.patch_rows = 4;
    c.model.patch_cols = 4;
    c.model.policy_hidden = 16;
    c.image_size = 32;
    c.batch_size = 4;
    c.epochs = 1;
    c.seed = seed;
    return c;
}

inline std::vector<pixelcourt::Sample> corpus(int n, int size, uint64_t seed = 0, int pristine_every = 0) {
    pixelcourt::CorpusOptions o;
    o.count = n;
    o.size = size;
    o.seed = seed;
    o.pristine_every = pristine_every;
    std::vector<pixelcourt::Sample> out;
    for (int i = 0; i < n; ++i) out.push_back(pixelcourt::corpus_sample(o, i));
    return out;
}

inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pixelcourt_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fixture
