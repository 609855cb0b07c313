#include "pixelcourt/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace pixelcourt {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw std::invalid_argument("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
    }
    return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
    if (text == "0" || text == "false" || text == "no" || text == "off") return false;
    throw std::invalid_argument("bad boolean for " + std::string(key) + ": '" + std::string(text) + "'");
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

using Setter = std::function<void(TrainConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"image_size", [](auto& c, auto k, auto v) { c.image_size = parse_number<int>(k, v); }},
        {"batch_size", [](auto& c, auto k, auto v) { c.batch_size = parse_number<int>(k, v); }},
        {"learning_rate", [](auto& c, auto k, auto v) { c.learning_rate = parse_number<double>(k, v); }},
        {"epochs", [](auto& c, auto k, auto v) { c.epochs = parse_number<int>(k, v); }},
        {"max_steps", [](auto& c, auto k, auto v) { c.max_steps = parse_number<int>(k, v); }},
        {"lambda_c", [](auto& c, auto k, auto v) { c.lambda_c = parse_number<double>(k, v); }},
        {"lambda_rl", [](auto& c, auto k, auto v) { c.lambda_rl = parse_number<double>(k, v); }},
        {"tau_rel", [](auto& c, auto k, auto v) { c.tau_rel = parse_number<double>(k, v); }},
        {"beta", [](auto& c, auto k, auto v) { c.beta = parse_number<double>(k, v); }},
        {"reliability_weight", [](auto& c, auto k, auto v) { c.reliability_weight = parse_number<double>(k, v); }},
        {"gumbel_tau_start", [](auto& c, auto k, auto v) { c.gumbel_tau_start = parse_number<double>(k, v); }},
        {"gumbel_tau_decay", [](auto& c, auto k, auto v) { c.gumbel_tau_decay = parse_number<double>(k, v); }},
        {"gumbel_tau_floor", [](auto& c, auto k, auto v) { c.gumbel_tau_floor = parse_number<double>(k, v); }},
        {"advantage", [](auto& c, auto k, auto v) { c.advantage = parse_bool(k, v); }},
        {"seed", [](auto& c, auto k, auto v) { c.seed = parse_number<uint64_t>(k, v); }},
        {"checkpoint_interval", [](auto& c, auto k, auto v) { c.checkpoint_interval = parse_number<int>(k, v); }},
        {"lambda", [](auto& c, auto k, auto v) { c.model.suppression = parse_number<double>(k, v); }},
        {"heads", [](auto& c, auto k, auto v) { c.model.heads = parse_number<int>(k, v); }},
        {"stream_channels", [](auto& c, auto k, auto v) { c.model.stream_channels = parse_number<int>(k, v); }},
        {"evidence_channels", [](auto& c, auto k, auto v) { c.model.evidence_channels = parse_number<int>(k, v); }},
        {"patch_rows", [](auto& c, auto k, auto v) { c.model.patch_rows = parse_number<int>(k, v); }},
        {"patch_cols", [](auto& c, auto k, auto v) { c.model.patch_cols = parse_number<int>(k, v); }},
        {"policy_hidden", [](auto& c, auto k, auto v) { c.model.policy_hidden = parse_number<int>(k, v); }},
        {"broadcast",
         [](auto& c, auto k, auto v) {
             if (v == "key") {
                 c.model.broadcast = PenaltyBroadcast::key;
             } else if (v == "query") {
                 c.model.broadcast = PenaltyBroadcast::query;
             } else {
                 throw std::invalid_argument("bad value for " + std::string(k) + ": expected key|query");
             }
         }},
        {"encoder_channels",
         [](auto& c, auto k, auto v) {
             std::array<int, 4> ch{};
             std::string_view rest = v;
             for (int i = 0; i < 4; ++i) {
                 const auto comma = rest.find(',');
                 if ((i < 3) == (comma == std::string_view::npos)) {
                     throw std::invalid_argument("encoder_channels needs four comma-separated values");
                 }
                 ch[i] = parse_number<int>(k, trim(rest.substr(0, comma)));
                 rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
             }
             c.model.encoder_channels = ch;
         }},
        {"bypass_debate", [](auto& c, auto k, auto v) { c.model.bypass_debate = parse_bool(k, v); }},
        {"judge_disabled", [](auto& c, auto k, auto v) { c.model.judge_disabled = parse_bool(k, v); }},
        {"fixed_action", [](auto& c, auto k, auto v) { c.model.fixed_action = parse_number<int>(k, v); }},
        {"actor_refine_gradient", [](auto& c, auto k, auto v) { c.model.actor_refine_gradient = parse_bool(k, v); }},
    };
    return table;
}

}  // namespace

void ModelConfig::validate() const {
    for (int ch : encoder_channels) {
        if (ch <= 0) {
            throw std::invalid_argument("encoder channels must be positive");
        }
    }
    if (stream_channels <= 0 || heads <= 0 || stream_channels % heads != 0) {
        throw std::invalid_argument("stream_channels must be a positive multiple of heads");
    }
    if (!(suppression >= 0.0)) {
        throw std::invalid_argument("suppression coefficient must be >= 0");
    }
    if (evidence_channels <= 0 || patch_rows <= 0 || patch_cols <= 0 || policy_hidden <= 0) {
        throw std::invalid_argument("evidence channels, patch grid and policy width must be positive");
    }
    if (fixed_action > 2) {
        throw std::invalid_argument("fixed_action must be -1 (off) or an action index in 0..2");
    }
}

double TrainConfig::gumbel_tau(int epoch) const {
    return std::max(gumbel_tau_floor, gumbel_tau_start * std::pow(gumbel_tau_decay, epoch));
}

void TrainConfig::validate() const {
    model.validate();
    if (image_size < 32 || image_size % 16 != 0) {
        throw std::invalid_argument("image_size must be >= 32 and a multiple of 16");
    }
    if (batch_size <= 0 || epochs <= 0 || max_steps < 0 || checkpoint_interval <= 0) {
        throw std::invalid_argument("batch_size, epochs and checkpoint_interval must be positive");
    }
    if (!(learning_rate > 0.0) || !(beta > 0.0) || !(lambda_c > 0.0) || !(tau_rel > 0.0)) {
        throw std::invalid_argument("rates must be > 0");
    }
    if (!(lambda_rl >= 0.0) || !(reliability_weight >= 0.0)) {
        throw std::invalid_argument("lambda_rl and reliability_weight must be >= 0");
    }
    if (!(gumbel_tau_start > 0.0) || !(gumbel_tau_floor > 0.0) || !(gumbel_tau_decay > 0.0)) {
        throw std::invalid_argument("Gumbel temperature schedule must be positive");
    }
}

void apply_setting(TrainConfig& config, std::string_view key, std::string_view value) {
    const auto it = setters().find(key);
    if (it == setters().end()) {
        throw std::invalid_argument("unknown config key: " + std::string(key));
    }
    it->second(config, key, trim(value));
}

TrainConfig parse_config(std::string_view text, TrainConfig base) {
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
        }
        apply_setting(base, trim(std::string_view(body).substr(0, eq)), std::string_view(body).substr(eq + 1));
    }
    return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config: " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::map<std::string, std::string> to_settings(const TrainConfig& c) {
    const auto& m = c.model;
    return {
        {"image_size", std::to_string(c.image_size)},
        {"batch_size", std::to_string(c.batch_size)},
        {"learning_rate", fmt_double(c.learning_rate)},
        {"epochs", std::to_string(c.epochs)},
        {"max_steps", std::to_string(c.max_steps)},
        {"lambda_c", fmt_double(c.lambda_c)},
        {"lambda_rl", fmt_double(c.lambda_rl)},
        {"tau_rel", fmt_double(c.tau_rel)},
        {"beta", fmt_double(c.beta)},
        {"reliability_weight", fmt_double(c.reliability_weight)},
        {"gumbel_tau_start", fmt_double(c.gumbel_tau_start)},
        {"gumbel_tau_decay", fmt_double(c.gumbel_tau_decay)},
        {"gumbel_tau_floor", fmt_double(c.gumbel_tau_floor)},
        {"advantage", c.advantage ? "true" : "false"},
        {"seed", std::to_string(c.seed)},
        {"checkpoint_interval", std::to_string(c.checkpoint_interval)},
        {"lambda", fmt_double(m.suppression)},
        {"heads", std::to_string(m.heads)},
        {"stream_channels", std::to_string(m.stream_channels)},
        {"evidence_channels", std::to_string(m.evidence_channels)},
        {"patch_rows", std::to_string(m.patch_rows)},
        {"patch_cols", std::to_string(m.patch_cols)},
        {"policy_hidden", std::to_string(m.policy_hidden)},
        {"broadcast", m.broadcast == PenaltyBroadcast::key ? "key" : "query"},
        {"encoder_channels", std::to_string(m.encoder_channels[0]) + "," + std::to_string(m.encoder_channels[1]) +
                                 "," + std::to_string(m.encoder_channels[2]) + "," +
                                 std::to_string(m.encoder_channels[3])},
        {"bypass_debate", m.bypass_debate ? "true" : "false"},
        {"judge_disabled", m.judge_disabled ? "true" : "false"},
        {"fixed_action", std::to_string(m.fixed_action)},
        {"actor_refine_gradient", m.actor_refine_gradient ? "true" : "false"},
    };
}

std::string to_text(const TrainConfig& config) {
    std::string out;
    for (const auto& [k, v] : to_settings(config)) {
        out += k + " = " + v + "\n";
    }
    return out;
}

uint64_t env_seed(uint64_t fallback) {
    const char* raw = std::getenv("PIXELCOURT_SEED");
    if (raw == nullptr || *raw == '\0') {
        return fallback;
    }
    return parse_number<uint64_t>("PIXELCOURT_SEED", raw);
}

}  // namespace pixelcourt
