#pragma once

// Central finite differences against autodiff on randomly chosen scalar parameters.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace gradcheck {

struct Probe {
    std::string name;
    int64_t index = 0;
    double autodiff = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct Report {
    std::vector<Probe> probes;
    double max_rel_error = 0.0;
};

inline double rel_error(double a, double b) { return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)}); }

/// `loss` must be a deterministic scalar function of the module parameters.
inline Report check(torch::nn::Module& module, const std::function<torch::Tensor()>& loss, int count, uint64_t seed,
                    double step = 1e-4, const std::function<bool(const std::string&)>& accept = {}) {
    std::vector<std::pair<std::string, torch::Tensor>> params;
    for (const auto& item : module.named_parameters(true)) {
        if (!accept || accept(item.key())) params.emplace_back(item.key(), item.value());
    }
    for (auto& [_, p] : params) {
        if (p.grad().defined()) p.grad().zero_();
    }
    loss().backward();

    std::mt19937_64 rng(seed);
    Report report;
    for (int k = 0; k < count; ++k) {
        auto& [name, p] = params[std::uniform_int_distribution<size_t>(0, params.size() - 1)(rng)];
        const auto index = std::uniform_int_distribution<int64_t>(0, p.numel() - 1)(rng);
        auto flat = p.detach().view({-1});
        const double ad = p.grad().defined() ? p.grad().view({-1})[index].item<double>() : 0.0;
        const double orig = flat[index].item<double>();
        double fd;
        {
            torch::NoGradGuard guard;
            flat[index] = orig + step;
            const double plus = loss().item<double>();
            flat[index] = orig - step;
            const double minus = loss().item<double>();
            flat[index] = orig;
            fd = (plus - minus) / (2.0 * step);
        }
        Probe probe{name, index, ad, fd, rel_error(fd, ad)};
        report.max_rel_error = std::max(report.max_rel_error, probe.rel_error);
        report.probes.push_back(probe);
    }
    return report;
}

}  // namespace gradcheck
