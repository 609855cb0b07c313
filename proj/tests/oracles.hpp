#pragma once

// Brute-force scalar reference implementations. They work on plain row-major vectors and
// deliberately share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <torch/torch.h>

namespace oracle {

using Grid = std::vector<double>;  // row-major H x W

inline double clampp(double p) { return std::clamp(p, 1e-6, 1.0 - 1e-6); }

inline double bce(double p, double t) {
    p = clampp(p);
    return -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
}

// 31x31 box mean with zero padding, divisor always 961.
inline Grid box_mean31(const Grid& g, int h, int w) {
    Grid out(g.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int dy = -15; dy <= 15; ++dy) {
                for (int dx = -15; dx <= 15; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy >= 0 && yy < h && xx >= 0 && xx < w) s += g[yy * w + xx];
                }
            }
            out[y * w + x] = s / 961.0;
        }
    }
    return out;
}

inline double structure_loss(const Grid& p, const Grid& g, int h, int w) {
    const auto pooled = box_mean31(g, h, w);
    double wsum = 0, wbce = 0, inter = 0, uni = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double wt = 1.0 + 5.0 * std::abs(pooled[i] - g[i]);
        const double pc = clampp(p[i]);
        wsum += wt;
        wbce += wt * bce(p[i], g[i]);
        inter += pc * g[i] * wt;
        uni += (pc + g[i]) * wt;
    }
    return wbce / wsum + 1.0 - (inter + 1.0) / (uni - inter + 1.0);
}

inline double edge_loss(const Grid& e, const Grid& g) {
    double b = 0, inter = 0, se = 0, sg = 0;
    for (size_t i = 0; i < e.size(); ++i) {
        b += bce(e[i], g[i]);
        inter += e[i] * g[i];
        se += e[i];
        sg += g[i];
    }
    return b / e.size() + 1.0 - (2.0 * inter + 1.0) / (se + sg + 1.0);
}

// Closed form of KL(p||q) + KL(q||p) for Bernoulli variables.
inline double symkl(double p, double q) {
    p = clampp(p);
    q = clampp(q);
    return (p - q) * (std::log(p / (1.0 - p)) - std::log(q / (1.0 - q)));
}

inline double binary_entropy(double p) {
    p = clampp(p);
    return -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p));
}

inline Grid minmax(const Grid& x) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    Grid out(x.size(), 0.0);
    if (*hi - *lo > 1e-12) {
        for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - *lo) / (*hi - *lo);
    }
    return out;
}

inline Grid reliability_target(const Grid& pm, const Grid& tp, const Grid& rp) {
    Grid ent(pm.size()), gap(pm.size());
    for (size_t i = 0; i < pm.size(); ++i) {
        ent[i] = binary_entropy(pm[i]);
        gap[i] = std::abs(tp[i] - (1.0 - rp[i]));
    }
    const auto ne = minmax(ent), ng = minmax(gap);
    Grid r(pm.size());
    for (size_t i = 0; i < pm.size(); ++i) r[i] = 1.0 - 0.5 * ne[i] - 0.5 * ng[i];
    return r;
}

inline double calibration_loss(const Grid& rel, const Grid& pm, const Grid& tp, const Grid& rp, const Grid& g,
                               double beta) {
    const auto target = reliability_target(pm, tp, rp);
    double b = 0, sq = 0;
    for (size_t i = 0; i < rel.size(); ++i) {
        b += bce(rel[i], target[i]);
        sq += (pm[i] - g[i]) * (pm[i] - g[i]);
    }
    return b / rel.size() + beta * sq / rel.size();
}

inline double consistency_loss(const Grid& tp, const Grid& rp, const Grid& rel, const Grid& te, const Grid& re,
                               double tau) {
    double num = 0, den = 0;
    for (size_t i = 0; i < tp.size(); ++i) {
        const double gate = (rel[i] > tau ? 1.0 : 0.0) * (1.0 - te[i]) * (1.0 - re[i]);
        num += gate * symkl(tp[i], 1.0 - rp[i]);
        den += gate;
    }
    return num / (den + 1e-6);
}

inline double soft_iou(const Grid& p, const Grid& g) {
    double inter = 0, sp = 0, sg = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        inter += p[i] * g[i];
        sp += p[i];
        sg += g[i];
    }
    return inter / (sp + sg - inter + 1e-6);
}

struct Counts {
    int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Counts confusion(const Grid& prob, const Grid& gt, double threshold) {
    Counts c;
    for (size_t i = 0; i < prob.size(); ++i) {
        const bool p = prob[i] >= threshold;
        const bool t = gt[i] > 0.5;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

inline double f1(const Counts& c) {
    const double precision = c.tp + c.fp == 0 ? 1.0 : double(c.tp) / (c.tp + c.fp);
    const double recall = c.tp + c.fn == 0 ? 1.0 : double(c.tp) / (c.tp + c.fn);
    if (c.tp + c.fp + c.fn == 0) return 1.0;
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

// Edge pixel iff its in-image 3x3 neighbourhood contains both values.
inline int edge_count(const std::vector<uint8_t>& m, int h, int w) {
    int n = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool any0 = false, any1 = false;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    (m[yy * w + xx] ? any1 : any0) = true;
                }
            }
            n += any0 && any1;
        }
    }
    return n;
}

// Energy fraction outside the 2x2 low-frequency corner of one 8x8 block (values already level-shifted).
inline double dct_high_fraction(const double block[8][8]) {
    double total = 0, low = 0;
    for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int y = 0; y < 8; ++y) {
                for (int x = 0; x < 8; ++x) {
                    s += block[y][x] * std::cos((2 * y + 1) * u * std::numbers::pi / 16) *
                         std::cos((2 * x + 1) * v * std::numbers::pi / 16);
                }
            }
            const double cu = u == 0 ? std::sqrt(1.0 / 8) : std::sqrt(2.0 / 8);
            const double cv = v == 0 ? std::sqrt(1.0 / 8) : std::sqrt(2.0 / 8);
            const double e = (cu * cv * s) * (cu * cv * s);
            total += e;
            if (u < 2 && v < 2) low += e;
        }
    }
    return (total - low) / (total + 1e-6);
}

inline Grid to_grid(const torch::Tensor& t) {
    auto c = t.detach().to(torch::kFloat64).contiguous().flatten();
    return Grid(c.data_ptr<double>(), c.data_ptr<double>() + c.numel());
}

inline torch::Tensor to_tensor(const Grid& g, int h, int w) {
    return torch::tensor(g, torch::kFloat64).reshape({1, 1, h, w});
}

}  // namespace oracle
