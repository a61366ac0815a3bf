#pragma once

// Slow, obviously-correct reference implementations shared by the unit tests and the acceptance run.

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "vscene/efd.hpp"
#include "vscene/image.hpp"
#include "vscene/losses.hpp"

namespace oracle {

// Direct synthesis x(t) = sum_n A cos + B sin, y(t) = sum_n C cos + D sin at t_p = p/K, p = 1..K.
inline vscene::Contour synthesize(const vscene::EfdShape& s, std::size_t k) {
    vscene::Contour c;
    for (std::size_t p = 1; p <= k; ++p) {
        const double t = 2.0 * vscene::kPi * static_cast<double>(p) / static_cast<double>(k);
        vscene::Vec2 v;
        for (std::size_t n = 0; n < s.harmonics(); ++n) {
            const double a = static_cast<double>(n + 1) * t;
            v.x += s.coeffs[n][0] * std::cos(a) + s.coeffs[n][1] * std::sin(a);
            v.y += s.coeffs[n][2] * std::cos(a) + s.coeffs[n][3] * std::sin(a);
        }
        c.push_back(v);
    }
    return c;
}

// Minimum assignment cost over every injective map of the shorter side into the longer one.
inline double brute_force_assignment(const vscene::CostMatrix& c) {
    const std::size_t n = c.size(), k = c[0].size();
    const bool flip = n > k;
    const std::size_t rows = flip ? k : n, cols = flip ? n : k;
    auto at = [&](std::size_t r, std::size_t col) { return flip ? c[col][r] : c[r][col]; };
    std::vector<std::size_t> perm(cols);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t r = 0; r < rows; ++r) s += at(r, perm[r]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Upper tail p-value of Pearson's statistic against a uniform expectation.
inline double chi_square_p(const std::vector<std::size_t>& counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    const double expected = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
    boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

inline double min_pairwise(const std::vector<vscene::Vec2>& pts) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) m = std::min(m, vscene::norm(pts[i] - pts[j]));
    }
    return m;
}

// Mean SSIM over every valid 11x11 window and channel, Gaussian weights with sigma 1.5.
inline double ssim(const vscene::Image& a, const vscene::Image& b) {
    double w[11][11], wsum = 0.0;
    for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) wsum += w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
    }
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0.0;
    int count = 0;
    for (int ch = 0; ch < 3; ++ch) {
        for (int r = 0; r + 11 <= a.height; ++r) {
            for (int c = 0; c + 11 <= a.width; ++c) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int i = 0; i < 11; ++i) {
                    for (int j = 0; j < 11; ++j) {
                        const double x = a.at(r + i, c + j, ch), y = b.at(r + i, c + j, ch), k = w[i][j] / wsum;
                        ma += k * x;
                        mb += k * y;
                        saa += k * x * x;
                        sbb += k * y * y;
                        sab += k * x * y;
                    }
                }
                const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
                total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
        }
    }
    return total / count;
}

// Adjusted Rand index from pair counts over the pixels with nonzero truth.
inline double ari(const vscene::LabelMap& pred, const vscene::LabelMap& truth) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        if (truth.labels[i] != 0) idx.push_back(i);
    }
    double both = 0, same_t = 0, same_p = 0, pairs = 0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            const bool t = truth.labels[idx[a]] == truth.labels[idx[b]];
            const bool p = pred.labels[idx[a]] == pred.labels[idx[b]];
            both += t && p;
            same_t += t;
            same_p += p;
            pairs += 1;
        }
    }
    const double expected = same_t * same_p / pairs;
    const double max_index = 0.5 * (same_t + same_p);
    return (both - expected) / (max_index - expected);
}

}  // namespace oracle
