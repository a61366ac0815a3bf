#include "vscene/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vscene/errors.hpp"

namespace vscene {

namespace {

void check_dims(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.data.size() != b.data.size()) {
        throw DimensionMismatch("image dimensions differ");
    }
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double rgb_dist(const Rgb& a, const Rgb& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

// Square-matrix Hungarian with row/column potentials. Returns col -> row.
std::vector<int> solve_square(const CostMatrix& a) {
    const int n = static_cast<int>(a.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_to_row(n);
    for (int j = 1; j <= n; ++j) col_to_row[j - 1] = p[j] - 1;
    return col_to_row;
}

// Optimal cost over rows >= `from` of `costs`, with `taken` columns excluded.
double min_cost(const CostMatrix& costs, std::size_t from, const std::vector<char>& taken) {
    const std::size_t n = costs.size() - from;
    if (n == 0) return 0.0;
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < taken.size(); ++j) {
        if (!taken[j]) cols.push_back(j);
    }
    const std::size_t k = cols.size();
    CostMatrix sq(k, std::vector<double>(k, 0.0));  // padded rows cost 0
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) sq[i][j] = costs[from + i][cols[j]];
    }
    const auto col_to_row = solve_square(sq);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        if (static_cast<std::size_t>(col_to_row[j]) < n) total += sq[col_to_row[j]][j];
    }
    return total;
}

MatchResult hungarian_rows_le_cols(const CostMatrix& costs, std::size_t n_cols) {
    const std::size_t n = costs.size();
    MatchResult out;
    std::vector<char> taken(n_cols, 0);
    const double best = min_cost(costs, 0, taken);
    double fixed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        bool placed = false;
        for (std::size_t j = 0; j < n_cols && !placed; ++j) {
            if (taken[j]) continue;
            taken[j] = 1;
            const double rest = min_cost(costs, i + 1, taken);
            const double total = fixed + costs[i][j] + rest;
            if (total <= best + 1e-12 * std::max(1.0, std::abs(best))) {
                fixed += costs[i][j];
                out.assignment.emplace_back(i, j);
                placed = true;
            } else {
                taken[j] = 0;
            }
        }
        if (!placed) throw Error("assignment reconstruction failed");
    }
    out.total_cost = fixed;
    for (std::size_t j = 0; j < n_cols; ++j) {
        if (!taken[j]) out.unmatched_candidates.push_back(j);
    }
    return out;
}

struct BlendedTarget {
    int sym = 1;
    Contour contour;
};

double clamp_conf(double c, double eps) { return std::clamp(c, eps, 1.0 - eps); }

// Shared evaluation of the loss with optional gradient accumulation.
double param_loss_impl(const Scene& target, const Scene& pred, const PrototypeBank& bank, const ParamLossOptions& opts,
                       GradientVector* grad, const Layout* layout) {
    if (pred.objects.size() < target.objects.size()) {
        throw NotEnoughCandidates("prediction has " + std::to_string(pred.objects.size()) + " candidates for " +
                                  std::to_string(target.objects.size()) + " target objects");
    }
    double loss = 0.0;
    const double bg = rgb_dist(target.background, pred.background);
    loss += bg;
    if (grad && bg > 0.0) {
        const std::size_t b0 = layout->background_offset();
        for (int ch = 0; ch < 3; ++ch) (*grad)[b0 + ch] += (pred.background[ch] - target.background[ch]) / bg;
    }

    const MatchResult match = hungarian(matching_costs(target, pred));
    std::vector<Contour> sampled;
    if (opts.shape_term == ShapeTerm::kContour) {
        const EfdBasis basis(bank.size() ? bank[0].harmonics() : 0, opts.k_points);
        for (const auto& s : bank.shapes) sampled.push_back(contour_from_efd(s, basis));
    }
    for (const auto& [ti, pj] : match.assignment) {
        const ObjectParams& t = target.objects[ti];
        const ObjectParams& p = pred.objects[pj];
        const double conf = clamp_conf(p.confidence, opts.confidence_eps);
        loss += -std::log(conf);

        const Vec2 dt = p.translation - t.translation;
        const double nt = norm(dt);
        loss += 5.0 * nt;
        const double nc = rgb_dist(p.color, t.color);
        loss += nc;
        const double ds = p.scale - t.scale;
        loss += std::abs(ds);

        double nsh = 0.0;
        std::vector<double> dsh_w;  // gradient of the shape term w.r.t. pred weights
        if (opts.shape_term == ShapeTerm::kWeights) {
            if (p.shape_weights.size() != t.shape_weights.size()) throw InvalidScene("shape weight sizes differ");
            double acc = 0.0;
            for (std::size_t m = 0; m < p.shape_weights.size(); ++m) {
                const double d = p.shape_weights[m] - t.shape_weights[m];
                acc += d * d;
            }
            nsh = std::sqrt(acc);
            if (grad && nsh > 0.0) {
                dsh_w.resize(p.shape_weights.size());
                for (std::size_t m = 0; m < p.shape_weights.size(); ++m) {
                    dsh_w[m] = (p.shape_weights[m] - t.shape_weights[m]) / nsh;
                }
            }
        } else {
            Contour cp(sampled.empty() ? 0 : sampled[0].size(), Vec2{}), ct = cp;
            for (std::size_t m = 0; m < sampled.size(); ++m) {
                for (std::size_t k = 0; k < cp.size(); ++k) {
                    cp[k] += p.shape_weights[m] * sampled[m][k];
                    ct[k] += t.shape_weights[m] * sampled[m][k];
                }
            }
            double acc = 0.0;
            for (std::size_t k = 0; k < cp.size(); ++k) acc += dot(cp[k] - ct[k], cp[k] - ct[k]);
            const double kk = static_cast<double>(std::max<std::size_t>(cp.size(), 1));
            nsh = std::sqrt(acc / kk);
            if (grad && nsh > 0.0) {
                dsh_w.assign(sampled.size(), 0.0);
                for (std::size_t m = 0; m < sampled.size(); ++m) {
                    double g = 0.0;
                    for (std::size_t k = 0; k < cp.size(); ++k) g += dot(cp[k] - ct[k], sampled[m][k]);
                    dsh_w[m] = g / (kk * nsh);
                }
            }
        }
        loss += nsh;

        const int sym = symmetry_order(blend_coefficients(bank, t.shape_weights), opts.symmetry_threshold);
        const double da = angle_of(t) - std::atan2(p.rotation.y, p.rotation.x);
        const double one_minus_cos = 1.0 - std::cos(sym * da);
        loss += 0.05 * one_minus_cos * one_minus_cos;

        if (!grad) continue;
        GradientVector& g = *grad;
        g[layout->offset(pj, Aspect::kConfidence)] += -1.0 / conf;
        if (nt > 0.0) {
            const std::size_t o = layout->offset(pj, Aspect::kTranslation);
            g[o] += 5.0 * dt.x / nt;
            g[o + 1] += 5.0 * dt.y / nt;
        }
        if (nc > 0.0) {
            const std::size_t o = layout->offset(pj, Aspect::kColor);
            for (int ch = 0; ch < 3; ++ch) g[o + ch] += (p.color[ch] - t.color[ch]) / nc;
        }
        g[layout->offset(pj, Aspect::kScale)] += sign(ds);
        if (!dsh_w.empty()) {
            const std::size_t o = layout->offset(pj, Aspect::kShape);
            for (std::size_t m = 0; m < dsh_w.size(); ++m) g[o + m] += dsh_w[m];
        }
        // d/d(pred angle) of 0.05 (1 - cos(sym * da))^2 with da = a_t - a_p.
        const double d_angle = -0.05 * 2.0 * one_minus_cos * sym * std::sin(sym * da);
        const double r2 = dot(p.rotation, p.rotation);
        if (r2 > 0.0) {
            const std::size_t o = layout->offset(pj, Aspect::kRotation);
            g[o] += d_angle * -p.rotation.y / r2;
            g[o + 1] += d_angle * p.rotation.x / r2;
        }
    }
    for (std::size_t pj : match.unmatched_candidates) {
        const double conf = clamp_conf(pred.objects[pj].confidence, opts.confidence_eps);
        loss += -std::log(1.0 - conf);
        if (grad) (*grad)[layout->offset(pj, Aspect::kConfidence)] += 1.0 / (1.0 - conf);
    }
    return loss;
}

}  // namespace

double image_loss(const Image& a, const Image& b, ImageLossKind kind) {
    check_dims(a, b);
    if (a.data.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += kind == ImageLossKind::kMae ? std::abs(d) : d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

double image_loss_adjoint(const Image& rendered, const Image& target, ImageLossKind kind, Image& adjoint) {
    check_dims(rendered, target);
    adjoint = Image(rendered.width, rendered.height);
    if (rendered.data.empty()) return 0.0;
    const double inv = 1.0 / static_cast<double>(rendered.data.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < rendered.data.size(); ++i) {
        const double d = rendered.data[i] - target.data[i];
        if (kind == ImageLossKind::kMae) {
            acc += std::abs(d);
            adjoint.data[i] = sign(d) * inv;
        } else {
            acc += d * d;
            adjoint.data[i] = 2.0 * d * inv;
        }
    }
    return acc * inv;
}

double matching_cost(const ObjectParams& target, const ObjectParams& pred) {
    return norm(target.translation - pred.translation) + 0.1 * rgb_dist(target.color, pred.color) +
           0.01 * std::abs(target.confidence - pred.confidence);
}

CostMatrix matching_costs(const Scene& target, const Scene& pred) {
    CostMatrix c(target.objects.size(), std::vector<double>(pred.objects.size()));
    for (std::size_t i = 0; i < target.objects.size(); ++i) {
        for (std::size_t j = 0; j < pred.objects.size(); ++j) c[i][j] = matching_cost(target.objects[i], pred.objects[j]);
    }
    return c;
}

MatchResult hungarian(const CostMatrix& costs) {
    const std::size_t n = costs.size();
    if (n == 0) return {};
    const std::size_t k = costs[0].size();
    for (const auto& row : costs) {
        if (row.size() != k) throw DimensionMismatch("cost matrix rows differ in length");
        for (double v : row) {
            if (!std::isfinite(v)) throw ValidationError("cost matrix has non-finite entries");
        }
    }
    if (n <= k) return hungarian_rows_le_cols(costs, k);

    CostMatrix t(k, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) t[j][i] = costs[i][j];
    }
    const MatchResult tr = hungarian_rows_le_cols(t, n);
    MatchResult out;
    out.total_cost = tr.total_cost;
    for (const auto& [cand, tgt] : tr.assignment) out.assignment.emplace_back(tgt, cand);
    std::sort(out.assignment.begin(), out.assignment.end());
    return out;
}

double param_loss(const Scene& target, const Scene& pred, const PrototypeBank& bank, const ParamLossOptions& opts) {
    return param_loss_impl(target, pred, bank, opts, nullptr, nullptr);
}

GradientVector grad_param_loss(const Scene& target, const FlatParams& pred, const PrototypeBank& bank,
                               const ParamLossOptions& opts, double* loss) {
    const Scene p = unflatten_raw(pred);
    GradientVector g(pred.values.size(), 0.0);
    const double l = param_loss_impl(target, p, bank, opts, &g, &pred.layout);
    if (loss) *loss = l;
    return g;
}

}  // namespace vscene
