#include "vscene/analysis.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "vscene/errors.hpp"
#include "vscene/parallel.hpp"
#include "vscene/random.hpp"
#include "vscene/renderer.hpp"

namespace vscene {

Scene interpolate_params(const Scene& p1, const Scene& p2, double alpha) {
    if (p1.objects.size() != p2.objects.size()) throw LengthMismatch("interpolated scenes need equal object counts");
    if (p1.shape_size() != p2.shape_size()) throw LengthMismatch("interpolated scenes need equal shape-weight lengths");
    Scene a = p2;
    if (!p2.objects.empty()) {
        const MatchResult m = hungarian(matching_costs(p2, p1));
        for (const auto& [t, c] : m.assignment) a.objects[t] = p1.objects[c];
    }
    a.background = p1.background;
    const FlatParams fa = flatten(a);
    FlatParams out = flatten(p2);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = alpha * fa.values[i] + (1.0 - alpha) * out.values[i];
    }
    return unflatten(out);
}

std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(const std::vector<Scene>& scenes, std::size_t n_pairs,
                                                              std::uint64_t seed) {
    if (scenes.size() < 2) throw EmptyManifest("at least two example scenes are required");
    std::map<std::size_t, std::vector<std::size_t>> by_count;
    for (std::size_t i = 0; i < scenes.size(); ++i) by_count[scenes[i].objects.size()].push_back(i);
    Rng rng(seed);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(n_pairs);
    for (std::size_t p = 0; p < n_pairs; ++p) {
        const std::size_t i = rng.below(scenes.size());
        const auto& peers = by_count[scenes[i].objects.size()];
        out.emplace_back(i, peers[rng.below(peers.size())]);
    }
    return out;
}

std::vector<double> default_alphas() {
    std::vector<double> a;
    for (int i = 1; i <= 10; ++i) a.push_back(i / 10.0);
    return a;
}

std::string loss_kind_name(ImageLossKind k) { return k == ImageLossKind::kMae ? "MAE" : "MSE"; }

namespace {

std::vector<Scene> manifest_scenes(const Manifest& m) {
    if (m.size() < 2) throw EmptyManifest("at least two examples are required");
    std::vector<Scene> out;
    out.reserve(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out.push_back(load_example_scene(m, i));
    return out;
}

constexpr std::size_t kAspectCount = std::size(kAllAspects);

// Cosine per aspect; empty when either slice vanishes.
std::vector<std::optional<double>> aspect_cosines(const Layout& layout, const GradientVector& gx,
                                                  const GradientVector& gp) {
    std::vector<double> dot(kAspectCount, 0.0), nx(kAspectCount, 0.0), np(kAspectCount, 0.0);
    for (const Slice& s : layout.slices()) {
        std::size_t a = 0;
        while (kAllAspects[a] != s.aspect) ++a;
        for (std::size_t i = s.offset; i < s.offset + s.length; ++i) {
            dot[a] += gx[i] * gp[i];
            nx[a] += gx[i] * gx[i];
            np[a] += gp[i] * gp[i];
        }
    }
    std::vector<std::optional<double>> out(kAspectCount);
    for (std::size_t a = 0; a < kAspectCount; ++a) {
        const double ax = std::sqrt(nx[a]);
        const double ap = std::sqrt(np[a]);
        if (ax < 1e-12 || ap < 1e-12) continue;
        out[a] = std::clamp(dot[a] / (ax * ap), -1.0, 1.0);
    }
    return out;
}

}  // namespace

std::vector<AlignmentRow> gradient_alignment(const std::vector<Scene>& scenes, const PrototypeBank& bank,
                                             const AnalysisConfig& cfg) {
    validate_render_config(cfg.render);
    for (double a : cfg.alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("analysis.alphas must lie in [0, 1]");
    }
    const auto pairs = sample_pairs(scenes, cfg.n_pairs, cfg.seed);
    const auto sampled = sample_bank(bank, cfg.render.k_points);
    const std::size_t n_alpha = cfg.alphas.size();
    const std::size_t n_loss = cfg.losses.size();

    // [pair][loss][alpha][aspect]
    using Cell = std::vector<std::optional<double>>;
    std::vector<std::vector<std::vector<Cell>>> cells(pairs.size());
    parallel_for(pairs.size(), cfg.threads, [&](std::size_t p) {
        const Scene& p1 = scenes[pairs[p].first];
        const Scene& p2 = scenes[pairs[p].second];
        const Image target = render(p2, bank, cfg.render);
        cells[p].assign(n_loss, std::vector<Cell>(n_alpha, Cell(kAspectCount)));
        for (std::size_t ai = 0; ai < n_alpha; ++ai) {
            const Scene mid = interpolate_params(p1, p2, cfg.alphas[ai]);
            const FlatParams fp = flatten(mid);
            const GradientVector gp = grad_param_loss(p2, fp, bank, cfg.param);
            for (std::size_t li = 0; li < n_loss; ++li) {
                FitConfig fc;
                fc.render = cfg.render;
                fc.loss = cfg.losses[li];
                GradientVector gx;
                try {
                    image_objective(target, mid, sampled, fc, gx);
                } catch (const TriangulationFailure&) {
                    continue;
                }
                cells[p][li][ai] = aspect_cosines(fp.layout, gx, gp);
            }
        }
    });

    std::vector<AlignmentRow> rows;
    for (std::size_t li = 0; li < n_loss; ++li) {
        for (std::size_t ai = 0; ai < n_alpha; ++ai) {
            for (std::size_t a = 0; a < kAspectCount; ++a) {
                AlignmentRow row;
                row.alpha = cfg.alphas[ai];
                row.aspect = kAllAspects[a];
                row.loss = cfg.losses[li];
                double sum = 0.0;
                for (std::size_t p = 0; p < pairs.size(); ++p) {
                    const auto& c = cells[p][li][ai][a];
                    if (c) {
                        sum += *c;
                        ++row.pairs;
                    } else {
                        ++row.skipped;
                    }
                }
                row.mean_cosine = row.pairs ? sum / static_cast<double>(row.pairs) : 0.0;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

std::vector<AlignmentRow> gradient_alignment(const Manifest& m, const PrototypeBank& bank, const AnalysisConfig& cfg) {
    return gradient_alignment(manifest_scenes(m), bank, cfg);
}

std::vector<RecoveryRow> recovery_study(const std::vector<Scene>& scenes, const PrototypeBank& bank,
                                        const AnalysisConfig& cfg, const FitConfig& fit) {
    validate_fit_config(fit);
    const auto pairs = sample_pairs(scenes, cfg.n_pairs, cfg.seed);
    const auto sampled = sample_bank(bank, fit.render.k_points);
    const std::size_t n_alpha = cfg.alphas.size();

    struct Outcome {
        bool ok = false;
        double before = 0.0;
        double after = 0.0;
    };
    std::vector<std::vector<Outcome>> out(pairs.size(), std::vector<Outcome>(n_alpha));
    parallel_for(pairs.size(), cfg.threads, [&](std::size_t p) {
        const Scene& p1 = scenes[pairs[p].first];
        const Scene& p2 = scenes[pairs[p].second];
        const Image target = render(p2, bank, fit.render);
        for (std::size_t ai = 0; ai < n_alpha; ++ai) {
            const Scene start = interpolate_params(p1, p2, cfg.alphas[ai]);
            try {
                const FitReport r = fit_scene(target, start, sampled, fit, {fit.budget, false});
                out[p][ai] = {true, param_loss(p2, start, bank, cfg.param), param_loss(p2, r.scene, bank, cfg.param)};
            } catch (const TriangulationFailure&) {
            }
        }
    });

    std::vector<RecoveryRow> rows;
    for (std::size_t ai = 0; ai < n_alpha; ++ai) {
        RecoveryRow row;
        row.alpha = cfg.alphas[ai];
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            if (!out[p][ai].ok) continue;
            row.mean_before += out[p][ai].before;
            row.mean_after += out[p][ai].after;
            ++row.pairs;
        }
        if (row.pairs) {
            row.mean_before /= static_cast<double>(row.pairs);
            row.mean_after /= static_cast<double>(row.pairs);
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<RecoveryRow> recovery_study(const Manifest& m, const PrototypeBank& bank, const AnalysisConfig& cfg,
                                        const FitConfig& fit) {
    return recovery_study(manifest_scenes(m), bank, cfg, fit);
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

std::string alignment_csv(const std::vector<AlignmentRow>& rows) {
    std::string s = "alpha,aspect,loss,mean_cosine,pairs,skipped\n";
    for (const AlignmentRow& r : rows) {
        s += fmt(r.alpha) + "," + std::string(aspect_name(r.aspect)) + "," + loss_kind_name(r.loss) + "," +
             fmt(r.mean_cosine) + "," + std::to_string(r.pairs) + "," + std::to_string(r.skipped) + "\n";
    }
    return s;
}

std::string recovery_csv(const std::vector<RecoveryRow>& rows) {
    std::string s = "alpha,mean_lp_before,mean_lp_after,pairs\n";
    for (const RecoveryRow& r : rows) {
        s += fmt(r.alpha) + "," + fmt(r.mean_before) + "," + fmt(r.mean_after) + "," + std::to_string(r.pairs) + "\n";
    }
    return s;
}

}  // namespace vscene
