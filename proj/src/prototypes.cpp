#include "vscene/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vscene/errors.hpp"
#include "vscene/geometry.hpp"
#include "vscene/parallel.hpp"
#include "vscene/random.hpp"
#include "vscene/renderer.hpp"

namespace vscene {

namespace {

double mse(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

// Smallest MSE of `a` (as posed) against any rotation of `b`, and the rotation index.
std::pair<double, std::size_t> best_rotation(const std::vector<double>& a, const std::vector<std::vector<double>>& b) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t r = 0; r < b.size(); ++r) {
        const double v = mse(a, b[r]);
        if (v < best) {
            best = v;
            arg = r;
        }
    }
    return {best, arg};
}

double rendering_distance(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    return std::min(best_rotation(a[0], b).first, best_rotation(b[0], a).first);
}

std::vector<std::size_t> assign_to_medoids(const DistanceMatrix& d, const std::vector<std::size_t>& medoids,
                                           double* cost) {
    const std::size_t n = d.size();
    std::vector<std::size_t> out(n, 0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < medoids.size(); ++m) {
            if (d[i][medoids[m]] < best) {
                best = d[i][medoids[m]];
                out[i] = m;
            }
        }
        total += best;
    }
    if (cost) *cost = total;
    return out;
}

double medoid_cost(const DistanceMatrix& d, const std::vector<std::size_t>& medoids) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m : medoids) best = std::min(best, d[i][m]);
        total += best;
    }
    return total;
}

ClusterResult pam_from(const DistanceMatrix& d, std::size_t k, std::size_t first) {
    const std::size_t n = d.size();
    std::vector<std::size_t> medoids{first};
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = d[i][first];
    while (medoids.size() < k) {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::find(medoids.begin(), medoids.end(), i) != medoids.end()) continue;
            if (nearest[i] > far_d) {
                far_d = nearest[i];
                far = i;
            }
        }
        medoids.push_back(far);
        for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], d[i][far]);
    }

    ClusterResult r;
    r.k = k;
    double cost = medoid_cost(d, medoids);
    r.cost_history.push_back(cost);
    std::vector<char> is_medoid(n, 0);
    for (std::size_t m : medoids) is_medoid[m] = 1;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> first_d(n), second_d(n);
    std::vector<std::size_t> first_pos(n);
    for (;;) {
        for (std::size_t j = 0; j < n; ++j) {
            first_d[j] = second_d[j] = inf;
            for (std::size_t p = 0; p < k; ++p) {
                const double v = d[j][medoids[p]];
                if (v < first_d[j]) {
                    second_d[j] = first_d[j];
                    first_d[j] = v;
                    first_pos[j] = p;
                } else if (v < second_d[j]) {
                    second_d[j] = v;
                }
            }
        }
        double best_delta = 0.0;
        std::size_t best_pos = 0, best_item = 0;
        bool found = false;
        for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t o = 0; o < n; ++o) {
                if (is_medoid[o]) continue;
                double delta = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double dj = d[j][o];
                    delta += first_pos[j] == p ? std::min(second_d[j], dj) - first_d[j] : std::min(0.0, dj - first_d[j]);
                }
                if (delta < best_delta - 1e-12 * std::max(1.0, std::abs(cost))) {
                    best_delta = delta;
                    best_pos = p;
                    best_item = o;
                    found = true;
                }
            }
        }
        if (!found) break;
        std::vector<std::size_t> trial = medoids;
        trial[best_pos] = best_item;
        const double next = medoid_cost(d, trial);
        if (!(next < cost)) break;
        is_medoid[medoids[best_pos]] = 0;
        is_medoid[best_item] = 1;
        medoids = std::move(trial);
        cost = next;
        r.cost_history.push_back(cost);
    }
    std::sort(medoids.begin(), medoids.end());
    r.medoids = medoids;
    r.assignment = assign_to_medoids(d, r.medoids, &r.cost);
    return r;
}

// Free shapes are stored as n^2 * coefficient for harmonic n, so equal optimizer steps move
// high harmonics far less than low ones.
double harmonic_gain(std::size_t n) { return static_cast<double>((n + 1) * (n + 1)); }

EfdShape shape_from_weights(const std::vector<double>& w, std::size_t harmonics) {
    EfdShape s(harmonics);
    for (std::size_t n = 0; n < harmonics; ++n) {
        for (std::size_t q = 0; q < 4; ++q) s.coeffs[n][q] = w[n * 4 + q] / harmonic_gain(n);
    }
    return s;
}

std::vector<double> weights_from_shape(const EfdShape& s) {
    std::vector<double> w;
    w.reserve(s.harmonics() * 4);
    for (std::size_t n = 0; n < s.harmonics(); ++n) {
        for (double v : s.coeffs[n]) w.push_back(v * harmonic_gain(n));
    }
    return w;
}

PrototypeBank coefficient_basis(std::size_t harmonics) {
    PrototypeBank b;
    for (std::size_t n = 0; n < harmonics; ++n) {
        for (std::size_t q = 0; q < 4; ++q) {
            EfdShape s(harmonics);
            s.coeffs[n][q] = 1.0 / harmonic_gain(n);
            b.shapes.push_back(s);
        }
    }
    return b;
}

double extent(const EfdShape& s, std::size_t k_points) {
    double e = 0.0;
    for (const Vec2& p : contour_from_efd(s, k_points)) e = std::max({e, std::abs(p.x), std::abs(p.y)});
    return e;
}

}  // namespace

std::vector<std::vector<double>> shape_renderings(const EfdShape& shape, const ShapeRaster& r) {
    if (r.size < 1 || r.rotations < 1) throw ValidationError("shape raster size and rotations must be positive");
    const EfdShape base = normalize_shape(shape);
    PrototypeBank bank;
    RenderConfig cfg;
    cfg.sigma = r.sigma;
    std::vector<std::vector<double>> out;
    for (int k = 0; k < r.rotations; ++k) {
        bank.shapes = {k == 0 ? base : normalize_shape(rotate_shape(base, 2.0 * kPi * k / r.rotations))};
        Scene s;
        s.width = s.height = r.size;
        ObjectParams o;
        o.color = {1.0, 1.0, 1.0};
        o.translation = {0.5, 0.5};
        o.scale = r.scale;
        o.shape_weights = {1.0};
        s.objects.push_back(o);
        const Image img = render(s, bank, cfg);
        std::vector<double> gray(img.pixels());
        for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = img.data[i * 3];
        out.push_back(std::move(gray));
    }
    return out;
}

double shape_distance(const EfdShape& a, const EfdShape& b, const ShapeRaster& r) {
    return rendering_distance(shape_renderings(a, r), shape_renderings(b, r));
}

DistanceMatrix shape_distances(const std::vector<EfdShape>& shapes, const ShapeRaster& r, unsigned threads) {
    const std::size_t n = shapes.size();
    std::vector<std::vector<std::vector<double>>> renders(n);
    parallel_for(n, threads, [&](std::size_t i) { renders[i] = shape_renderings(shapes[i], r); });
    DistanceMatrix d(n, std::vector<double>(n, 0.0));
    parallel_for(n, threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) d[i][j] = rendering_distance(renders[i], renders[j]);
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) d[i][j] = d[j][i];
    }
    return d;
}

ClusterResult k_medoids(const DistanceMatrix& d, std::size_t k, std::uint64_t seed) {
    const std::size_t n = d.size();
    if (k < 1 || k > n) throw InvalidK("k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
    for (const auto& row : d) {
        if (row.size() != n) throw DimensionMismatch("distance matrix is not square");
    }
    // Distinct seeded first medoids.
    Rng rng(seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const std::size_t starts = std::min<std::size_t>(n, 8);
    ClusterResult best;
    for (std::size_t s = 0; s < starts; ++s) {
        ClusterResult r = pam_from(d, k, order[s]);
        if (s == 0 || r.cost < best.cost - 1e-12 * std::max(1.0, best.cost)) best = std::move(r);
    }
    best.silhouette = silhouette(d, best.assignment);
    return best;
}

double silhouette(const DistanceMatrix& d, const std::vector<std::size_t>& assignment) {
    const std::size_t n = d.size();
    if (n == 0) return 0.0;
    std::size_t k = 0;
    for (std::size_t a : assignment) k = std::max(k, a + 1);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t a : assignment) ++sizes[a];
    double total = 0.0;
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t own = assignment[i];
        if (sizes[own] <= 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sums[assignment[j]] += d[i][j];
        }
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        }
        if (!std::isfinite(b)) continue;
        const double m = std::max(a, b);
        if (m > 0.0) total += (b - a) / m;
    }
    return total / static_cast<double>(n);
}

std::size_t choose_k(const DistanceMatrix& d, std::size_t k_min, std::size_t k_max, std::uint64_t seed) {
    const std::size_t n = d.size();
    if (k_min < 2 || k_max < k_min || n < 3 || k_max > n - 1) {
        throw InvalidRange("k range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                           "] must lie within [2, " + std::to_string(n == 0 ? 0 : n - 1) + "]");
    }
    std::size_t best_k = k_min;
    double best_s = -std::numeric_limits<double>::infinity();
    for (std::size_t k = k_min; k <= k_max; ++k) {
        const double s = k_medoids(d, k, seed).silhouette;
        if (s > best_s) {
            best_s = s;
            best_k = k;
        }
    }
    return best_k;
}

PrototypeBank circle_bank(std::size_t harmonics) {
    EfdShape s(harmonics);
    s.coeffs[0] = {1.0, 0.0, 0.0, 1.0};
    return PrototypeBank{{s}};
}

namespace {

// Fitted objects whose shape is fully observed and well explained: inside the frame, large enough,
// not overlapping another object of the same scene, and with a small residual under their mask.
std::vector<char> clean_objects(const Image& target, const Scene& scene, const PrototypeBank& basis,
                                const RenderConfig& rcfg, const DiscoveryConfig& cfg) {
    const Image fitted = render(scene, basis, rcfg);
    const std::size_t m = scene.objects.size();
    std::vector<LabelMap> masks;
    masks.reserve(m);
    for (const ObjectParams& o : scene.objects) {
        Scene one = scene;
        one.objects = {o};
        masks.push_back(render_labels(one, basis, rcfg));
    }
    std::vector<char> out(m, 0);
    const int r = cfg.residual_margin;
    for (std::size_t j = 0; j < m; ++j) {
        const LabelMap& l = masks[j];
        std::size_t area = 0;
        std::size_t shared = 0;
        bool border = false;
        LabelMap near(l.width, l.height);
        for (int y = 0; y < l.height; ++y) {
            for (int x = 0; x < l.width; ++x) {
                if (l.at(y, x) == 0) continue;
                ++area;
                if (x == 0 || y == 0 || x == l.width - 1 || y == l.height - 1) border = true;
                for (std::size_t k = 0; k < m; ++k) {
                    if (k != j && masks[k].at(y, x) != 0) {
                        ++shared;
                        break;
                    }
                }
                for (int yy = std::max(0, y - r); yy <= std::min(l.height - 1, y + r); ++yy) {
                    for (int xx = std::max(0, x - r); xx <= std::min(l.width - 1, x + r); ++xx) near.at(yy, xx) = 1;
                }
            }
        }
        if (border || area < cfg.min_area) continue;
        if (static_cast<double>(shared) > cfg.max_overlap * static_cast<double>(area)) continue;
        // Residual over the mask grown by `residual_margin` pixels, so under-covering fits count too.
        double residual = 0.0;
        std::size_t near_area = 0;
        for (int y = 0; y < l.height; ++y) {
            for (int x = 0; x < l.width; ++x) {
                if (near.at(y, x) == 0) continue;
                ++near_area;
                for (int ch = 0; ch < 3; ++ch) residual += std::abs(fitted.at(y, x, ch) - target.at(y, x, ch)) / 3.0;
            }
        }
        out[j] = residual <= cfg.max_residual * static_cast<double>(near_area) ? 1 : 0;
    }
    return out;
}

}  // namespace

DiscoveryResult discover_prototypes(const std::vector<Image>& images, const std::vector<Scene>& init_scenes,
                                    const PrototypeBank& init_bank, const DiscoveryConfig& cfg) {
    if (images.size() != init_scenes.size()) throw LengthMismatch("one initial scene per image is required");
    if (cfg.rounds < 1) throw ValidationError("prototypes.rounds must be >= 1");
    validate_bank(init_bank);
    validate_fit_config(cfg.fit);
    const std::size_t harmonics = init_bank[0].harmonics();
    const std::size_t k_points = cfg.fit.render.k_points;
    const PrototypeBank basis_bank = coefficient_basis(harmonics);
    const auto basis = sample_bank(basis_bank, k_points);

    // Express every object's shape as free coefficients.
    std::vector<Scene> scenes = init_scenes;
    for (Scene& s : scenes) {
        for (ObjectParams& o : s.objects) o.shape_weights = weights_from_shape(blend_coefficients(init_bank, o.shape_weights));
    }

    DiscoveryResult out;
    for (int round = 0; round < cfg.rounds; ++round) {
        std::vector<double> losses(images.size(), 0.0);
        parallel_for(images.size(), cfg.threads, [&](std::size_t i) {
            if (scenes[i].objects.empty()) {
                losses[i] = image_loss(render(scenes[i], PrototypeBank{}, cfg.fit.render), images[i], cfg.fit.loss);
                return;
            }
            FitReport r = fit_scene(images[i], scenes[i], basis, cfg.fit, {cfg.fit.budget, false}, false);
            scenes[i] = std::move(r.scene);
            losses[i] = r.best_loss;
        });
        double mean = 0.0;
        for (double v : losses) mean += v;
        out.round_losses.push_back(images.empty() ? 0.0 : mean / static_cast<double>(images.size()));

        std::vector<EfdShape> pooled;
        std::vector<std::pair<std::size_t, std::size_t>> owner;
        std::vector<std::vector<char>> clean(scenes.size());
        parallel_for(scenes.size(), cfg.threads,
                     [&](std::size_t i) { clean[i] = clean_objects(images[i], scenes[i], basis_bank, cfg.fit.render, cfg); });
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            for (std::size_t j = 0; j < scenes[i].objects.size(); ++j) {
                pooled.push_back(shape_from_weights(scenes[i].objects[j].shape_weights, harmonics));
                owner.emplace_back(i, j);
            }
        }
        // A shape whose normalized outline no longer triangulates cannot be compared; it keeps its fit.
        std::vector<std::vector<std::vector<double>>> renders(pooled.size());
        parallel_for(pooled.size(), cfg.threads, [&](std::size_t p) {
            try {
                renders[p] = shape_renderings(pooled[p], cfg.raster);
            } catch (const TriangulationFailure&) {
            }
        });
        std::vector<std::size_t> members;
        for (std::size_t p = 0; p < pooled.size(); ++p) {
            if (clean[owner[p].first][owner[p].second] && !renders[p].empty()) members.push_back(p);
        }
        if (members.size() < 3) {
            members.clear();
            for (std::size_t p = 0; p < pooled.size(); ++p) {
                if (!renders[p].empty()) members.push_back(p);
            }
        }
        if (members.size() < 3) throw TooSmall("prototype discovery needs at least 3 fitted objects");

        // Singletons and clusters holding less than `min_cluster_fraction` of the clustered shapes are
        // outliers; their members are dropped once and the rest re-clustered.
        for (int pass = 0;; ++pass) {
            DistanceMatrix d(members.size(), std::vector<double>(members.size(), 0.0));
            parallel_for(members.size(), cfg.threads, [&](std::size_t a) {
                for (std::size_t b = a + 1; b < members.size(); ++b) {
                    d[a][b] = rendering_distance(renders[members[a]], renders[members[b]]);
                }
            });
            for (std::size_t a = 0; a < members.size(); ++a) {
                for (std::size_t b = 0; b < a; ++b) d[a][b] = d[b][a];
            }
            const std::size_t k_max = std::min(cfg.k_max, members.size() - 1);
            const std::size_t k = choose_k(d, std::min(cfg.k_min, k_max), k_max, cfg.seed);
            out.clusters = k_medoids(d, k, cfg.seed);
            std::vector<std::size_t> sizes(k, 0);
            for (std::size_t a : out.clusters.assignment) ++sizes[a];
            const double floor = std::max(2.0, cfg.min_cluster_fraction * static_cast<double>(members.size()));
            std::vector<std::size_t> kept;
            for (std::size_t a = 0; a < members.size(); ++a) {
                if (static_cast<double>(sizes[out.clusters.assignment[a]]) >= floor) kept.push_back(members[a]);
            }
            if (pass > 0 || kept.size() == members.size() || kept.size() < 3) break;
            members = std::move(kept);
        }
        for (std::size_t& m : out.clusters.medoids) m = members[m];

        std::vector<std::vector<std::vector<double>>> medoid_renders;
        std::vector<EfdShape> medoid_shapes;
        for (std::size_t m : out.clusters.medoids) {
            medoid_shapes.push_back(normalize_shape(pooled[m], k_points));
            medoid_renders.push_back(renders[m]);
        }
        // Every pooled shape, clustered or not, goes to its nearest medoid.
        std::vector<std::size_t> nearest(pooled.size(), 0);
        parallel_for(pooled.size(), cfg.threads, [&](std::size_t p) {
            if (renders[p].empty()) return;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < medoid_renders.size(); ++c) {
                const double v = rendering_distance(renders[p], medoid_renders[c]);
                if (v < best) {
                    best = v;
                    nearest[p] = c;
                }
            }
        });
        out.clustered = members;
        std::vector<EfdShape> replaced(pooled.size());
        parallel_for(pooled.size(), cfg.threads, [&](std::size_t p) {
            replaced[p] = pooled[p];
            if (renders[p].empty()) return;
            const std::size_t c = nearest[p];
            const std::size_t rot = best_rotation(renders[p][0], medoid_renders[c]).second;
            const EfdShape aligned = normalize_shape(
                rotate_shape(medoid_shapes[c], 2.0 * kPi * static_cast<double>(rot) / cfg.raster.rotations), k_points);
            const EfdShape scaled = scale_shape(aligned, extent(pooled[p], k_points));
            if (is_simple_polygon(contour_from_efd(scaled, k_points))) replaced[p] = scaled;
        });
        for (std::size_t p = 0; p < pooled.size(); ++p) {
            scenes[owner[p].first].objects[owner[p].second].shape_weights = weights_from_shape(replaced[p]);
        }
        out.pooled_shapes = std::move(pooled);
        out.bank.shapes = medoid_shapes;
    }
    out.scenes = std::move(scenes);
    return out;
}

std::vector<Scene> discovery_init(const std::vector<Image>& images, const std::vector<int>& n_objects,
                                  const DiscoveryConfig& cfg, std::size_t harmonics) {
    if (images.size() != n_objects.size()) throw LengthMismatch("one object count per image is required");
    const PrototypeBank start = circle_bank(harmonics);
    FitConfig fc = cfg.fit;
    fc.peak_candidates = 1;
    fc.angle_restarts = 1;
    std::vector<Scene> out(images.size());
    parallel_for(images.size(), cfg.threads, [&](std::size_t i) {
        out[i] = fit_opt_iter(images[i], n_objects[i], start, fc, derive_seed(cfg.seed, i)).scene;
    });
    return out;
}

}  // namespace vscene
