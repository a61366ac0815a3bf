#include "vscene/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vscene/errors.hpp"

namespace vscene {

void validate_render_config(const RenderConfig& cfg) {
    if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) throw ValidationError("render.sigma must be > 0");
    if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) throw ValidationError("render.gamma must be > 0");
    if (cfg.k_points < 3) throw ValidationError("render.k_points must be >= 3");
    if (!(cfg.saturation > 0.0)) throw ValidationError("render.saturation must be > 0");
}

Contour Mesh::object_polygon(std::size_t i) const {
    return Contour(vertices.begin() + static_cast<std::ptrdiff_t>(object_begin[i]),
                   vertices.begin() + static_cast<std::ptrdiff_t>(object_begin[i + 1]));
}

Contour place_contour(const Contour& canonical, const ObjectParams& o) {
    const double c = o.rotation.x, s = o.rotation.y;
    Contour out(canonical.size());
    for (std::size_t k = 0; k < canonical.size(); ++k) {
        const Vec2& p = canonical[k];
        out[k] = {o.translation.x + o.scale * (c * p.x - s * p.y), o.translation.y + o.scale * (s * p.x + c * p.y)};
    }
    return out;
}

PoseGradient place_contour_grad(const Contour& canonical, const ObjectParams& o, std::span<const Vec2> d_vertices) {
    const double c = o.rotation.x, s = o.rotation.y;
    PoseGradient g;
    g.d_canonical.resize(canonical.size());
    for (std::size_t k = 0; k < canonical.size(); ++k) {
        const Vec2& p = canonical[k];
        const Vec2& dv = d_vertices[k];
        g.d_translation += dv;
        const Vec2 rp{c * p.x - s * p.y, s * p.x + c * p.y};
        g.d_scale += dot(dv, rp);
        g.d_rotation.x += o.scale * (dv.x * p.x + dv.y * p.y);
        g.d_rotation.y += o.scale * (-dv.x * p.y + dv.y * p.x);
        g.d_canonical[k] = {o.scale * (c * dv.x + s * dv.y), o.scale * (-s * dv.x + c * dv.y)};
    }
    return g;
}

std::vector<Contour> sample_bank(const PrototypeBank& bank, std::size_t k_points) {
    std::vector<Contour> out;
    out.reserve(bank.size());
    if (bank.size() == 0) return out;
    const EfdBasis basis(bank[0].harmonics(), k_points);
    for (const EfdShape& s : bank.shapes) {
        out.push_back(s.harmonics() == basis.harmonics ? contour_from_efd(s, basis) : contour_from_efd(s, k_points));
    }
    return out;
}

Contour weighted_contour(const std::vector<Contour>& sampled_bank, std::span<const double> weights) {
    if (weights.size() != sampled_bank.size() || sampled_bank.empty()) {
        throw InvalidScene("shape weights do not match the prototype bank size");
    }
    Contour out(sampled_bank[0].size(), Vec2{});
    for (std::size_t j = 0; j < sampled_bank.size(); ++j) {
        const double w = weights[j];
        if (w == 0.0) continue;
        for (std::size_t p = 0; p < out.size(); ++p) out[p] += w * sampled_bank[j][p];
    }
    return out;
}

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

}  // namespace

Rasterizer::Rasterizer(RasterInput input, const RenderConfig& cfg) : input_(std::move(input)), cfg_(cfg) {
    validate_render_config(cfg_);
    if (input_.width < 1 || input_.height < 1) throw InvalidScene("raster dimensions must be positive");
    logit_.resize(input_.objects.size());
    for (std::size_t j = 0; j < input_.objects.size(); ++j) logit_[j] = input_.objects[j].confidence / cfg_.gamma;
    if (cfg_.background_logit) background_logit_ = *cfg_.background_logit / cfg_.gamma;
    compute_coverage();
    composite();
}

bool Rasterizer::pixel_weights(std::size_t begin, std::size_t end, std::vector<double>& w) const {
    w.assign(end - begin, 0.0);
    if (begin == end) return false;
    double top = background_logit_;
    for (std::size_t q = begin; q < end; ++q) top = std::max(top, logit_[coverage_[q].object] + coverage_[q].log_mask);
    double denom = std::exp(background_logit_ - top);
    for (std::size_t q = begin; q < end; ++q) {
        w[q - begin] = std::exp(logit_[coverage_[q].object] + coverage_[q].log_mask - top);
        denom += w[q - begin];
    }
    for (double& v : w) v /= denom;
    return true;
}

void Rasterizer::compute_coverage() {
    const int W = input_.width, H = input_.height;
    const std::size_t n_obj = input_.objects.size();
    double low = cfg_.background_logit ? background_logit_ : std::numeric_limits<double>::infinity();
    for (double l : logit_) low = std::min(low, l);

    struct Bounds {
        double x0, x1, y0, y1;
    };
    std::vector<Bounds> bounds(n_obj);
    for (std::size_t j = 0; j < n_obj; ++j) {
        Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                 std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (const Vec2& p : input_.objects[j].polygon) {
            b.x0 = std::min(b.x0, p.x);
            b.x1 = std::max(b.x1, p.x);
            b.y0 = std::min(b.y0, p.y);
            b.y1 = std::max(b.y1, p.y);
        }
        bounds[j] = b;
    }

    pixel_begin_.assign(static_cast<std::size_t>(W) * static_cast<std::size_t>(H) + 1, 0);
    coverage_.clear();
    std::vector<std::vector<Coverage>> row_cells(static_cast<std::size_t>(W));
    std::vector<double> crossings;
    std::vector<int> near_edges;

    for (int row = 0; row < H; ++row) {
        const double py = (row + 0.5) / H;
        for (auto& cell : row_cells) cell.clear();
        for (std::size_t j = 0; j < n_obj; ++j) {
            const Bounds& b = bounds[j];
            const double r2 = (cfg_.saturation + (logit_[j] - low)) * cfg_.sigma;
            const double r = std::sqrt(r2);
            if (py < b.y0 - r || py > b.y1 + r) continue;
            const Contour& poly = input_.objects[j].polygon;
            const int n = static_cast<int>(poly.size());
            crossings.clear();
            near_edges.clear();
            for (int e = 0; e < n; ++e) {
                const Vec2& a = poly[e];
                const Vec2& c = poly[(e + 1) % n];
                if ((a.y > py) != (c.y > py)) crossings.push_back(a.x + (py - a.y) * (c.x - a.x) / (c.y - a.y));
                if (py >= std::min(a.y, c.y) - r && py <= std::max(a.y, c.y) + r) near_edges.push_back(e);
            }
            std::sort(crossings.begin(), crossings.end());
            const int col0 = std::max(0, static_cast<int>(std::floor((b.x0 - r) * W - 0.5)));
            const int col1 = std::min(W - 1, static_cast<int>(std::ceil((b.x1 + r) * W - 0.5)));
            std::size_t cross_left = 0;  // crossings with x <= px
            for (int col = col0; col <= col1; ++col) {
                const double px = (col + 0.5) / W;
                while (cross_left < crossings.size() && crossings[cross_left] <= px) ++cross_left;
                const bool inside = ((crossings.size() - cross_left) % 2) == 1;
                double best = std::numeric_limits<double>::infinity();
                int best_edge = -1;
                double best_u = 0.0;
                Vec2 best_diff{};
                for (int e : near_edges) {
                    const Vec2& a = poly[e];
                    const Vec2& c = poly[(e + 1) % n];
                    if (px < std::min(a.x, c.x) - r || px > std::max(a.x, c.x) + r) continue;
                    const Vec2 ab = c - a;
                    const Vec2 ap{px - a.x, py - a.y};
                    const double len2 = dot(ab, ab);
                    double u = len2 > 0.0 ? dot(ap, ab) / len2 : 0.0;
                    u = std::clamp(u, 0.0, 1.0);
                    const Vec2 diff = ap - u * ab;
                    const double dist2 = dot(diff, diff);
                    if (dist2 < best) {
                        best = dist2;
                        best_edge = e;
                        best_u = u;
                        best_diff = diff;
                    }
                }
                const double sign = inside ? 1.0 : -1.0;
                if (best_edge < 0 || best > r2) {
                    if (inside) row_cells[col].push_back({static_cast<std::uint32_t>(j), -1, 1.0, 0.0, 1.0, 0.0, {}});
                    continue;
                }
                const double x = sign * best / cfg_.sigma;
                row_cells[col].push_back(
                    {static_cast<std::uint32_t>(j), best_edge, sigmoid(x), log_sigmoid(x), sign, best_u, best_diff});
            }
        }
        for (int col = 0; col < W; ++col) {
            const std::size_t pix = static_cast<std::size_t>(row) * static_cast<std::size_t>(W) + static_cast<std::size_t>(col);
            coverage_.insert(coverage_.end(), row_cells[col].begin(), row_cells[col].end());
            pixel_begin_[pix + 1] = coverage_.size();
        }
    }
}

void Rasterizer::composite() {
    const int W = input_.width, H = input_.height;
    image_ = Image(W, H);
    clamped_ = 0;
    const Rgb& bg = input_.background;
    std::vector<double> w;
    for (std::size_t pix = 0; pix + 1 < pixel_begin_.size(); ++pix) {
        const std::size_t b = pixel_begin_[pix], e = pixel_begin_[pix + 1];
        pixel_weights(b, e, w);
        double prod = 1.0;
        Rgb col{0.0, 0.0, 0.0};
        for (std::size_t q = b; q < e; ++q) {
            const Coverage& cv = coverage_[q];
            prod *= 1.0 - w[q - b] * cv.mask;
            const Rgb& c = input_.objects[cv.object].color;
            for (int ch = 0; ch < 3; ++ch) col[ch] += w[q - b] * c[ch];
        }
        const double alpha = 1.0 - prod;
        for (int ch = 0; ch < 3; ++ch) {
            double v = alpha * col[ch] + (1.0 - alpha) * bg[ch];
            if (v < 0.0 || v > 1.0) {
                ++clamped_;
                v = std::clamp(v, 0.0, 1.0);
            }
            image_.data[pix * 3 + static_cast<std::size_t>(ch)] = v;
        }
    }
}

LabelMap Rasterizer::labels() const {
    LabelMap out(input_.width, input_.height);
    for (std::size_t pix = 0; pix + 1 < pixel_begin_.size(); ++pix) {
        double best = 0.5;
        int label = 0;
        for (std::size_t q = pixel_begin_[pix]; q < pixel_begin_[pix + 1]; ++q) {
            if (coverage_[q].mask > best) {
                best = coverage_[q].mask;
                label = static_cast<int>(coverage_[q].object) + 1;
            }
        }
        out.labels[pix] = label;
    }
    return out;
}

RasterGradient Rasterizer::gradient(const Image& adjoint) const {
    if (adjoint.width != input_.width || adjoint.height != input_.height) {
        throw DimensionMismatch("adjoint dimensions do not match the raster");
    }
    const std::size_t n_obj = input_.objects.size();
    RasterGradient g;
    g.d_vertices.resize(n_obj);
    for (std::size_t j = 0; j < n_obj; ++j) g.d_vertices[j].assign(input_.objects[j].polygon.size(), Vec2{});
    g.d_color.assign(n_obj, Rgb{0.0, 0.0, 0.0});
    g.d_confidence.assign(n_obj, 0.0);
    const Rgb& bg = input_.background;

    std::vector<double> w, one_minus, grad_w, grad_mask;
    for (std::size_t pix = 0; pix + 1 < pixel_begin_.size(); ++pix) {
        Rgb adj{adjoint.data[pix * 3], adjoint.data[pix * 3 + 1], adjoint.data[pix * 3 + 2]};
        const std::size_t b = pixel_begin_[pix], e = pixel_begin_[pix + 1];
        const std::size_t n = e - b;
        if (n == 0) {
            for (int ch = 0; ch < 3; ++ch) g.d_background[ch] += adj[ch];
            continue;
        }
        pixel_weights(b, e, w);
        one_minus.assign(n, 1.0);
        Rgb col{0.0, 0.0, 0.0};
        double prod = 1.0;
        for (std::size_t q = 0; q < n; ++q) {
            const Coverage& cv = coverage_[b + q];
            one_minus[q] = 1.0 - w[q] * cv.mask;
            prod *= one_minus[q];
            const Rgb& c = input_.objects[cv.object].color;
            for (int ch = 0; ch < 3; ++ch) col[ch] += w[q] * c[ch];
        }
        const double alpha = 1.0 - prod;
        for (int ch = 0; ch < 3; ++ch) {
            const double v = alpha * col[ch] + (1.0 - alpha) * bg[ch];
            if (v < 0.0 || v > 1.0) adj[ch] = 0.0;  // clamped channel has zero derivative
        }
        double d_alpha = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
            g.d_background[ch] += adj[ch] * (1.0 - alpha);
            d_alpha += adj[ch] * (col[ch] - bg[ch]);
        }
        grad_w.assign(n, 0.0);
        grad_mask.assign(n, 0.0);
        double weighted_grad_w = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
            const Coverage& cv = coverage_[b + q];
            double others = 1.0;  // prod over k != q of (1 - w_k D_k)
            for (std::size_t k = 0; k < n; ++k) {
                if (k != q) others *= one_minus[k];
            }
            const Rgb& c = input_.objects[cv.object].color;
            double gw = d_alpha * cv.mask * others;
            for (int ch = 0; ch < 3; ++ch) {
                gw += adj[ch] * alpha * c[ch];
                g.d_color[cv.object][ch] += adj[ch] * alpha * w[q];
            }
            grad_w[q] = gw;
            grad_mask[q] = d_alpha * w[q] * others;
            weighted_grad_w += gw * w[q];
        }
        for (std::size_t q = 0; q < n; ++q) {
            const Coverage& cv = coverage_[b + q];
            const double centered = grad_w[q] - weighted_grad_w;
            g.d_confidence[cv.object] += w[q] * centered / cfg_.gamma;
            if (cv.edge < 0) continue;
            // dL/dD * D, with the weight's own dependence on D folded in as w * centered.
            const double d_log_mask = grad_mask[q] * cv.mask + w[q] * centered;
            const double d_dist = d_log_mask * (1.0 - cv.mask) / cfg_.sigma;
            // d = sign * |p - q|^2 with q the closest point on edge (a, c).
            const double scale = d_dist * cv.sign * -2.0;
            auto& dv = g.d_vertices[cv.object];
            const std::size_t n_poly = dv.size();
            const std::size_t ia = static_cast<std::size_t>(cv.edge);
            const std::size_t ic = (ia + 1) % n_poly;
            dv[ia] += (scale * (1.0 - cv.u)) * cv.diff;
            dv[ic] += (scale * cv.u) * cv.diff;
        }
    }
    return g;
}

namespace {

std::vector<Contour> placed_polygons(const Scene& scene, const std::vector<Contour>& sampled) {
    std::vector<Contour> out;
    out.reserve(scene.objects.size());
    for (const ObjectParams& o : scene.objects) {
        out.push_back(place_contour(weighted_contour(sampled, o.shape_weights), o));
    }
    return out;
}

}  // namespace

Mesh build_mesh(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg) {
    validate_render_config(cfg);
    const auto sampled = sample_bank(bank, cfg.k_points);
    const auto polys = placed_polygons(scene, sampled);
    Mesh mesh;
    mesh.object_begin.push_back(0);
    for (std::size_t i = 0; i < polys.size(); ++i) {
        const std::size_t base = mesh.vertices.size();
        for (const auto& t : ear_clip(polys[i], i)) {
            mesh.triangles.push_back({base + t[0], base + t[1], base + t[2]});
            mesh.triangle_object.push_back(i);
        }
        mesh.vertices.insert(mesh.vertices.end(), polys[i].begin(), polys[i].end());
        mesh.object_begin.push_back(mesh.vertices.size());
        mesh.object_color.push_back(scene.objects[i].color);
        mesh.object_confidence.push_back(scene.objects[i].confidence);
    }
    return mesh;
}

RasterInput raster_input(const Scene& scene, const std::vector<Contour>& sampled_bank, const RenderConfig& cfg) {
    validate_render_config(cfg);
    RasterInput in;
    in.width = scene.width;
    in.height = scene.height;
    in.background = scene.background;
    auto polys = placed_polygons(scene, sampled_bank);
    for (std::size_t i = 0; i < polys.size(); ++i) {
        // Ear clipping succeeds exactly on simple polygons; the coverage pass needs only the ring.
        if (!is_simple_polygon(polys[i])) throw TriangulationFailure(i, "polygon self-intersects");
        in.objects.push_back({std::move(polys[i]), scene.objects[i].color, scene.objects[i].confidence});
    }
    return in;
}

RasterInput raster_input(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg) {
    return raster_input(scene, sample_bank(bank, cfg.k_points), cfg);
}

Image render(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg) {
    return Rasterizer(raster_input(scene, bank, cfg), cfg).image();
}

LabelMap render_labels(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg) {
    return Rasterizer(raster_input(scene, bank, cfg), cfg).labels();
}

GradientVector scene_gradient(const Scene& scene, const std::vector<Contour>& sampled_bank, const RasterGradient& rg) {
    const FlatParams fp = flatten(scene);
    const Layout& l = fp.layout;
    GradientVector grad(l.size(), 0.0);
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const ObjectParams& o = scene.objects[i];
        const Contour canonical = weighted_contour(sampled_bank, o.shape_weights);
        const PoseGradient pg = place_contour_grad(canonical, o, rg.d_vertices[i]);
        const std::size_t c0 = l.offset(i, Aspect::kColor);
        for (int ch = 0; ch < 3; ++ch) grad[c0 + static_cast<std::size_t>(ch)] = rg.d_color[i][ch];
        const std::size_t t0 = l.offset(i, Aspect::kTranslation);
        grad[t0] = pg.d_translation.x;
        grad[t0 + 1] = pg.d_translation.y;
        grad[l.offset(i, Aspect::kScale)] = pg.d_scale;
        const std::size_t r0 = l.offset(i, Aspect::kRotation);
        grad[r0] = pg.d_rotation.x;
        grad[r0 + 1] = pg.d_rotation.y;
        const std::size_t s0 = l.offset(i, Aspect::kShape);
        for (std::size_t m = 0; m < sampled_bank.size(); ++m) {
            double acc = 0.0;
            for (std::size_t k = 0; k < canonical.size(); ++k) acc += dot(pg.d_canonical[k], sampled_bank[m][k]);
            grad[s0 + m] = acc;
        }
        grad[l.offset(i, Aspect::kConfidence)] = rg.d_confidence[i];
    }
    const std::size_t b0 = l.background_offset();
    for (int ch = 0; ch < 3; ++ch) grad[b0 + static_cast<std::size_t>(ch)] = rg.d_background[ch];
    return grad;
}

GradientVector render_grad(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg,
                           const Image& adjoint) {
    const auto sampled = sample_bank(bank, cfg.k_points);
    Rasterizer raster(raster_input(scene, sampled, cfg), cfg);
    return scene_gradient(scene, sampled, raster.gradient(adjoint));
}

}  // namespace vscene
