#include "vscene/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "vscene/errors.hpp"
#include "vscene/random.hpp"

namespace vscene {

void adam_update(AdamState& s, std::vector<double>& x, const GradientVector& grad, const std::vector<char>* trainable) {
    if (grad.size() != x.size() || s.m.size() != x.size() || s.v.size() != x.size() ||
        (trainable && trainable->size() != x.size())) {
        throw ShapeMismatch("Adam state, parameters and gradient differ in length");
    }
    ++s.step;
    const double t = static_cast<double>(s.step);
    const double bc1 = 1.0 - std::pow(s.cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(s.cfg.beta2, t);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (trainable && !(*trainable)[i]) continue;
        const double g = grad[i];
        s.m[i] = s.cfg.beta1 * s.m[i] + (1.0 - s.cfg.beta1) * g;
        s.v[i] = s.cfg.beta2 * s.v[i] + (1.0 - s.cfg.beta2) * g * g;
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        x[i] -= s.cfg.lr * mhat / (std::sqrt(vhat) + s.cfg.eps);
    }
}

void adam_step(AdamState& state, FlatParams& params, const GradientVector& grad, const std::vector<char>* trainable) {
    adam_update(state, params.values, grad, trainable);
    project(params);
}

PlateauScheduler::PlateauScheduler(double lr, const PlateauConfig& cfg)
    : cfg_(cfg), lr_(lr), best_(std::numeric_limits<double>::infinity()) {
    if (!(cfg.factor > 0.0 && cfg.factor < 1.0)) throw ValidationError("optimizer.plateau.factor must be in (0,1)");
    if (cfg.patience < 0 || cfg.cooldown < 0) throw ValidationError("optimizer.plateau counters must be >= 0");
}

double PlateauScheduler::step(double loss) {
    const bool improved = std::isinf(best_) ? loss < best_ : loss < best_ - cfg_.threshold * std::abs(best_);
    if (improved) {
        best_ = loss;
        bad_ = 0;
    } else {
        ++bad_;
    }
    if (cooldown_left_ > 0) {
        --cooldown_left_;
        bad_ = 0;
    }
    if (bad_ >= cfg_.patience && bad_ > 0) {
        lr_ *= cfg_.factor;
        ++cuts_;
        cooldown_left_ = cfg_.cooldown;
        bad_ = 0;
    }
    return lr_;
}

void validate_fit_config(const FitConfig& c) {
    validate_render_config(c.render);
    if (!(c.adam.lr > 0.0)) throw ValidationError("optimizer.lr must be > 0");
    if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0)) throw ValidationError("optimizer.beta1 must be in [0,1)");
    if (!(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0)) throw ValidationError("optimizer.beta2 must be in [0,1)");
    if (!(c.adam.eps > 0.0)) throw ValidationError("optimizer.eps must be > 0");
    if (!(c.plateau.factor > 0.0 && c.plateau.factor < 1.0)) {
        throw ValidationError("optimizer.plateau.factor must be in (0,1)");
    }
    if (c.plateau.patience < 0) throw ValidationError("optimizer.plateau.patience must be >= 0");
    if (c.plateau.cooldown < 0) throw ValidationError("optimizer.plateau.cooldown must be >= 0");
    if (c.budget < 1) throw ValidationError("optimizer.budget must be >= 1");
    if (c.rand_max_iterations < 1) throw ValidationError("optimizer.rand_max_iterations must be >= 1");
    if (c.blur_window < 1) throw ValidationError("optimizer.blur_window must be >= 1");
    if (c.color_window < 1) throw ValidationError("optimizer.color_window must be >= 1");
    if (!(c.init_scale > 0.0)) throw ValidationError("optimizer.init_scale must be > 0");
    if (c.peak_candidates < 1) throw ValidationError("optimizer.peak_candidates must be >= 1");
    if (c.angle_restarts < 1) throw ValidationError("optimizer.angle_restarts must be >= 1");
    if (!(c.residual_threshold >= 0.0)) throw ValidationError("optimizer.residual_threshold must be >= 0");
}

nlohmann::json fit_report_json(const FitReport& r) {
    return nlohmann::json{{"scene", r.scene},
                          {"best_loss", r.best_loss},
                          {"iterations", r.iterations},
                          {"loss_trace", r.loss_trace},
                          {"raw_trace", r.raw_trace}};
}

LoopResult run_adam(const Objective& obj, std::vector<double> x, const FitConfig& cfg, const LoopOptions& opts) {
    LoopResult out;
    out.best_loss = std::numeric_limits<double>::infinity();
    AdamState adam(x.size(), cfg.adam);
    PlateauScheduler sched(cfg.adam.lr, cfg.plateau);
    std::vector<double> grad(x.size()), last_good;
    const std::vector<char>* mask = obj.trainable.empty() ? nullptr : &obj.trainable;
    double prev_loss = std::numeric_limits<double>::quiet_NaN();
    int flat_steps = 0;

    for (int it = 0; it < opts.max_iterations; ++it) {
        double loss;
        try {
            loss = obj.eval(x, grad);
        } catch (const TriangulationFailure&) {
            if (last_good.empty()) throw;
            x = last_good;
            adam.cfg.lr *= 0.5;
            out.raw_trace.push_back(out.best_loss);
            out.loss_trace.push_back(out.best_loss);
            continue;
        }
        last_good = x;
        out.raw_trace.push_back(loss);
        if (loss < out.best_loss) {
            out.best_loss = loss;
            out.best = x;
        }
        out.loss_trace.push_back(out.best_loss);
        if (opts.stop_on_convergence) {
            flat_steps = std::abs(loss - prev_loss) < cfg.converge_delta ? flat_steps + 1 : 0;
            prev_loss = loss;
            if (flat_steps >= cfg.converge_window || adam.cfg.lr < cfg.converge_lr) break;
        }
        if (it + 1 == opts.max_iterations) break;
        adam_update(adam, x, grad, mask);
        if (obj.project) obj.project(x);
        adam.cfg.lr = std::min(adam.cfg.lr, sched.step(loss));
    }
    if (out.best.empty()) {
        out.best = x;
    }
    return out;
}

double image_objective(const Image& target, const Scene& scene, const std::vector<Contour>& sampled_bank,
                       const FitConfig& cfg, GradientVector& grad) {
    Rasterizer raster(raster_input(scene, sampled_bank, cfg.render), cfg.render);
    Image adjoint;
    const double loss = image_loss_adjoint(raster.image(), target, cfg.loss, adjoint);
    grad = scene_gradient(scene, sampled_bank, raster.gradient(adjoint));
    return loss;
}

std::vector<char> trainable_mask(const Layout& layout, const FitConfig& cfg) {
    std::vector<char> mask(layout.size(), 1);
    if (!cfg.train_confidence) {
        for (std::size_t i = 0; i < layout.n_objects; ++i) mask[layout.offset(i, Aspect::kConfidence)] = 0;
    }
    return mask;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

FitReport fit_scene(const Image& target, const Scene& init, const std::vector<Contour>& sampled,
                    const FitConfig& cfg, const LoopOptions& opts, bool simplex_shapes) {
    const auto t0 = std::chrono::steady_clock::now();
    if (init.width != target.width || init.height != target.height) {
        throw DimensionMismatch("initial scene and target differ in size");
    }
    FlatParams fp = flatten(init);
    project(fp, simplex_shapes);
    const Layout layout = fp.layout;
    Objective obj;
    obj.eval = [&](const std::vector<double>& x, std::vector<double>& g) {
        return image_objective(target, unflatten_raw(FlatParams{x, layout}), sampled, cfg, g);
    };
    obj.project = [&](std::vector<double>& x) {
        FlatParams p{std::move(x), layout};
        project(p, simplex_shapes);
        x = std::move(p.values);
    };
    obj.trainable = trainable_mask(layout, cfg);
    LoopResult r = run_adam(obj, fp.values, cfg, opts);

    FitReport rep;
    rep.scene = unflatten(FlatParams{r.best, layout}, simplex_shapes);
    rep.loss_trace = std::move(r.loss_trace);
    rep.raw_trace = std::move(r.raw_trace);
    rep.best_loss = r.best_loss;
    rep.iterations = static_cast<int>(rep.raw_trace.size());
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

Rgb empty_scene_background(const Image& target, ImageLossKind kind) {
    Rgb out{0.0, 0.0, 0.0};
    const std::size_t n = target.pixels();
    if (n == 0) return out;
    for (int ch = 0; ch < 3; ++ch) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = target.data[i * 3 + ch];
        if (kind == ImageLossKind::kMse) {
            double sum = 0.0;
            for (double x : v) sum += x;
            out[ch] = sum / static_cast<double>(n);
        } else {
            std::sort(v.begin(), v.end());
            out[ch] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        }
    }
    return out;
}

FitReport fit_from_init(const Image& target, const Scene& init, const PrototypeBank& bank, const FitConfig& cfg) {
    validate_fit_config(cfg);
    const auto sampled = sample_bank(bank, cfg.render.k_points);
    return fit_scene(target, init, sampled, cfg, {cfg.budget, false});
}

Scene random_init(int width, int height, int n_objects, std::size_t bank_size, std::uint64_t seed) {
    Rng rng(seed);
    Scene s;
    s.width = width;
    s.height = height;
    for (int i = 0; i < n_objects; ++i) {
        ObjectParams o;
        o.translation = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
        o.scale = rng.uniform(0.1, 0.3);
        for (double& c : o.color) c = rng.uniform();
        const double a = rng.uniform(0.0, 2.0 * kPi);
        o.rotation = {std::cos(a), std::sin(a)};
        o.shape_weights.assign(bank_size, 1.0 / static_cast<double>(bank_size));
        o.confidence = 1.0;
        s.objects.push_back(std::move(o));
    }
    for (double& c : s.background) c = rng.uniform();
    return s;
}

FitReport fit_rand_optp(const Image& target, int n_objects, const PrototypeBank& bank, const FitConfig& cfg,
                        std::uint64_t seed) {
    validate_fit_config(cfg);
    if (n_objects < 1) throw ValidationError("n_objects must be >= 1");
    const auto sampled = sample_bank(bank, cfg.render.k_points);
    const Scene init = random_init(target.width, target.height, n_objects, bank.size(), seed);
    return fit_scene(target, init, sampled, cfg, {cfg.rand_max_iterations, true});
}

std::vector<ResidualPeak> residual_peaks(const Image& target, const Image& current, int window, std::size_t count,
                                         double min_separation) {
    if (target.width != current.width || target.height != current.height) {
        throw DimensionMismatch("residual images differ in size");
    }
    const int w = target.width, h = target.height;
    // Summed-area table of the per-pixel L1 residual.
    std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    auto at = [&](int r, int c) -> double& { return sat[static_cast<std::size_t>(r) * (w + 1) + c]; };
    for (int r = 0; r < h; ++r) {
        double line = 0.0;
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < 3; ++ch) line += std::abs(target.at(r, c, ch) - current.at(r, c, ch));
            at(r + 1, c + 1) = at(r, c + 1) + line;
        }
    }
    const int half = window / 2;
    std::vector<double> blurred(static_cast<std::size_t>(w) * h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int r0 = std::max(0, r - half), r1 = std::min(h, r + half + 1);
            const int c0 = std::max(0, c - half), c1 = std::min(w, c + half + 1);
            const double sum = at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0);
            blurred[static_cast<std::size_t>(r) * w + c] = sum / static_cast<double>((r1 - r0) * (c1 - c0));
        }
    }
    std::vector<ResidualPeak> peaks;
    const double sep2 = min_separation * min_separation;
    while (peaks.size() < count) {
        ResidualPeak best{-1.0, 0, 0};
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const double v = blurred[static_cast<std::size_t>(r) * w + c];
                if (v <= best.value) continue;
                bool clear = true;
                for (const auto& p : peaks) {
                    const double dx = (c - p.col) / static_cast<double>(w), dy = (r - p.row) / static_cast<double>(h);
                    if (dx * dx + dy * dy < sep2) clear = false;
                }
                if (clear) best = {v, r, c};
            }
        }
        if (best.value < 0.0) break;
        peaks.push_back(best);
    }
    return peaks;
}

FitReport fit_opt_iter(const Image& target, int max_objects, const PrototypeBank& bank, const FitConfig& cfg,
                       std::uint64_t seed) {
    validate_fit_config(cfg);
    if (max_objects < 1) throw ValidationError("max_objects must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    const auto sampled = sample_bank(bank, cfg.render.k_points);
    Rng rng(seed);

    Scene best;
    best.width = target.width;
    best.height = target.height;
    best.background = empty_scene_background(target, cfg.loss);

    FitReport rep;
    Image current = render(best, bank, cfg.render);
    rep.best_loss = image_loss(current, target, cfg.loss);
    rep.raw_trace.push_back(rep.best_loss);
    rep.loss_trace.push_back(rep.best_loss);

    for (int round = 0; round < max_objects; ++round) {
        const auto peaks = residual_peaks(target, current, cfg.blur_window,
                                          static_cast<std::size_t>(cfg.peak_candidates), cfg.init_scale);
        if (peaks.empty() || peaks[0].value < cfg.residual_threshold) break;

        // Start angles: one random draw plus evenly spaced offsets.
        const double a0 = rng.uniform(0.0, 2.0 * kPi);
        FitReport step;
        bool have_step = false;
        for (const auto& peak : peaks) {
            if (peak.value < cfg.residual_threshold) continue;
            ObjectParams o;
            const int half = cfg.color_window / 2;
            Rgb color{0.0, 0.0, 0.0};
            int count = 0;
            for (int r = std::max(0, peak.row - half); r <= std::min(target.height - 1, peak.row + half); ++r) {
                for (int c = std::max(0, peak.col - half); c <= std::min(target.width - 1, peak.col + half); ++c) {
                    for (int ch = 0; ch < 3; ++ch) color[ch] += target.at(r, c, ch);
                    ++count;
                }
            }
            for (double& v : color) v /= count;
            o.color = color;
            o.translation = {(peak.col + 0.5) / target.width, (peak.row + 0.5) / target.height};
            o.scale = cfg.init_scale;
            o.shape_weights.assign(bank.size(), 1.0 / static_cast<double>(bank.size()));
            o.confidence = 1.0;
            for (int k = 0; k < cfg.angle_restarts; ++k) {
                const double a = a0 + 2.0 * kPi * k / cfg.angle_restarts;
                o.rotation = {std::cos(a), std::sin(a)};
                Scene init = best;
                init.objects.push_back(o);
                FitReport trial = fit_scene(target, init, sampled, cfg, {cfg.budget, false});
                if (!have_step || trial.best_loss < step.best_loss) {
                    step = std::move(trial);
                    have_step = true;
                }
            }
        }
        for (double v : step.raw_trace) rep.raw_trace.push_back(v);
        if (step.best_loss <= rep.best_loss) {
            rep.best_loss = step.best_loss;
            best = step.scene;
        }
        for (std::size_t i = 0; i < step.raw_trace.size(); ++i) {
            rep.loss_trace.push_back(std::min(rep.loss_trace.back(), step.loss_trace[i]));
        }
        current = render(best, bank, cfg.render);
    }
    rep.scene = best;
    rep.iterations = static_cast<int>(rep.raw_trace.size());
    rep.wall_seconds = seconds_since(t0);
    return rep;
}

}  // namespace vscene
