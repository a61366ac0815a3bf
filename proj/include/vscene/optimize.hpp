#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "vscene/efd.hpp"
#include "vscene/image.hpp"
#include "vscene/losses.hpp"
#include "vscene/renderer.hpp"
#include "vscene/scene.hpp"

namespace vscene {

struct AdamConfig {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;  // cfg.lr is the current learning rate
    std::size_t step = 0;
    std::vector<double> m;
    std::vector<double> v;

    AdamState() = default;
    AdamState(std::size_t n, const AdamConfig& c) : cfg(c), m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update of `x` in place. Entries with trainable[i] == 0 are left alone.
/// Throws ShapeMismatch.
void adam_update(AdamState& state, std::vector<double>& x, const GradientVector& grad,
                 const std::vector<char>* trainable = nullptr);

/// Adam update followed by re-projection onto valid scenes.
void adam_step(AdamState& state, FlatParams& params, const GradientVector& grad,
               const std::vector<char>* trainable = nullptr);

struct PlateauConfig {
    int patience = 10;
    int cooldown = 10;
    double factor = 0.5;
    double threshold = 1e-4;  // relative improvement needed to reset the counter
};

/// Cuts the learning rate by `factor` once the loss has failed to improve on the best value for
/// `patience` consecutive steps, then ignores `cooldown` steps.
class PlateauScheduler {
public:
    PlateauScheduler(double lr, const PlateauConfig& cfg = {});

    double step(double loss);
    double lr() const { return lr_; }
    int cuts() const { return cuts_; }

private:
    PlateauConfig cfg_;
    double lr_;
    double best_;
    int bad_ = 0;
    int cooldown_left_ = 0;
    int cuts_ = 0;
};

struct FitConfig {
    RenderConfig render;
    ImageLossKind loss = ImageLossKind::kMae;
    AdamConfig adam;
    PlateauConfig plateau;
    int budget = 100;
    bool train_confidence = false;

    int rand_max_iterations = 500;
    double converge_lr = 1e-5;
    double converge_delta = 1e-7;
    int converge_window = 20;

    int blur_window = 9;
    int color_window = 9;
    double init_scale = 0.15;
    double residual_threshold = 0.02;
    int peak_candidates = 2;  // Opt-Iter residual peaks tried per inserted candidate
    int angle_restarts = 4;   // start angles tried per peak
};

void validate_fit_config(const FitConfig& cfg);

struct FitReport {
    Scene scene;                     // best scene seen
    std::vector<double> loss_trace;  // best loss so far, per iteration
    std::vector<double> raw_trace;   // loss evaluated at each iteration
    double best_loss = 0.0;
    int iterations = 0;
    double wall_seconds = 0.0;
};

nlohmann::json fit_report_json(const FitReport& r);

/// Generic Adam loop. `eval` returns the loss and writes the gradient; `project` maps a proposal
/// back onto the feasible set. A TriangulationFailure reverts to the last evaluated point and
/// halves the learning rate.
struct Objective {
    std::function<double(const std::vector<double>&, std::vector<double>&)> eval;
    std::function<void(std::vector<double>&)> project;
    std::vector<char> trainable;
};

struct LoopOptions {
    int max_iterations = 100;
    bool stop_on_convergence = false;
};

struct LoopResult {
    std::vector<double> best;
    double best_loss = 0.0;
    std::vector<double> raw_trace;
    std::vector<double> loss_trace;
};

LoopResult run_adam(const Objective& obj, std::vector<double> x0, const FitConfig& cfg, const LoopOptions& opts);

/// Image loss of `scene` rendered against `target` and its gradient with respect to flatten(scene).
double image_objective(const Image& target, const Scene& scene, const std::vector<Contour>& sampled_bank,
                       const FitConfig& cfg, GradientVector& grad);

/// Trainable mask over the flat layout (confidence frozen unless cfg.train_confidence).
std::vector<char> trainable_mask(const Layout& layout, const FitConfig& cfg);

/// Adam fit of `init`, whose shapes are weights over `sampled_bank`. With `simplex_shapes` false
/// the shape weights are free coefficients and are not projected.
FitReport fit_scene(const Image& target, const Scene& init, const std::vector<Contour>& sampled_bank,
                    const FitConfig& cfg, const LoopOptions& opts, bool simplex_shapes = true);

FitReport fit_from_init(const Image& target, const Scene& init, const PrototypeBank& bank, const FitConfig& cfg);

/// Random initialization for `n_objects` slots.
Scene random_init(int width, int height, int n_objects, std::size_t bank_size, std::uint64_t seed);

FitReport fit_rand_optp(const Image& target, int n_objects, const PrototypeBank& bank, const FitConfig& cfg,
                        std::uint64_t seed);

struct ResidualPeak {
    double value = 0.0;  // box-blurred per-pixel L1 residual
    int row = 0;
    int col = 0;
};

/// Most divergent locations: maxima of the box-blurred per-pixel L1 residual, strongest first,
/// each at least `min_separation` (viewport units) from the ones before it.
std::vector<ResidualPeak> residual_peaks(const Image& target, const Image& current, int window, std::size_t count = 1,
                                         double min_separation = 0.0);

/// Background color minimizing the image loss of an empty scene: the per-channel median for MAE,
/// the mean for MSE.
Rgb empty_scene_background(const Image& target, ImageLossKind kind);

FitReport fit_opt_iter(const Image& target, int max_objects, const PrototypeBank& bank, const FitConfig& cfg,
                       std::uint64_t seed);

}  // namespace vscene
