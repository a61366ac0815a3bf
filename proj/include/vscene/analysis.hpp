#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vscene/efd.hpp"
#include "vscene/generator.hpp"
#include "vscene/losses.hpp"
#include "vscene/optimize.hpp"
#include "vscene/scene.hpp"

namespace vscene {

/// Linear blend alpha * p1 + (1 - alpha) * p2 of two scenes with equal object counts. Objects of
/// p1 are first matched to those of p2 (Hungarian on matching_cost), the result follows p2's object
/// order and is re-projected. Throws LengthMismatch.
Scene interpolate_params(const Scene& p1, const Scene& p2, double alpha);

/// Pairs (i, j) of scene indices with equal object counts. j is drawn uniformly among the scenes
/// sharing i's count, which is the distribution of resampling j until the counts agree.
std::vector<std::pair<std::size_t, std::size_t>> sample_pairs(const std::vector<Scene>& scenes, std::size_t n_pairs,
                                                              std::uint64_t seed);

std::vector<double> default_alphas();

struct AlignmentRow {
    double alpha = 0.0;
    Aspect aspect = Aspect::kBackground;
    ImageLossKind loss = ImageLossKind::kMae;
    double mean_cosine = 0.0;
    std::size_t pairs = 0;    // pairs contributing to the mean
    std::size_t skipped = 0;  // pairs where either gradient slice vanished
};

struct AnalysisConfig {
    std::vector<double> alphas = default_alphas();
    std::size_t n_pairs = 2048;
    std::vector<ImageLossKind> losses{ImageLossKind::kMae, ImageLossKind::kMse};
    RenderConfig render;
    ParamLossOptions param;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

/// Cosine similarity, per aspect, between the image-loss gradient and the parameter-loss gradient
/// at interpolated scenes whose target is p2. Rows are ordered by loss, alpha, then aspect.
/// Throws EmptyManifest when fewer than two scenes are given.
std::vector<AlignmentRow> gradient_alignment(const std::vector<Scene>& scenes, const PrototypeBank& bank,
                                             const AnalysisConfig& cfg);
std::vector<AlignmentRow> gradient_alignment(const Manifest& m, const PrototypeBank& bank, const AnalysisConfig& cfg);

struct RecoveryRow {
    double alpha = 0.0;
    double mean_before = 0.0;  // parameter loss at the interpolated start
    double mean_after = 0.0;   // parameter loss of the best image-loss scene after the fit
    std::size_t pairs = 0;
};

/// From every interpolated scene, minimizes the image loss against r(p2) for `fit.budget` Adam
/// steps and reports the parameter loss before and after.
std::vector<RecoveryRow> recovery_study(const std::vector<Scene>& scenes, const PrototypeBank& bank,
                                        const AnalysisConfig& cfg, const FitConfig& fit);
std::vector<RecoveryRow> recovery_study(const Manifest& m, const PrototypeBank& bank, const AnalysisConfig& cfg,
                                        const FitConfig& fit);

std::string alignment_csv(const std::vector<AlignmentRow>& rows);
std::string recovery_csv(const std::vector<RecoveryRow>& rows);

std::string loss_kind_name(ImageLossKind k);

}  // namespace vscene
