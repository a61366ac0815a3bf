#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "vscene/analysis.hpp"
#include "vscene/errors.hpp"
#include "vscene/generator.hpp"

using namespace vscene;

namespace {

std::vector<Scene> sample_scenes(std::size_t n, std::uint64_t seed, int size = 48) {
    GenConfig g;
    g.width = g.height = size;
    g.max_objects = 2;
    Rng rng(seed);
    std::vector<Scene> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_scene(g, rng));
    return out;
}

}  // namespace

TEST(Interpolate, Endpoints) {
    Scene p1, p2;
    p1.objects.push_back(testutil::object(0.2, 0.2, 0.1, 0.3, 0, 3, {1, 0, 0}));
    p1.objects.push_back(testutil::object(0.8, 0.8, 0.2, 0.5, 1, 3, {0, 1, 0}));
    p2.objects.push_back(testutil::object(0.7, 0.7, 0.3, 1.0, 2, 3, {0, 0, 1}));
    p2.objects.push_back(testutil::object(0.3, 0.3, 0.1, 2.0, 1, 3, {1, 1, 0}));
    p1.background = {0.1, 0.2, 0.3};
    p2.background = {0.5, 0.5, 0.5};
    EXPECT_EQ(interpolate_params(p1, p2, 0.0), p2);
    const Scene one = interpolate_params(p1, p2, 1.0);
    // p1's objects follow p2's order after matching.
    EXPECT_EQ(one.objects[0].translation, p1.objects[1].translation);
    EXPECT_EQ(one.objects[1].translation, p1.objects[0].translation);
    EXPECT_EQ(one.background, p1.background);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_NEAR(std::abs(angle_of(one.objects[i]) - angle_of(p1.objects[1 - i])), 0.0, 1e-12);
    }
}

TEST(Interpolate, Midpoint) {
    Scene p1, p2;
    p1.objects.push_back(testutil::object(0.2, 0.2, 0.1, 0.0, 0, 3));
    p2.objects.push_back(testutil::object(0.6, 0.6, 0.3, 0.0, 0, 3));
    const Scene m = interpolate_params(p1, p2, 0.5);
    EXPECT_NEAR(m.objects[0].translation.x, 0.4, 1e-15);
    EXPECT_NEAR(m.objects[0].translation.y, 0.4, 1e-15);
    EXPECT_NEAR(m.objects[0].scale, 0.2, 1e-15);
    Scene p3 = p2;
    p3.objects.push_back(p2.objects[0]);
    EXPECT_THROW(interpolate_params(p1, p3, 0.5), LengthMismatch);
}

TEST(Interpolate, RotationRenormalized) {
    Scene p1, p2;
    p1.objects.push_back(testutil::object(0.5, 0.5, 0.2, 0.0, 0, 3));
    p2.objects.push_back(testutil::object(0.5, 0.5, 0.2, kPi / 2, 1, 3));
    const Scene m = interpolate_params(p1, p2, 0.5);
    EXPECT_NEAR(norm(m.objects[0].rotation), 1.0, 1e-12);
    EXPECT_NEAR(angle_of(m.objects[0]), kPi / 4, 1e-12);
    EXPECT_NO_THROW(validate_scene(m));
}

TEST(SamplePairs, EqualCounts) {
    const auto scenes = sample_scenes(30, 1);
    for (auto [i, j] : sample_pairs(scenes, 200, 3)) EXPECT_EQ(scenes[i].objects.size(), scenes[j].objects.size());
    EXPECT_EQ(sample_pairs(scenes, 50, 3), sample_pairs(scenes, 50, 3));
    EXPECT_THROW(sample_pairs({scenes[0]}, 5, 0), EmptyManifest);
}

TEST(GradientAlignment, RowsAndDeterminism) {
    const auto scenes = sample_scenes(12, 2);
    AnalysisConfig cfg;
    cfg.n_pairs = 12;
    cfg.alphas = {0.3, 0.9};
    cfg.threads = 1;
    const auto rows = gradient_alignment(scenes, builtin_bank(), cfg);
    ASSERT_EQ(rows.size(), 2u * 2u * std::size(kAllAspects));
    for (const auto& r : rows) {
        EXPECT_GE(r.mean_cosine, -1.0);
        EXPECT_LE(r.mean_cosine, 1.0);
        EXPECT_EQ(r.pairs + r.skipped, cfg.n_pairs);
    }
    EXPECT_EQ(rows[0].loss, ImageLossKind::kMae);
    EXPECT_EQ(rows.back().loss, ImageLossKind::kMse);
    cfg.threads = 3;
    EXPECT_EQ(alignment_csv(gradient_alignment(scenes, builtin_bank(), cfg)), alignment_csv(rows));
    EXPECT_EQ(alignment_csv(rows).substr(0, 43), "alpha,aspect,loss,mean_cosine,pairs,skipped");
}

TEST(GradientAlignment, DuplicatePairsAreSkipped) {
    const auto scenes = sample_scenes(1, 3);
    const std::vector<Scene> twins{scenes[0], scenes[0]};
    AnalysisConfig cfg;
    cfg.n_pairs = 4;
    cfg.alphas = {0.5};
    cfg.losses = {ImageLossKind::kMae};
    for (const auto& r : gradient_alignment(twins, builtin_bank(), cfg)) {
        if (r.aspect == Aspect::kConfidence) continue;  // the BCE slope at confidence 1 is nonzero
        EXPECT_EQ(r.pairs, 0u) << aspect_name(r.aspect);
        EXPECT_EQ(r.skipped, 4u);
    }
}

TEST(Recovery, StartAtTargetAndNoWorse) {
    const auto scenes = sample_scenes(10, 4, 64);
    AnalysisConfig cfg;
    cfg.n_pairs = 6;
    cfg.alphas = {0.0, 0.2};
    FitConfig fit;
    fit.render = cfg.render;
    fit.budget = 40;
    const auto rows = recovery_study(scenes, builtin_bank(), cfg, fit);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_LT(rows[0].mean_before, 1e-6);  // only the clamped confidence terms remain
    EXPECT_LT(rows[0].mean_after, 1e-2);
    for (const auto& r : rows) EXPECT_EQ(r.pairs, cfg.n_pairs);
    EXPECT_LT(rows[1].mean_after, rows[1].mean_before);
}
