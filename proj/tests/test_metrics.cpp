#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "vscene/errors.hpp"
#include "vscene/generator.hpp"
#include "vscene/metrics.hpp"

using namespace vscene;

namespace {

LabelMap random_labels(std::mt19937_64& gen, int size, int k) {
    LabelMap l(size, size);
    for (int& v : l.labels) v = static_cast<int>(gen() % static_cast<unsigned>(k));
    return l;
}

LabelMap box(int size, int r0, int c0, int h, int w, int label) {
    LabelMap l(size, size);
    for (int r = r0; r < r0 + h; ++r) {
        for (int c = c0; c < c0 + w; ++c) l.at(r, c) = label;
    }
    return l;
}

}  // namespace

TEST(Ssim, IdenticalIsOne) {
    std::mt19937_64 gen(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image a(20, 16);
    for (double& v : a.data) v = u(gen);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, CheckerboardInversion) {
    Image a(32, 32);
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) {
            for (int ch = 0; ch < 3; ++ch) a.at(r, c, ch) = ((r / 4 + c / 4) % 2) ? 0.9 : 0.1;
        }
    }
    Image b = a;
    for (double& v : b.data) v = 1.0 - v;
    EXPECT_LT(ssim(a, b), 0.3);
}

TEST(Ssim, MatchesNaiveOracle) {
    std::mt19937_64 gen(72);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        Image a(24 + trial, 19), b(24 + trial, 19);
        for (double& v : a.data) v = u(gen);
        for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] = std::clamp(a.data[i] + 0.3 * (u(gen) - 0.5), 0.0, 1.0);
        EXPECT_NEAR(ssim(a, b), oracle::ssim(a, b), 1e-6);
        EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    }
}

TEST(Ssim, Errors) {
    EXPECT_THROW(ssim(Image(10, 20), Image(10, 20)), TooSmall);
    EXPECT_THROW(ssim(Image(12, 12), Image(12, 13)), DimensionMismatch);
}

TEST(Iou, Cases) {
    const LabelMap a = box(16, 2, 2, 4, 4, 1);
    EXPECT_EQ(iou(a, a), 1.0);
    EXPECT_EQ(iou(a, box(16, 10, 10, 4, 4, 2)), 0.0);
    EXPECT_EQ(iou(a, box(16, 2, 4, 4, 4, 1)), 1.0 / 3.0);
    EXPECT_EQ(iou(LabelMap(8, 8), LabelMap(8, 8)), 1.0);
    EXPECT_THROW(iou(LabelMap(8, 8), LabelMap(8, 9)), DimensionMismatch);
}

TEST(Ari, Cases) {
    LabelMap truth = box(16, 0, 0, 8, 16, 1);
    for (int r = 8; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) truth.at(r, c) = 2;
    }
    EXPECT_EQ(ari(truth, truth), 1.0);
    EXPECT_EQ(ari(LabelMap(16, 16, 1), truth), 0.0);
    LabelMap relabeled = truth;
    for (int& v : relabeled.labels) v = 7 - v;
    EXPECT_NEAR(ari(relabeled, truth), 1.0, 1e-12);
    EXPECT_THROW(ari(LabelMap(8, 8), LabelMap(8, 9)), DimensionMismatch);
}

TEST(Ari, MatchesPairCountingOracle) {
    std::mt19937_64 gen(73);
    for (int trial = 0; trial < 30; ++trial) {
        const LabelMap truth = random_labels(gen, 16, 3 + trial % 4);
        const LabelMap pred = random_labels(gen, 16, 1 + trial % 5);
        EXPECT_NEAR(ari(pred, truth), oracle::ari(pred, truth), 1e-12);
        LabelMap perm = pred;
        for (int& v : perm.labels) v = (v + 3) % 5 + 10;
        EXPECT_NEAR(ari(perm, truth), ari(pred, truth), 1e-12);
    }
}

TEST(Ari, DegenerateConvention) {
    const LabelMap one = box(8, 0, 0, 8, 8, 1);
    EXPECT_EQ(ari(one, one), 1.0);
    EXPECT_EQ(ari(LabelMap(8, 8), one), 0.0);
    EXPECT_EQ(ari(LabelMap(8, 8), LabelMap(8, 8)), 1.0);
}

TEST(Evaluate, PerfectAndBackgroundOnly) {
    GenConfig g;
    g.min_objects = 2;
    g.width = g.height = 48;
    Rng rng(4);
    std::vector<Scene> truth, empty;
    for (int i = 0; i < 10; ++i) {
        truth.push_back(sample_scene(g, rng));
        Scene e = truth.back();
        e.objects.clear();
        empty.push_back(e);
    }
    const PrototypeBank bank = builtin_bank();
    const MetricReport same = evaluate(truth, truth, bank, {}, 2);
    EXPECT_EQ(same.mae, 0.0);
    EXPECT_EQ(same.mse, 0.0);
    EXPECT_NEAR(same.ssim, 1.0, 1e-12);
    EXPECT_EQ(same.iou, 1.0);
    EXPECT_EQ(same.ari, 1.0);

    const MetricReport bg = evaluate(empty, truth, bank, {}, 1);
    EXPECT_EQ(bg.iou, 0.0);
    EXPECT_EQ(bg.ari, 0.0);
    double m = 0.0;
    for (const auto& e : bg.per_example) m += e.mae;
    EXPECT_NEAR(bg.mae, m / 10.0, 1e-12);
    EXPECT_THROW(evaluate(empty, {}, bank, {}), LengthMismatch);
}

TEST(Evaluate, RecoloringKeepsSegmentationMetrics) {
    GenConfig g;
    g.width = g.height = 48;
    Rng rng(5);
    const Scene s = sample_scene(g, rng);
    Scene recolored = s;
    for (auto& o : recolored.objects) o.color = {0.5, 0.1, 0.9};
    const MetricReport r = evaluate({recolored}, {s}, builtin_bank(), {});
    EXPECT_EQ(r.iou, 1.0);
    EXPECT_EQ(r.ari, 1.0);
}
