#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "oracles.hpp"
#include "vscene/errors.hpp"
#include "vscene/generator.hpp"
#include "vscene/io.hpp"

using namespace vscene;

namespace {

std::size_t shape_of(const ObjectParams& o) {
    return static_cast<std::size_t>(std::max_element(o.shape_weights.begin(), o.shape_weights.end()) - o.shape_weights.begin());
}

}  // namespace

TEST(Generator, BuiltinBank) {
    const PrototypeBank bank = builtin_bank();
    ASSERT_EQ(bank.size(), 3u);
    EXPECT_NO_THROW(validate_bank(bank));
    for (const EfdShape& s : bank.shapes) {
        double ext = 0.0;
        for (const Vec2& p : contour_from_efd(s, 64)) ext = std::max({ext, std::abs(p.x), std::abs(p.y)});
        EXPECT_NEAR(ext, 1.0, 1e-6);
        EXPECT_TRUE(is_simple_polygon(contour_from_efd(s, 64)));
    }
    EXPECT_THROW(bank_for_shapes({"triangle"}), ValidationError);
}

TEST(Generator, SampleRangesAndCounts) {
    GenConfig cfg;
    Rng rng(7);
    std::vector<std::size_t> counts(4, 0), shapes(3, 0);
    for (int i = 0; i < 4000; ++i) {
        const Scene s = sample_scene(cfg, rng);
        ASSERT_GE(s.objects.size(), 1u);
        ASSERT_LE(s.objects.size(), 4u);
        ++counts[s.objects.size() - 1];
        EXPECT_NO_THROW(validate_scene(s));
        for (const auto& o : s.objects) {
            ++shapes[shape_of(o)];
            EXPECT_GE(o.scale, 0.1);
            EXPECT_LE(o.scale, 0.3);
            EXPECT_GE(o.translation.x, 0.05);
            EXPECT_LE(o.translation.x, 0.95);
            EXPECT_GE(o.translation.y, 0.05);
            EXPECT_LE(o.translation.y, 0.95);
            EXPECT_EQ(o.confidence, 1.0);
            EXPECT_NEAR(norm(o.rotation), 1.0, 1e-12);
        }
    }
    EXPECT_GT(oracle::chi_square_p(counts), 0.01);
    EXPECT_GT(oracle::chi_square_p(shapes), 0.01);
}

TEST(Generator, PlacementMatchesBruteForce) {
    GenConfig cfg;
    cfg.min_objects = cfg.max_objects = 3;
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        std::vector<std::vector<Vec2>> sets;
        const Scene s = sample_scene(cfg, rng, &sets);
        ASSERT_EQ(sets.size(), 8u);
        std::size_t best = 0;
        for (std::size_t k = 1; k < sets.size(); ++k) {
            if (oracle::min_pairwise(sets[k]) > oracle::min_pairwise(sets[best])) best = k;
        }
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(s.objects[j].translation, sets[best][j]);
    }
    EXPECT_EQ(select_placement({{{0.5, 0.5}}, {{0.1, 0.1}}}), 0u);
}

TEST(Generator, ConfigValidation) {
    GenConfig cfg;
    cfg.scale_min = 0.5;
    cfg.scale_max = 0.1;
    EXPECT_THROW(validate_gen_config(cfg), ValidationError);
    cfg = GenConfig{};
    cfg.n_placement_sets = 0;
    EXPECT_THROW(validate_gen_config(cfg), ValidationError);
}

TEST(Generator, EmptyDataset) {
    const auto dir = testutil::temp_dir("gen_empty");
    const Manifest m = generate_dataset(GenConfig{}, 0, dir / "d");
    EXPECT_TRUE(m.empty());
    const Manifest back = load_manifest(dir / "d");
    EXPECT_TRUE(back.empty());
    Rng rng(0);
    EXPECT_THROW(sample_params_from_dataset(back, rng), EmptyManifest);
}

TEST(Generator, DatasetDeterministicAndReRenders) {
    const auto dir = testutil::temp_dir("gen_det");
    GenConfig cfg;
    cfg.seed = 5;
    cfg.width = cfg.height = 64;
    generate_dataset(cfg, 12, dir / "a", {}, 1);
    generate_dataset(cfg, 12, dir / "b", {}, 3);
    EXPECT_EQ(testutil::snapshot(dir / "a"), testutil::snapshot(dir / "b"));

    const Manifest m = load_manifest(dir / "a" / "manifest.jsonl");
    ASSERT_EQ(m.size(), 12u);
    const PrototypeBank bank = builtin_bank();
    for (std::size_t i = 0; i < m.size(); ++i) {
        const Scene s = load_example_scene(m, i);
        EXPECT_EQ(m.entries[i].n_objects, s.objects.size());
        EXPECT_EQ(load_example_image(m, i), quantized(render(s, bank, {})));
        EXPECT_EQ(load_example_labels(m, i), render_labels(s, bank, {}));
    }
}

TEST(Generator, SampleParamsFromDataset) {
    const auto dir = testutil::temp_dir("gen_params");
    GenConfig cfg;
    cfg.width = cfg.height = 32;
    const Manifest one = generate_dataset(cfg, 1, dir / "one");
    Rng rng(1);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(sample_params_from_dataset(one, rng), load_example_scene(one, 0));

    const Manifest ten = generate_dataset(cfg, 10, dir / "ten");
    std::vector<Scene> scenes;
    for (std::size_t i = 0; i < 10; ++i) scenes.push_back(load_example_scene(ten, i));
    std::vector<std::size_t> hits(10, 0);
    for (int i = 0; i < 10000; ++i) {
        const Scene s = sample_params_from_dataset(ten, rng);
        const auto it = std::find(scenes.begin(), scenes.end(), s);
        ASSERT_NE(it, scenes.end());
        ++hits[static_cast<std::size_t>(it - scenes.begin())];
    }
    EXPECT_GT(oracle::chi_square_p(hits), 0.01);
}

TEST(Generator, MissingManifest) {
    EXPECT_THROW(load_manifest("/nonexistent/vscene/manifest.jsonl"), IoFailure);
}
