#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vscene/errors.hpp"
#include "vscene/scene.hpp"

using namespace vscene;

namespace {

Scene random_scene(std::mt19937_64& gen, std::size_t n, std::size_t m) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scene s;
    s.background = {u(gen), u(gen), u(gen)};
    for (std::size_t i = 0; i < n; ++i) {
        ObjectParams o;
        o.color = {u(gen), u(gen), u(gen)};
        o.translation = {u(gen), u(gen)};
        o.scale = 0.05 + 0.4 * u(gen);
        const double a = 2 * kPi * u(gen) - kPi;
        o.rotation = {std::cos(a), std::sin(a)};
        o.shape_weights.assign(m, 0.0);
        double sum = 0.0;
        for (double& w : o.shape_weights) sum += (w = u(gen));
        for (double& w : o.shape_weights) w /= sum;
        o.confidence = u(gen);
        s.objects.push_back(o);
    }
    return s;
}

}  // namespace

TEST(Scene, LayoutSizes) {
    Scene one;
    one.objects.push_back(testutil::object(0.5, 0.5, 0.2, 0.0, 0, 3));
    EXPECT_EQ(flatten(one).values.size(), 15u);
    EXPECT_EQ(flatten(Scene{}).values.size(), 3u);
}

TEST(Scene, LayoutOrder) {
    Scene s;
    ObjectParams o = testutil::object(0.25, 0.75, 0.3, 0.0, 1, 2, {0.1, 0.2, 0.3});
    o.confidence = 0.9;
    s.objects.push_back(o);
    s.background = {0.4, 0.5, 0.6};
    const std::vector<double> expected{0.1, 0.2, 0.3, 0.25, 0.75, 0.3, 1.0, 0.0, 0.0, 1.0, 0.9, 0.4, 0.5, 0.6};
    EXPECT_EQ(flatten(s).values, expected);
}

TEST(Scene, SlicesPartitionTheVector) {
    Layout l{3, 4, 32, 32};
    std::vector<int> hits(l.size(), 0);
    for (const Slice& s : l.slices()) {
        EXPECT_EQ(s.length, l.length(s.aspect));
        for (std::size_t i = s.offset; i < s.offset + s.length; ++i) ++hits[i];
    }
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Scene, RoundtripIsExact) {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 200; ++trial) {
        const Scene s = random_scene(gen, trial % 9, 1 + trial % 4);
        EXPECT_EQ(unflatten(flatten(s)), s);
        EXPECT_EQ(unflatten_raw(flatten(s)), s);
    }
}

TEST(Scene, UnflattenProjects) {
    Scene s;
    s.objects.push_back(testutil::object(0.5, 0.5, 0.2, 0.0, 0, 3));
    FlatParams fp = flatten(s);
    const Layout& l = fp.layout;
    fp.values[l.offset(0, Aspect::kRotation)] = 2.0;
    fp.values[l.offset(0, Aspect::kRotation) + 1] = 0.0;
    for (std::size_t j = 0; j < 3; ++j) fp.values[l.offset(0, Aspect::kShape) + j] = 0.2;
    fp.values[l.offset(0, Aspect::kConfidence)] = -0.1;
    fp.values[l.offset(0, Aspect::kColor)] = 1.5;
    const Scene out = unflatten(fp);
    const ObjectParams& o = out.objects[0];
    EXPECT_EQ(o.rotation, (Vec2{1.0, 0.0}));
    for (double w : o.shape_weights) EXPECT_NEAR(w, 1.0 / 3.0, 1e-15);
    EXPECT_EQ(o.confidence, 0.0);
    EXPECT_EQ(o.color[0], 1.0);
}

TEST(Scene, UnflattenOutputIsValid) {
    std::mt19937_64 gen(22);
    std::normal_distribution<double> noise(0.0, 0.7);
    for (int trial = 0; trial < 200; ++trial) {
        FlatParams fp = flatten(random_scene(gen, 1 + trial % 5, 3));
        for (double& v : fp.values) v += noise(gen);
        EXPECT_NO_THROW(validate_scene(unflatten(fp)));
    }
}

TEST(Scene, LayoutMismatch) {
    Scene s;
    s.objects.push_back(testutil::object(0.5, 0.5, 0.2, 0.0, 0, 3));
    FlatParams fp = flatten(s);
    fp.values.pop_back();
    EXPECT_THROW(unflatten(fp), LayoutMismatch);
}

TEST(Scene, AngleOf) {
    ObjectParams o;
    o.rotation = {1, 0};
    EXPECT_EQ(angle_of(o), 0.0);
    o.rotation = {0, 1};
    EXPECT_DOUBLE_EQ(angle_of(o), kPi / 2);
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int i = 0; i < 100; ++i) {
        const double a = u(gen);
        o.rotation = {std::cos(a), std::sin(a)};
        const double b = angle_of(o);
        EXPECT_GT(b, -kPi);
        EXPECT_LE(b, kPi);
        EXPECT_NEAR(std::cos(b), o.rotation.x, 1e-9);
        EXPECT_NEAR(std::sin(b), o.rotation.y, 1e-9);
    }
}

TEST(Scene, ValidateRejects) {
    Scene s;
    s.objects.push_back(testutil::object(0.5, 0.5, 0.2, 0.0, 0, 3));
    s.objects[0].rotation = {2.0, 0.0};
    EXPECT_THROW(validate_scene(s), InvalidScene);
    s.objects[0].rotation = {1.0, 0.0};
    s.objects[0].shape_weights = {0.5, 0.2, 0.2};
    EXPECT_THROW(validate_scene(s), InvalidScene);
    Scene many;
    for (int i = 0; i < 9; ++i) many.objects.push_back(testutil::object(0.5, 0.5, 0.2, 0.0, 0, 3));
    EXPECT_THROW(validate_scene(many), InvalidScene);
    Scene tiny;
    tiny.width = 0;
    EXPECT_THROW(validate_scene(tiny), InvalidScene);
}

TEST(Scene, JsonRoundtrip) {
    std::mt19937_64 gen(24);
    const Scene s = random_scene(gen, 3, 3);
    nlohmann::json j = s;
    EXPECT_EQ(j.get<Scene>(), s);
    EXPECT_TRUE(j.contains("objects"));
    EXPECT_TRUE(j.contains("background"));
}
