#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vscene/errors.hpp"
#include "vscene/generator.hpp"
#include "vscene/renderer.hpp"

using namespace vscene;

namespace {

// Square whose 4-point reconstruction is exact: corners at (+-1, +-1).
PrototypeBank corner_square_bank() {
    const Contour corners{{1, -1}, {1, 1}, {-1, 1}, {-1, -1}};
    return PrototypeBank{{efd_from_contour(corners, 2)}};
}

std::size_t index_of(const std::string& name) {
    const auto& n = builtin_shape_names();
    return static_cast<std::size_t>(std::find(n.begin(), n.end(), name) - n.begin());
}

Scene random_scene(std::mt19937_64& gen, int n, int size) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scene s;
    s.width = s.height = size;
    s.background = {u(gen), u(gen), u(gen)};
    for (int i = 0; i < n; ++i) {
        ObjectParams o = testutil::object(0.2 + 0.6 * u(gen), 0.2 + 0.6 * u(gen), 0.1 + 0.2 * u(gen),
                                          2 * kPi * u(gen), 0, 3, {u(gen), u(gen), u(gen)});
        const double a = u(gen), b = u(gen) * (1 - a);
        o.shape_weights = {a, b, 1 - a - b};
        o.confidence = 0.5 + 0.5 * u(gen);
        s.objects.push_back(o);
    }
    return s;
}

}  // namespace

TEST(Renderer, EmptySceneIsBackground) {
    Scene s;
    s.background = {0.2, 0.4, 0.6};
    const Image img = render(s, builtin_bank(), {});
    for (std::size_t p = 0; p < img.pixels(); ++p) {
        for (int c = 0; c < 3; ++c) EXPECT_EQ(img.data[p * 3 + c], s.background[c]);
    }
    EXPECT_TRUE(build_mesh(s, builtin_bank(), {}).triangles.empty());
    const LabelMap l = render_labels(s, builtin_bank(), {});
    for (int v : l.labels) EXPECT_EQ(v, 0);
}

TEST(Renderer, MeshOfCenteredSquare) {
    RenderConfig cfg;
    cfg.k_points = 4;
    Scene s;
    s.objects.push_back(testutil::object(0.5, 0.5, 0.5, 0.0, 0, 1));
    const Mesh m = build_mesh(s, corner_square_bank(), cfg);
    ASSERT_EQ(m.vertices.size(), 4u);
    for (const Vec2 corner : {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}}) {
        double best = 1.0;
        for (const Vec2& v : m.vertices) best = std::min(best, norm(v - corner));
        EXPECT_LT(best, 1e-6);
    }
    EXPECT_GE(m.triangles.size(), 2u);
    double area = 0.0;
    for (const auto& t : m.triangles) {
        const double o = orient(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
        EXPECT_GT(o, 1e-12);
        area += 0.5 * o;
    }
    EXPECT_NEAR(area, 1.0, 1e-12);
}

TEST(Renderer, QuarterTurnMapsCoordinates) {
    const PrototypeBank bank = builtin_bank();
    const std::size_t heart = index_of("heart");
    Scene a, b;
    a.objects.push_back(testutil::object(0.4, 0.6, 0.3, 0.0, heart, 3));
    b.objects.push_back(testutil::object(0.4, 0.6, 0.3, kPi / 2, heart, 3));
    b.objects[0].rotation = {0.0, 1.0};
    const Mesh ma = build_mesh(a, bank, {});
    const Mesh mb = build_mesh(b, bank, {});
    ASSERT_EQ(ma.vertices.size(), mb.vertices.size());
    for (std::size_t i = 0; i < ma.vertices.size(); ++i) {
        const Vec2 d = ma.vertices[i] - Vec2{0.4, 0.6};
        EXPECT_NEAR(mb.vertices[i].x, 0.4 - d.y, 1e-12);
        EXPECT_NEAR(mb.vertices[i].y, 0.6 + d.x, 1e-12);
    }
}

TEST(Renderer, CenteredSquareCoversScene) {
    Scene s;
    s.objects.push_back(testutil::object(0.5, 0.5, 0.5, 0.0, index_of("square"), 3, {1.0, 0.0, 0.0}));
    RenderConfig cfg;
    cfg.sigma = 1e-5;
    const LabelMap l = render_labels(s, builtin_bank(), cfg);
    EXPECT_GE(static_cast<double>(std::count(l.labels.begin(), l.labels.end(), 1)) / static_cast<double>(l.labels.size()), 0.99);
    // The outermost pixel centers sit just inside the truncated square's edges, so the red mean
    // reaches the coverage only in the sharp limit.
    cfg.sigma = 1e-8;
    const Image img = render(s, builtin_bank(), cfg);
    double red = 0.0;
    for (std::size_t p = 0; p < img.pixels(); ++p) red += img.data[p * 3];
    EXPECT_GE(red / static_cast<double>(img.pixels()), 0.99);
}

TEST(Renderer, ConfidenceMovesTowardBackground) {
    RenderConfig cfg;
    cfg.gamma = 0.1;
    cfg.background_logit = 0.5;
    Scene s;
    s.width = s.height = 32;
    s.objects.push_back(testutil::object(0.5, 0.5, 0.3, 0.0, 0, 3, {1.0, 0.0, 0.0}));
    Image prev;
    for (double conf : {1.0, 0.75, 0.5, 0.25, 0.0}) {
        s.objects[0].confidence = conf;
        const Image img = render(s, builtin_bank(), cfg);
        if (!prev.data.empty()) {
            for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_LE(img.data[i], prev.data[i]);
        }
        prev = img;
    }
    double max_red = 0.0;
    for (std::size_t p = 0; p < prev.pixels(); ++p) max_red = std::max(max_red, prev.data[p * 3]);
    EXPECT_LT(max_red, 0.01);
}

TEST(Renderer, LowConfidenceObjectAloneIsOpaque) {
    // At the default temperature a confidence gap of 0.08 is a factor e^-800, below the smallest double,
    // yet the other object's tail is weaker still at this distance.
    Scene s;
    s.width = s.height = 32;
    s.objects.push_back(testutil::object(0.25, 0.5, 0.15, 0.0, 0, 3, {1.0, 0.0, 0.0}));
    s.objects.push_back(testutil::object(0.75, 0.5, 0.15, 0.0, 0, 3, {0.0, 0.0, 1.0}));
    s.objects[0].confidence = 0.4;
    s.objects[1].confidence = 0.48;
    const Image img = render(s, builtin_bank(), {});
    EXPECT_NEAR(img.at(16, 8, 0), 1.0, 1e-9);
    EXPECT_NEAR(img.at(16, 24, 2), 1.0, 1e-9);
}

TEST(Renderer, ContinuousUnderConfidenceLead) {
    // The more confident object's tail outweighs the other object's interior far beyond the usual
    // saturation distance, so the image must still change smoothly as it moves away.
    Scene s;
    s.width = s.height = 32;
    s.background = {0.0, 0.0, 0.0};
    s.objects.push_back(testutil::object(0.4, 0.5, 0.2, 0.0, 0, 3, {1.0, 0.0, 0.0}));
    s.objects.push_back(testutil::object(0.4, 0.5, 0.2, 0.0, 0, 3, {0.0, 1.0, 0.0}));
    s.objects[0].confidence = 0.55;
    s.objects[1].confidence = 0.6;
    Image prev = render(s, builtin_bank(), {});
    for (int step = 1; step <= 2000; ++step) {
        s.objects[1].translation.x = 0.4 + 1e-4 * step;
        const Image img = render(s, builtin_bank(), {});
        double worst = 0.0;
        for (std::size_t i = 0; i < img.data.size(); ++i) worst = std::max(worst, std::abs(img.data[i] - prev.data[i]));
        ASSERT_LT(worst, 0.2) << "step " << step;
        prev = img;
    }
}

TEST(Renderer, DisjointObjectsLabelValues) {
    Scene s;
    s.objects.push_back(testutil::object(0.25, 0.5, 0.15, 0.0, 0, 3));
    s.objects.push_back(testutil::object(0.75, 0.5, 0.15, 0.0, 2, 3));
    const LabelMap l = render_labels(s, builtin_bank(), {});
    std::set<int> seen(l.labels.begin(), l.labels.end());
    EXPECT_EQ(seen, (std::set<int>{0, 1, 2}));
    for (int r = 0; r < l.height; ++r) {
        for (int c = 0; c < l.width; ++c) {
            const double x = (c + 0.5) / l.width;
            if (l.at(r, c) == 1) { EXPECT_LT(x, 0.5); }
            if (l.at(r, c) == 2) { EXPECT_GT(x, 0.5); }
        }
    }
}

TEST(Renderer, LabelsMatchPointInPolygon) {
    RenderConfig cfg;
    cfg.sigma = 1e-6;
    Scene s;
    s.objects.push_back(testutil::object(0.5, 0.5, 0.4, kPi / 4, index_of("ellipse"), 3));
    s.objects.push_back(testutil::object(0.25, 0.75, 0.05, 0.0, index_of("square"), 3));
    const PrototypeBank bank = builtin_bank();
    const RasterInput in = raster_input(s, bank, cfg);
    const LabelMap l = render_labels(s, bank, cfg);
    std::size_t agree = 0;
    for (int r = 0; r < l.height; ++r) {
        for (int c = 0; c < l.width; ++c) {
            const Vec2 p{(c + 0.5) / l.width, (r + 0.5) / l.height};
            int expected = 0;
            for (std::size_t j = 0; j < in.objects.size(); ++j) {
                if (point_in_polygon(in.objects[j].polygon, p)) expected = static_cast<int>(j) + 1;
            }
            agree += l.at(r, c) == expected;
        }
    }
    EXPECT_EQ(agree, l.labels.size());
}

TEST(Renderer, PixelsInRangeAndDeterministic) {
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 10; ++trial) {
        const Scene s = random_scene(gen, 1 + trial % 4, 48);
        const Rasterizer r(raster_input(s, builtin_bank(), {}), {});
        for (double v : r.image().data) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        EXPECT_EQ(render(s, builtin_bank(), {}), r.image());
    }
}

TEST(Renderer, PermutationInvariance) {
    std::mt19937_64 gen(32);
    for (int trial = 0; trial < 10; ++trial) {
        Scene s = random_scene(gen, 3, 48);
        const Image a = render(s, builtin_bank(), {});
        std::reverse(s.objects.begin(), s.objects.end());
        const Image b = render(s, builtin_bank(), {});
        for (std::size_t i = 0; i < a.data.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], 1e-12);
    }
}

TEST(Renderer, ResolutionConsistency) {
    std::mt19937_64 gen(33);
    for (int trial = 0; trial < 5; ++trial) {
        Scene s = random_scene(gen, 1 + trial % 3, 64);
        auto mean = [&](int size) {
            s.width = s.height = size;
            const Image img = render(s, builtin_bank(), {});
            double m = 0.0;
            for (double v : img.data) m += v;
            return m / static_cast<double>(img.data.size());
        };
        EXPECT_LT(std::abs(mean(64) - mean(128)), 1e-2);
    }
}

TEST(Renderer, ZeroAdjointGivesZeroGradient) {
    std::mt19937_64 gen(34);
    const Scene s = random_scene(gen, 2, 32);
    const GradientVector g = render_grad(s, builtin_bank(), {}, Image(32, 32));
    for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Renderer, BackgroundGradientIsUncoveredAdjoint) {
    std::mt19937_64 gen(35);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Scene s = random_scene(gen, 3, 32);
    Image adj(32, 32);
    for (double& v : adj.data) v = u(gen);
    const GradientVector g = render_grad(s, builtin_bank(), {}, adj);
    // The image is affine in the background: I(1) - I(0) = 1 - alpha.
    s.background = {0, 0, 0};
    const Image zero = render(s, builtin_bank(), {});
    s.background = {1, 1, 1};
    const Image one = render(s, builtin_bank(), {});
    const std::size_t off = flatten(s).layout.background_offset();
    for (int c = 0; c < 3; ++c) {
        double expected = 0.0;
        for (std::size_t p = 0; p < adj.pixels(); ++p) expected += adj.data[p * 3 + c] * (one.data[p * 3 + c] - zero.data[p * 3 + c]);
        EXPECT_NEAR(g[off + c], expected, 1e-9);
    }
}

TEST(Renderer, GradientMatchesFiniteDifferences) {
    std::mt19937_64 gen(36);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const PrototypeBank bank = builtin_bank();
    const RenderConfig cfg;
    for (int trial = 0; trial < 3; ++trial) {
        const Scene s = random_scene(gen, 2, 32);
        Image adj(32, 32);
        for (double& v : adj.data) v = u(gen);
        const testutil::FdCheck c = testutil::fd_check(s, bank, cfg, adj, 1e-4);
        EXPECT_GE(c.cosine, 0.999);
        EXPECT_LE(c.max_rel_error, 1e-2);
        EXPECT_GE(c.smooth, c.components / 2);
    }
}

TEST(Renderer, SelfIntersectingShapeThrows) {
    EfdShape eight(2);
    eight.coeffs[0] = {1.0, 0.0, 0.0, 0.0};
    eight.coeffs[1] = {0.0, 0.0, 0.0, 0.5};
    Scene s;
    s.objects.push_back(testutil::object(0.5, 0.5, 0.3, 0.0, 0, 1));
    s.objects.push_back(testutil::object(0.5, 0.5, 0.3, 0.0, 0, 1));
    try {
        render(s, PrototypeBank{{eight}}, {});
        FAIL() << "expected TriangulationFailure";
    } catch (const TriangulationFailure& e) {
        EXPECT_EQ(e.object_index(), 0u);
    }
}
