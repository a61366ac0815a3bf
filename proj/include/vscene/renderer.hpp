#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "vscene/efd.hpp"
#include "vscene/geometry.hpp"
#include "vscene/image.hpp"
#include "vscene/scene.hpp"
#include "vscene/triangulate.hpp"

namespace vscene {

struct RenderConfig {
    double sigma = 1e-4;  // soft-mask sharpness, in squared viewport units
    double gamma = 1e-4;  // confidence softmax temperature
    std::size_t k_points = kDefaultContourPoints;
    /// SoftRas-style background logit: adds exp(eps / gamma) to the weight denominator.
    std::optional<double> background_logit;
    /// |d| / sigma beyond which the soft mask is treated as exactly 0 or 1. An object's cut-off is
    /// widened by its confidence lead over the least confident term, (f_j - f_min) / gamma.
    double saturation = 40.0;
};

/// Throws ValidationError when sigma, gamma or k_points are out of range.
void validate_render_config(const RenderConfig& cfg);

/// Triangulated scene. Each object's polygon occupies a contiguous vertex range.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<TriangleIndices> triangles;
    std::vector<std::size_t> triangle_object;
    std::vector<Rgb> object_color;
    std::vector<double> object_confidence;
    std::vector<std::size_t> object_begin;  // object i owns vertices [object_begin[i], object_begin[i+1])

    std::size_t objects() const { return object_color.size(); }
    Contour object_polygon(std::size_t i) const;
};

/// Contour of a canonical shape placed with the object's pose: v = t + scale * R(rot) * c.
/// The rotation pair is used as given (no renormalization).
Contour place_contour(const Contour& canonical, const ObjectParams& o);

/// Gradient of a scalar with respect to the pose and the canonical contour, given its
/// gradient with respect to the placed vertices.
struct PoseGradient {
    Vec2 d_translation;
    double d_scale = 0.0;
    Vec2 d_rotation;
    std::vector<Vec2> d_canonical;
};
PoseGradient place_contour_grad(const Contour& canonical, const ObjectParams& o, std::span<const Vec2> d_vertices);

/// Prototype contours sampled at K points, cached for repeated rendering.
std::vector<Contour> sample_bank(const PrototypeBank& bank, std::size_t k_points);

/// Raw weighted sum of sampled prototype contours (no simplex check).
Contour weighted_contour(const std::vector<Contour>& sampled_bank, std::span<const double> weights);

/// One polygon to composite.
struct RasterObject {
    Contour polygon;
    Rgb color{};
    double confidence = 1.0;
};

struct RasterInput {
    std::vector<RasterObject> objects;
    Rgb background{};
    int width = 0;
    int height = 0;
};

/// Gradient of sum(adjoint * image) with respect to the raster inputs.
struct RasterGradient {
    std::vector<std::vector<Vec2>> d_vertices;
    std::vector<Rgb> d_color;
    std::vector<double> d_confidence;
    Rgb d_background{};
};

/// Soft rasterizer. Each object contributes a soft mask D = sigmoid(d / sigma), where d is the
/// signed squared distance from the pixel center to the object's polygon boundary (positive
/// inside). Masks are combined with confidence-softmax weights and composited over the
/// background. Construction evaluates per-pixel coverage once; image, labels and gradients
/// reuse it.
class Rasterizer {
public:
    Rasterizer(RasterInput input, const RenderConfig& cfg);

    const Image& image() const { return image_; }
    /// Number of channel values that fell outside [0,1] before clamping.
    std::size_t clamped_values() const { return clamped_; }
    /// Object with the largest soft mask above 0.5, else background.
    LabelMap labels() const;
    RasterGradient gradient(const Image& adjoint) const;

    const RasterInput& input() const { return input_; }

private:
    struct Coverage {
        std::uint32_t object;
        int edge;       // closest boundary edge, -1 when saturated
        double mask;    // D
        double log_mask;
        double sign;    // +1 inside, -1 outside
        double u;       // closest-point parameter on the edge
        Vec2 diff;      // pixel - closest point
    };

    void compute_coverage();
    void composite();
    // Normalized weights w_q of the cells of one pixel; returns false when the pixel has none.
    bool pixel_weights(std::size_t begin, std::size_t end, std::vector<double>& w) const;

    RasterInput input_;
    RenderConfig cfg_;
    std::vector<std::size_t> pixel_begin_;
    std::vector<Coverage> coverage_;
    std::vector<double> logit_;  // f_j / gamma
    double background_logit_ = -std::numeric_limits<double>::infinity();
    Image image_;
    std::size_t clamped_ = 0;
};

/// Places every object (blend, scale, rotate, translate) and ear-clips its polygon.
/// Throws TriangulationFailure with the offending object index.
Mesh build_mesh(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg);

/// Places every object. Throws TriangulationFailure when a polygon is not simple.
RasterInput raster_input(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg);
RasterInput raster_input(const Scene& scene, const std::vector<Contour>& sampled_bank, const RenderConfig& cfg);

Image render(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg);
LabelMap render_labels(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg);

/// d(sum_i adjoint_i * I_i) / d(flatten(scene)). Triangulation is held fixed.
GradientVector render_grad(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg,
                           const Image& adjoint);

/// Image and flat-parameter gradient in one pass; `make_adjoint` maps the rendered image to the
/// loss adjoint and returns the loss value.
template <typename AdjointFn>
double render_loss_and_grad(const Scene& scene, const PrototypeBank& bank, const RenderConfig& cfg,
                            AdjointFn&& make_adjoint, GradientVector& grad);

/// Chains a raster gradient back to flat scene parameters.
GradientVector scene_gradient(const Scene& scene, const std::vector<Contour>& sampled_bank,
                              const RasterGradient& rg);

}  // namespace vscene

#include "vscene/renderer_inl.hpp"
