#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vscene/geometry.hpp"

namespace vscene {

constexpr std::size_t kDefaultMaxObjects = 8;
constexpr double kMinScale = 1e-3;
constexpr double kMaxScale = 4.0;

/// Interpretable parameters of one object candidate.
struct ObjectParams {
    Rgb color{0.5, 0.5, 0.5};
    Vec2 translation{0.5, 0.5};
    double scale = 0.2;            // half-extent multiplier in viewport units
    Vec2 rotation{1.0, 0.0};       // (cos a, sin a)
    std::vector<double> shape_weights;
    double confidence = 1.0;

    friend bool operator==(const ObjectParams&, const ObjectParams&) = default;
};

struct Scene {
    std::vector<ObjectParams> objects;
    Rgb background{0.0, 0.0, 0.0};
    int width = 128;
    int height = 128;

    /// Length of the shape-weight vectors (0 for an empty scene).
    std::size_t shape_size() const { return objects.empty() ? 0 : objects.front().shape_weights.size(); }

    friend bool operator==(const Scene&, const Scene&) = default;
};

/// Throws InvalidScene when any invariant is violated.
void validate_scene(const Scene& scene, std::size_t max_objects = kDefaultMaxObjects);

/// Rotation angle atan2(sin, cos) in (-pi, pi].
double angle_of(const ObjectParams& o);

enum class Aspect { kColor, kTranslation, kScale, kRotation, kShape, kConfidence, kBackground };

inline constexpr Aspect kAllAspects[] = {Aspect::kTranslation, Aspect::kColor,      Aspect::kScale,
                                         Aspect::kRotation,    Aspect::kShape,      Aspect::kConfidence,
                                         Aspect::kBackground};

std::string_view aspect_name(Aspect a);

/// A contiguous range of the flat vector belonging to one (object, aspect).
struct Slice {
    int object = -1;  // -1 for the background
    Aspect aspect = Aspect::kBackground;
    std::size_t offset = 0;
    std::size_t length = 0;
};

/// Per object [color(3), translation(2), scale(1), rotation(2), shape(m), confidence(1)],
/// followed by background(3).
struct Layout {
    std::size_t n_objects = 0;
    std::size_t shape_size = 0;
    int width = 128;
    int height = 128;

    std::size_t object_stride() const { return 9 + shape_size; }
    std::size_t size() const { return n_objects * object_stride() + 3; }
    std::size_t object_offset(std::size_t i) const { return i * object_stride(); }
    std::size_t background_offset() const { return n_objects * object_stride(); }
    /// Offset of `aspect` inside object i (ignored for kBackground).
    std::size_t offset(std::size_t i, Aspect aspect) const;
    std::size_t length(Aspect aspect) const;
    std::vector<Slice> slices() const;

    friend bool operator==(const Layout&, const Layout&) = default;
};

struct FlatParams {
    std::vector<double> values;
    Layout layout;
};

using GradientVector = std::vector<double>;

FlatParams flatten(const Scene& scene);

/// Inverse of flatten with re-projection: rotation renormalized, shape weights put back on the
/// simplex, ranges clamped. Throws LayoutMismatch when the vector length disagrees with the layout.
/// With `simplex_shapes` false the shape slice is passed through (free shape coefficients).
Scene unflatten(const FlatParams& params, bool simplex_shapes = true);

/// Inverse of flatten without any projection (for finite differences and raw evaluation).
Scene unflatten_raw(const FlatParams& params);

/// Applies the unflatten constraints in place.
void project(FlatParams& params, bool simplex_shapes = true);

void to_json(nlohmann::json& j, const Scene& s);
void from_json(const nlohmann::json& j, Scene& s);

}  // namespace vscene
