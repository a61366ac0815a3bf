#include "vscene/scene.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vscene/errors.hpp"

namespace vscene {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void validate_scene(const Scene& scene, std::size_t max_objects) {
    if (scene.width < 1 || scene.height < 1) throw InvalidScene("width and height must be >= 1");
    if (scene.objects.size() > max_objects) {
        throw InvalidScene("scene has " + std::to_string(scene.objects.size()) + " objects, maximum is " +
                           std::to_string(max_objects));
    }
    for (double c : scene.background) {
        if (!in_unit(c)) throw InvalidScene("background color outside [0,1]");
    }
    const std::size_t m = scene.shape_size();
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const ObjectParams& o = scene.objects[i];
        const std::string where = "object " + std::to_string(i) + ": ";
        for (double c : o.color) {
            if (!in_unit(c)) throw InvalidScene(where + "color outside [0,1]");
        }
        if (!in_unit(o.translation.x) || !in_unit(o.translation.y)) {
            throw InvalidScene(where + "translation outside [0,1]");
        }
        if (!(o.scale > 0.0) || !std::isfinite(o.scale)) throw InvalidScene(where + "scale must be positive");
        if (std::abs(norm(o.rotation) - 1.0) > 1e-6) throw InvalidScene(where + "rotation is not unit length");
        if (o.shape_weights.size() != m || m == 0) throw InvalidScene(where + "inconsistent shape weights");
        double sum = 0.0;
        for (double w : o.shape_weights) {
            if (!(w >= 0.0)) throw InvalidScene(where + "negative shape weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-6) throw InvalidScene(where + "shape weights not on the simplex");
        if (!in_unit(o.confidence)) throw InvalidScene(where + "confidence outside [0,1]");
    }
}

double angle_of(const ObjectParams& o) {
    const double a = std::atan2(o.rotation.y, o.rotation.x);
    return a == -kPi ? kPi : a;
}

std::string_view aspect_name(Aspect a) {
    switch (a) {
        case Aspect::kColor: return "color";
        case Aspect::kTranslation: return "translation";
        case Aspect::kScale: return "scale";
        case Aspect::kRotation: return "rotation";
        case Aspect::kShape: return "shape";
        case Aspect::kConfidence: return "confidence";
        case Aspect::kBackground: return "background";
    }
    return "unknown";
}

std::size_t Layout::offset(std::size_t i, Aspect aspect) const {
    const std::size_t base = object_offset(i);
    switch (aspect) {
        case Aspect::kColor: return base;
        case Aspect::kTranslation: return base + 3;
        case Aspect::kScale: return base + 5;
        case Aspect::kRotation: return base + 6;
        case Aspect::kShape: return base + 8;
        case Aspect::kConfidence: return base + 8 + shape_size;
        case Aspect::kBackground: return background_offset();
    }
    return base;
}

std::size_t Layout::length(Aspect aspect) const {
    switch (aspect) {
        case Aspect::kColor: return 3;
        case Aspect::kTranslation: return 2;
        case Aspect::kScale: return 1;
        case Aspect::kRotation: return 2;
        case Aspect::kShape: return shape_size;
        case Aspect::kConfidence: return 1;
        case Aspect::kBackground: return 3;
    }
    return 0;
}

std::vector<Slice> Layout::slices() const {
    std::vector<Slice> out;
    constexpr Aspect order[] = {Aspect::kColor,    Aspect::kTranslation, Aspect::kScale,
                                Aspect::kRotation, Aspect::kShape,       Aspect::kConfidence};
    for (std::size_t i = 0; i < n_objects; ++i) {
        for (Aspect a : order) {
            out.push_back({static_cast<int>(i), a, offset(i, a), length(a)});
        }
    }
    out.push_back({-1, Aspect::kBackground, background_offset(), 3});
    return out;
}

FlatParams flatten(const Scene& scene) {
    FlatParams fp;
    fp.layout = {scene.objects.size(), scene.shape_size(), scene.width, scene.height};
    fp.values.reserve(fp.layout.size());
    for (const ObjectParams& o : scene.objects) {
        if (o.shape_weights.size() != fp.layout.shape_size) {
            throw LayoutMismatch("objects disagree on the shape-weight length");
        }
        fp.values.insert(fp.values.end(), o.color.begin(), o.color.end());
        fp.values.push_back(o.translation.x);
        fp.values.push_back(o.translation.y);
        fp.values.push_back(o.scale);
        fp.values.push_back(o.rotation.x);
        fp.values.push_back(o.rotation.y);
        fp.values.insert(fp.values.end(), o.shape_weights.begin(), o.shape_weights.end());
        fp.values.push_back(o.confidence);
    }
    fp.values.insert(fp.values.end(), scene.background.begin(), scene.background.end());
    return fp;
}

Scene unflatten_raw(const FlatParams& params) {
    const Layout& l = params.layout;
    if (params.values.size() != l.size()) {
        throw LayoutMismatch("flat vector has " + std::to_string(params.values.size()) + " values, layout expects " +
                             std::to_string(l.size()));
    }
    const auto& v = params.values;
    Scene s;
    s.width = l.width;
    s.height = l.height;
    s.objects.resize(l.n_objects);
    for (std::size_t i = 0; i < l.n_objects; ++i) {
        ObjectParams& o = s.objects[i];
        const std::size_t b = l.object_offset(i);
        o.color = {v[b], v[b + 1], v[b + 2]};
        o.translation = {v[b + 3], v[b + 4]};
        o.scale = v[b + 5];
        o.rotation = {v[b + 6], v[b + 7]};
        o.shape_weights.assign(v.begin() + static_cast<std::ptrdiff_t>(b + 8),
                               v.begin() + static_cast<std::ptrdiff_t>(b + 8 + l.shape_size));
        o.confidence = v[b + 8 + l.shape_size];
    }
    const std::size_t bg = l.background_offset();
    s.background = {v[bg], v[bg + 1], v[bg + 2]};
    return s;
}

namespace {

double clamp_unit(double v) { return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0); }

void project_object(ObjectParams& o, bool simplex_shapes) {
    for (double& c : o.color) c = clamp_unit(c);
    o.translation = {clamp_unit(o.translation.x), clamp_unit(o.translation.y)};
    o.scale = std::isnan(o.scale) ? kMinScale : std::clamp(o.scale, kMinScale, kMaxScale);
    const double r = norm(o.rotation);
    if (!(r > 0.0) || !std::isfinite(r)) {
        o.rotation = {1.0, 0.0};
    } else if (std::abs(r - 1.0) > 1e-12) {
        o.rotation = {o.rotation.x / r, o.rotation.y / r};
    }
    o.confidence = clamp_unit(o.confidence);
    if (!simplex_shapes) return;
    double sum = 0.0;
    for (double& w : o.shape_weights) {
        if (!(w > 0.0)) w = 0.0;
        sum += w;
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
        const double u = o.shape_weights.empty() ? 0.0 : 1.0 / static_cast<double>(o.shape_weights.size());
        std::fill(o.shape_weights.begin(), o.shape_weights.end(), u);
    } else if (std::abs(sum - 1.0) > 1e-12) {
        for (double& w : o.shape_weights) w /= sum;
    }
}

}  // namespace

Scene unflatten(const FlatParams& params, bool simplex_shapes) {
    Scene s = unflatten_raw(params);
    for (ObjectParams& o : s.objects) project_object(o, simplex_shapes);
    for (double& c : s.background) c = clamp_unit(c);
    return s;
}

void project(FlatParams& params, bool simplex_shapes) {
    params.values = flatten(unflatten(params, simplex_shapes)).values;
}

void to_json(nlohmann::json& j, const Scene& s) {
    j = nlohmann::json{{"width", s.width}, {"height", s.height}, {"background", s.background}};
    nlohmann::json objects = nlohmann::json::array();
    for (const ObjectParams& o : s.objects) {
        objects.push_back({{"color", o.color},
                           {"t", {o.translation.x, o.translation.y}},
                           {"scale", o.scale},
                           {"rot", {o.rotation.x, o.rotation.y}},
                           {"shape", o.shape_weights},
                           {"conf", o.confidence}});
    }
    j["objects"] = std::move(objects);
}

void from_json(const nlohmann::json& j, Scene& s) {
    try {
        s.width = j.at("width").get<int>();
        s.height = j.at("height").get<int>();
        s.background = j.at("background").get<Rgb>();
        s.objects.clear();
        for (const auto& jo : j.at("objects")) {
            ObjectParams o;
            o.color = jo.at("color").get<Rgb>();
            const auto t = jo.at("t").get<std::array<double, 2>>();
            o.translation = {t[0], t[1]};
            o.scale = jo.at("scale").get<double>();
            const auto r = jo.at("rot").get<std::array<double, 2>>();
            o.rotation = {r[0], r[1]};
            o.shape_weights = jo.at("shape").get<std::vector<double>>();
            o.confidence = jo.at("conf").get<double>();
            s.objects.push_back(std::move(o));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scene JSON: ") + e.what());
    }
}

}  // namespace vscene
