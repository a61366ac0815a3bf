#include "vscene/config.hpp"

#include <cstdlib>
#include <set>

#include "vscene/errors.hpp"
#include "vscene/io.hpp"

namespace vscene {

using nlohmann::json;

FitConfig Config::fit_config() const {
    FitConfig f = fit;
    f.render = render;
    return f;
}

DiscoveryConfig Config::discovery_config() const {
    DiscoveryConfig d = prototypes;
    d.fit = fit_config();
    d.seed = seed;
    d.threads = threads;
    return d;
}

AnalysisConfig Config::analysis_config() const {
    AnalysisConfig a = analysis;
    a.render = render;
    a.seed = seed;
    a.threads = threads;
    return a;
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads one JSON object, remembering which keys were consumed so that leftovers can be rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError((path_.empty() ? "config" : path_) + " must be an object");
    }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ValidationError(join(path_, key) + " has the wrong type");
        }
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ValidationError(join(path_, k) + " is not a known setting");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

ImageLossKind parse_loss(const std::string& s, const std::string& path) {
    if (s == "mae" || s == "MAE") return ImageLossKind::kMae;
    if (s == "mse" || s == "MSE") return ImageLossKind::kMse;
    throw ValidationError(path + " must be \"mae\" or \"mse\"");
}

std::string loss_str(ImageLossKind k) { return k == ImageLossKind::kMae ? "mae" : "mse"; }

ShapeTerm parse_shape_term(const std::string& s, const std::string& path) {
    if (s == "weights") return ShapeTerm::kWeights;
    if (s == "contour") return ShapeTerm::kContour;
    throw ValidationError(path + " must be \"weights\" or \"contour\"");
}

std::string shape_term_str(ShapeTerm t) { return t == ShapeTerm::kWeights ? "weights" : "contour"; }

void read_render(const json& j, RenderConfig& r) {
    Section s(j, "render");
    s.get("sigma", r.sigma);
    s.get("gamma", r.gamma);
    s.get("k_points", r.k_points);
    s.get("saturation", r.saturation);
    if (const json* b = s.child("background_logit")) {
        if (b->is_null()) {
            r.background_logit.reset();
        } else if (b->is_number()) {
            r.background_logit = b->get<double>();
        } else {
            throw ValidationError("render.background_logit has the wrong type");
        }
    }
    s.finish();
}

void read_generator(const json& j, GenConfig& g) {
    Section s(j, "generator");
    for (const char* k : {"n_objects_range", "scale_range", "translation_range", "n_placement_sets", "size", "shapes"}) {
        s.child(k);
    }
    s.finish();
    json copy = j;
    copy.erase("seed");
    try {
        from_json(copy, g);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("generator has an ill-typed value: ") + e.what());
    }
}

void read_optimizer(const json& j, FitConfig& f) {
    Section s(j, "optimizer");
    s.get("lr", f.adam.lr);
    s.get("beta1", f.adam.beta1);
    s.get("beta2", f.adam.beta2);
    s.get("eps", f.adam.eps);
    s.get("budget", f.budget);
    s.get("train_confidence", f.train_confidence);
    std::string loss = loss_str(f.loss);
    s.get("loss", loss);
    f.loss = parse_loss(loss, s.path("loss"));
    if (const json* p = s.child("plateau")) {
        Section ps(*p, "optimizer.plateau");
        ps.get("patience", f.plateau.patience);
        ps.get("cooldown", f.plateau.cooldown);
        ps.get("factor", f.plateau.factor);
        ps.get("threshold", f.plateau.threshold);
        ps.finish();
    }
    s.get("rand_max_iterations", f.rand_max_iterations);
    s.get("converge_lr", f.converge_lr);
    s.get("converge_delta", f.converge_delta);
    s.get("converge_window", f.converge_window);
    s.get("blur_window", f.blur_window);
    s.get("color_window", f.color_window);
    s.get("init_scale", f.init_scale);
    s.get("residual_threshold", f.residual_threshold);
    s.get("peak_candidates", f.peak_candidates);
    s.get("angle_restarts", f.angle_restarts);
    s.finish();
}

void read_prototypes(const json& j, DiscoveryConfig& d) {
    Section s(j, "prototypes");
    s.get("rounds", d.rounds);
    s.get("k_min", d.k_min);
    s.get("k_max", d.k_max);
    s.get("min_area", d.min_area);
    s.get("max_overlap", d.max_overlap);
    s.get("max_residual", d.max_residual);
    s.get("residual_margin", d.residual_margin);
    s.get("min_cluster_fraction", d.min_cluster_fraction);
    if (const json* r = s.child("raster")) {
        Section rs(*r, "prototypes.raster");
        rs.get("size", d.raster.size);
        rs.get("rotations", d.raster.rotations);
        rs.get("scale", d.raster.scale);
        rs.get("sigma", d.raster.sigma);
        rs.finish();
    }
    s.finish();
}

void read_analysis(const json& j, AnalysisConfig& a) {
    Section s(j, "analysis");
    s.get("alphas", a.alphas);
    s.get("n_pairs", a.n_pairs);
    std::vector<std::string> losses;
    for (ImageLossKind k : a.losses) losses.push_back(loss_str(k));
    s.get("losses", losses);
    a.losses.clear();
    for (const std::string& l : losses) a.losses.push_back(parse_loss(l, s.path("losses")));
    std::string term = shape_term_str(a.param.shape_term);
    s.get("shape_term", term);
    a.param.shape_term = parse_shape_term(term, s.path("shape_term"));
    s.finish();
}

}  // namespace

void validate_config(const Config& c) {
    validate_render_config(c.render);
    if (c.harmonics < 1) throw ValidationError("efd.harmonics must be >= 1");
    validate_gen_config(c.generator);
    validate_fit_config(c.fit_config());
    const DiscoveryConfig& d = c.prototypes;
    if (d.rounds < 1) throw ValidationError("prototypes.rounds must be >= 1");
    if (d.k_min < 2) throw ValidationError("prototypes.k_min must be >= 2");
    if (d.k_max < d.k_min) throw ValidationError("prototypes.k_max must be >= prototypes.k_min");
    if (d.raster.size < 1) throw ValidationError("prototypes.raster.size must be >= 1");
    if (d.raster.rotations < 1) throw ValidationError("prototypes.raster.rotations must be >= 1");
    if (!(d.raster.scale > 0.0)) throw ValidationError("prototypes.raster.scale must be > 0");
    if (!(d.raster.sigma > 0.0)) throw ValidationError("prototypes.raster.sigma must be > 0");
    if (!(d.max_overlap >= 0.0 && d.max_overlap <= 1.0)) throw ValidationError("prototypes.max_overlap must be in [0,1]");
    if (!(d.max_residual >= 0.0)) throw ValidationError("prototypes.max_residual must be >= 0");
    if (d.residual_margin < 0) throw ValidationError("prototypes.residual_margin must be >= 0");
    if (!(d.min_cluster_fraction >= 0.0 && d.min_cluster_fraction < 1.0)) {
        throw ValidationError("prototypes.min_cluster_fraction must be in [0,1)");
    }
    const AnalysisConfig& a = c.analysis;
    if (a.alphas.empty()) throw ValidationError("analysis.alphas must not be empty");
    for (double v : a.alphas) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("analysis.alphas must lie in [0,1]");
    }
    if (a.n_pairs < 1) throw ValidationError("analysis.n_pairs must be >= 1");
    if (a.losses.empty()) throw ValidationError("analysis.losses must not be empty");
}

json config_to_json(const Config& c) {
    json render{{"sigma", c.render.sigma},
                {"gamma", c.render.gamma},
                {"k_points", c.render.k_points},
                {"saturation", c.render.saturation},
                {"background_logit", c.render.background_logit ? json(*c.render.background_logit) : json(nullptr)}};
    json gen = c.generator;
    gen.erase("seed");
    const FitConfig& f = c.fit;
    json opt{{"lr", f.adam.lr},
             {"beta1", f.adam.beta1},
             {"beta2", f.adam.beta2},
             {"eps", f.adam.eps},
             {"budget", f.budget},
             {"train_confidence", f.train_confidence},
             {"loss", loss_str(f.loss)},
             {"plateau",
              {{"patience", f.plateau.patience},
               {"cooldown", f.plateau.cooldown},
               {"factor", f.plateau.factor},
               {"threshold", f.plateau.threshold}}},
             {"rand_max_iterations", f.rand_max_iterations},
             {"converge_lr", f.converge_lr},
             {"converge_delta", f.converge_delta},
             {"converge_window", f.converge_window},
             {"blur_window", f.blur_window},
             {"color_window", f.color_window},
             {"init_scale", f.init_scale},
             {"residual_threshold", f.residual_threshold},
             {"peak_candidates", f.peak_candidates},
             {"angle_restarts", f.angle_restarts}};
    const DiscoveryConfig& d = c.prototypes;
    json proto{{"rounds", d.rounds},
               {"k_min", d.k_min},
               {"k_max", d.k_max},
               {"min_area", d.min_area},
               {"max_overlap", d.max_overlap},
               {"max_residual", d.max_residual},
               {"residual_margin", d.residual_margin},
               {"min_cluster_fraction", d.min_cluster_fraction},
               {"raster",
                {{"size", d.raster.size},
                 {"rotations", d.raster.rotations},
                 {"scale", d.raster.scale},
                 {"sigma", d.raster.sigma}}}};
    std::vector<std::string> losses;
    for (ImageLossKind k : c.analysis.losses) losses.push_back(loss_str(k));
    json analysis{{"alphas", c.analysis.alphas},
                  {"n_pairs", c.analysis.n_pairs},
                  {"losses", losses},
                  {"shape_term", shape_term_str(c.analysis.param.shape_term)}};
    return json{{"render", render},
                {"efd", {{"harmonics", c.harmonics}}},
                {"generator", gen},
                {"optimizer", opt},
                {"prototypes", proto},
                {"analysis", analysis},
                {"paths", {{"dataset", c.paths.dataset}, {"bank", c.paths.bank}, {"out", c.paths.out}}},
                {"seed", c.seed},
                {"threads", c.threads}};
}

Config config_from_json(const json& j) {
    Config c;
    Section top(j, "");
    if (const json* r = top.child("render")) read_render(*r, c.render);
    if (const json* e = top.child("efd")) {
        Section es(*e, "efd");
        es.get("harmonics", c.harmonics);
        es.finish();
    }
    if (const json* g = top.child("generator")) read_generator(*g, c.generator);
    if (const json* o = top.child("optimizer")) read_optimizer(*o, c.fit);
    if (const json* p = top.child("prototypes")) read_prototypes(*p, c.prototypes);
    if (const json* a = top.child("analysis")) read_analysis(*a, c.analysis);
    if (const json* p = top.child("paths")) {
        Section ps(*p, "paths");
        ps.get("dataset", c.paths.dataset);
        ps.get("bank", c.paths.bank);
        ps.get("out", c.paths.out);
        ps.finish();
    }
    top.get("seed", c.seed);
    top.get("threads", c.threads);
    top.finish();
    c.generator.seed = c.seed;
    validate_config(c);
    return c;
}

Config load_config(const std::filesystem::path& path) { return config_from_json(load_json(path)); }

void save_config(const Config& c, const std::filesystem::path& path) { save_json(config_to_json(c), path); }

Config resolve_config(const std::optional<std::filesystem::path>& explicit_path) {
    if (explicit_path) return load_config(*explicit_path);
    if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') return load_config(env);
    return Config{};
}

}  // namespace vscene
