#include "vscene/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vscene/errors.hpp"
#include "vscene/io.hpp"
#include "vscene/parallel.hpp"

namespace vscene {

namespace {

Contour resample_by_arc_length(const Contour& c, std::size_t n) {
    const std::size_t k = c.size();
    std::vector<double> cum(k + 1, 0.0);
    for (std::size_t i = 0; i < k; ++i) cum[i + 1] = cum[i] + norm(c[(i + 1) % k] - c[i]);
    const double total = cum[k];
    Contour out;
    out.reserve(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = total * static_cast<double>(i) / static_cast<double>(n);
        while (seg + 1 < k && cum[seg + 1] <= s) ++seg;
        const double len = cum[seg + 1] - cum[seg];
        const double f = len > 0.0 ? (s - cum[seg]) / len : 0.0;
        out.push_back(c[seg] + f * (c[(seg + 1) % k] - c[seg]));
    }
    return out;
}

Contour counter_clockwise(Contour c) {
    if (signed_area(c) < 0.0) std::reverse(c.begin(), c.end());
    return c;
}

std::string index_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", i);
    return buf;
}

}  // namespace

void validate_gen_config(const GenConfig& c) {
    if (c.min_objects < 1) throw ValidationError("generator.min_objects must be >= 1");
    if (c.max_objects < c.min_objects) throw ValidationError("generator.max_objects must be >= min_objects");
    if (static_cast<std::size_t>(c.max_objects) > kDefaultMaxObjects) {
        throw ValidationError("generator.max_objects exceeds the scene maximum");
    }
    if (!(c.scale_min > 0.0) || c.scale_max < c.scale_min) throw ValidationError("generator.scale_range is invalid");
    if (c.translation_min < 0.0 || c.translation_max > 1.0 || c.translation_max < c.translation_min) {
        throw ValidationError("generator.translation_range is invalid");
    }
    if (c.n_placement_sets < 1) throw ValidationError("generator.n_placement_sets must be >= 1");
    if (c.width < 1 || c.height < 1) throw ValidationError("generator.size must be positive");
    if (c.shapes.empty()) throw ValidationError("generator.shapes must not be empty");
    for (const auto& s : c.shapes) {
        const auto& names = builtin_shape_names();
        if (std::find(names.begin(), names.end(), s) == names.end()) {
            throw ValidationError("generator.shapes: unknown shape '" + s + "'");
        }
    }
}

void to_json(nlohmann::json& j, const GenConfig& c) {
    j = nlohmann::json{{"n_objects_range", {c.min_objects, c.max_objects}},
                       {"scale_range", {c.scale_min, c.scale_max}},
                       {"translation_range", {c.translation_min, c.translation_max}},
                       {"n_placement_sets", c.n_placement_sets},
                       {"size", {c.width, c.height}},
                       {"shapes", c.shapes},
                       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GenConfig& c) {
    if (j.contains("n_objects_range")) {
        const auto r = j.at("n_objects_range").get<std::array<int, 2>>();
        c.min_objects = r[0];
        c.max_objects = r[1];
    }
    if (j.contains("scale_range")) {
        const auto r = j.at("scale_range").get<std::array<double, 2>>();
        c.scale_min = r[0];
        c.scale_max = r[1];
    }
    if (j.contains("translation_range")) {
        const auto r = j.at("translation_range").get<std::array<double, 2>>();
        c.translation_min = r[0];
        c.translation_max = r[1];
    }
    if (j.contains("n_placement_sets")) c.n_placement_sets = j.at("n_placement_sets").get<int>();
    if (j.contains("size")) {
        const auto r = j.at("size").get<std::array<int, 2>>();
        c.width = r[0];
        c.height = r[1];
    }
    if (j.contains("shapes")) c.shapes = j.at("shapes").get<std::vector<std::string>>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
}

const std::vector<std::string>& builtin_shape_names() {
    static const std::vector<std::string> names{"ellipse", "heart", "square"};
    return names;
}

Contour builtin_contour(const std::string& name, std::size_t points) {
    Contour c;
    c.reserve(points);
    if (name == "ellipse") {
        // Uniform in angle: exactly one harmonic.
        for (std::size_t i = 0; i < points; ++i) {
            const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(points);
            c.push_back({std::cos(a), 0.5 * std::sin(a)});
        }
        return counter_clockwise(c);
    }
    if (name == "square") {
        // Starts at the middle of the right edge.
        const Contour path{{1, 0}, {1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
        Contour dense;
        for (std::size_t i = 0; i < path.size(); ++i) {
            const Vec2 a = path[i], b = path[(i + 1) % path.size()];
            for (int s = 0; s < 64; ++s) dense.push_back(a + (s / 64.0) * (b - a));
        }
        return counter_clockwise(resample_by_arc_length(dense, points));
    }
    if (name == "heart") {
        Contour dense;
        const std::size_t n = 8192;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
            const double s = std::sin(t);
            const double x = 16.0 * s * s * s;
            // Negated so the lobes sit at low y (top of the raster).
            const double y = -(13.0 * std::cos(t) - 5.0 * std::cos(2 * t) - 2.0 * std::cos(3 * t) - std::cos(4 * t));
            dense.push_back({x / 16.0, y / 16.0});
        }
        return counter_clockwise(resample_by_arc_length(dense, points));
    }
    throw ValidationError("unknown built-in shape '" + name + "'");
}

PrototypeBank bank_for_shapes(const std::vector<std::string>& names) {
    PrototypeBank bank;
    for (const auto& name : names) {
        bank.shapes.push_back(normalize_shape(efd_from_contour(builtin_contour(name), kDefaultHarmonics)));
    }
    return bank;
}

PrototypeBank builtin_bank() {
    static const PrototypeBank bank = bank_for_shapes(builtin_shape_names());
    return bank;
}

std::size_t select_placement(const std::vector<std::vector<Vec2>>& candidate_sets) {
    std::size_t best = 0;
    double best_min = -1.0;
    for (std::size_t s = 0; s < candidate_sets.size(); ++s) {
        const auto& pts = candidate_sets[s];
        if (pts.size() < 2) return 0;
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < pts.size(); ++a) {
            for (std::size_t b = a + 1; b < pts.size(); ++b) m = std::min(m, norm(pts[a] - pts[b]));
        }
        if (m > best_min) {
            best_min = m;
            best = s;
        }
    }
    return best;
}

Scene sample_scene(const GenConfig& cfg, Rng& rng, std::vector<std::vector<Vec2>>* candidate_sets) {
    Scene s;
    s.width = cfg.width;
    s.height = cfg.height;
    const int n = static_cast<int>(rng.between(cfg.min_objects, cfg.max_objects));
    const std::size_t m = cfg.shapes.size();
    for (int i = 0; i < n; ++i) {
        ObjectParams o;
        for (double& c : o.color) c = rng.uniform();
        const double a = rng.uniform(0.0, 2.0 * kPi);
        o.rotation = {std::cos(a), std::sin(a)};
        o.scale = rng.uniform(cfg.scale_min, cfg.scale_max);
        o.shape_weights.assign(m, 0.0);
        o.shape_weights[rng.below(m)] = 1.0;
        o.confidence = 1.0;
        s.objects.push_back(std::move(o));
    }
    std::vector<std::vector<Vec2>> sets(static_cast<std::size_t>(cfg.n_placement_sets));
    for (auto& set : sets) {
        for (int i = 0; i < n; ++i) {
            const double x = rng.uniform(cfg.translation_min, cfg.translation_max);
            const double y = rng.uniform(cfg.translation_min, cfg.translation_max);
            set.push_back({x, y});
        }
    }
    const std::size_t chosen = select_placement(sets);
    for (int i = 0; i < n; ++i) s.objects[i].translation = sets[chosen][i];
    for (double& c : s.background) c = rng.uniform();
    if (candidate_sets) *candidate_sets = std::move(sets);
    return s;
}

DatasetExample make_example(const Scene& scene, const PrototypeBank& bank, const RenderConfig& rcfg) {
    Rasterizer raster(raster_input(scene, bank, rcfg), rcfg);
    return {quantized(raster.image()), scene, raster.labels()};
}

Manifest generate_dataset(const GenConfig& cfg, std::size_t count, const std::filesystem::path& out_dir,
                          const RenderConfig& rcfg, unsigned threads) {
    validate_gen_config(cfg);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoFailure("cannot create " + out_dir.string() + ": " + ec.message());
    const PrototypeBank bank = bank_for_shapes(cfg.shapes);

    Manifest manifest;
    manifest.root = out_dir;
    manifest.entries.resize(count);
    if (count > 0) {
        for (const char* sub : {"images", "labels", "scenes"}) {
            std::filesystem::create_directories(out_dir / sub, ec);
            if (ec) throw IoFailure("cannot create " + (out_dir / sub).string());
        }
    }
    parallel_for(count, threads, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(cfg.seed, i);
        Rng rng(seed);
        const Scene scene = sample_scene(cfg, rng);
        const DatasetExample ex = make_example(scene, bank, rcfg);
        ManifestEntry& e = manifest.entries[i];
        const std::string name = index_name(i);
        e.index = i;
        e.image = "images/" + name + ".png";
        e.labels = "labels/" + name + ".png";
        e.scene = "scenes/" + name + ".json";
        e.n_objects = scene.objects.size();
        e.seed = seed;
        write_png(ex.image, out_dir / e.image);
        write_label_png(ex.labels, out_dir / e.labels);
        save_scene(scene, out_dir / e.scene);
    });

    std::ofstream out(out_dir / "manifest.jsonl", std::ios::binary);
    if (!out) throw IoFailure("cannot write manifest in " + out_dir.string());
    for (const auto& e : manifest.entries) {
        const nlohmann::json j{{"index", e.index},     {"image", e.image},     {"labels", e.labels},
                               {"scene", e.scene},     {"n_objects", e.n_objects}, {"seed", e.seed},
                               {"dataset_seed", cfg.seed}, {"config", cfg}};
        out << j.dump() << '\n';
    }
    if (!out) throw IoFailure("manifest write failed");
    return manifest;
}

Manifest load_manifest(const std::filesystem::path& path) {
    const auto file = std::filesystem::is_directory(path) ? path / "manifest.jsonl" : path;
    std::ifstream in(file);
    if (!in) throw IoFailure("cannot read manifest " + file.string());
    Manifest m;
    m.root = file.parent_path();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ManifestEntry e;
            e.index = j.at("index").get<std::size_t>();
            e.image = j.at("image").get<std::string>();
            e.labels = j.at("labels").get<std::string>();
            e.scene = j.at("scene").get<std::string>();
            e.n_objects = j.value("n_objects", std::size_t{0});
            e.seed = j.value("seed", std::uint64_t{0});
            m.entries.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError(file.string() + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return m;
}

Scene load_example_scene(const Manifest& m, std::size_t i) { return load_scene(m.root / m.entries.at(i).scene); }
Image load_example_image(const Manifest& m, std::size_t i) { return read_png(m.root / m.entries.at(i).image); }
LabelMap load_example_labels(const Manifest& m, std::size_t i) {
    return read_label_png(m.root / m.entries.at(i).labels);
}

Scene sample_params_from_dataset(const Manifest& m, Rng& rng) {
    if (m.empty()) throw EmptyManifest("manifest has no examples");
    return load_example_scene(m, rng.below(m.size()));
}

}  // namespace vscene
