#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vscene/analysis.hpp"
#include "vscene/config.hpp"
#include "vscene/errors.hpp"
#include "vscene/generator.hpp"
#include "vscene/io.hpp"
#include "vscene/metrics.hpp"
#include "vscene/optimize.hpp"
#include "vscene/parallel.hpp"
#include "vscene/prototypes.hpp"
#include "vscene/random.hpp"
#include "vscene/renderer.hpp"

#ifndef VSCENE_VERSION
#define VSCENE_VERSION "unknown"
#endif
#ifndef VSCENE_BUILD_TYPE
#define VSCENE_BUILD_TYPE "unknown"
#endif

namespace fs = std::filesystem;
using namespace vscene;

namespace {

struct Common {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;

    Config load() const {
        Config c = resolve_config(config ? std::optional<fs::path>(*config) : std::nullopt);
        if (seed) {
            c.seed = *seed;
            c.generator.seed = *seed;
        }
        if (threads) c.threads = *threads;
        return c;
    }
};

PrototypeBank bank_or_builtin(const std::string& path) { return path.empty() ? builtin_bank() : load_bank(path); }

void write_text(const std::string& text, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write " + path.string());
    out << text;
    if (!out) throw IoFailure("write failed for " + path.string());
}

// A prediction file holds either a bare scene or a fit report with a "scene" member.
Scene load_prediction(const fs::path& path) {
    const nlohmann::json j = load_json(path);
    try {
        return (j.contains("scene") ? j.at("scene") : j).get<Scene>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string entry_stem(const ManifestEntry& e) { return fs::path(e.scene).stem().string(); }

int run_gen_dataset(const Common& common, std::size_t count, const std::string& out, std::optional<int> size,
                    std::optional<int> max_objects) {
    Config c = common.load();
    if (size) c.generator.width = c.generator.height = *size;
    if (max_objects) c.generator.max_objects = *max_objects;
    validate_gen_config(c.generator);
    const fs::path dir = out.empty() ? fs::path(c.paths.dataset) : fs::path(out);
    if (dir.empty()) throw ValidationError("--out (or paths.dataset) is required");
    const Manifest m = generate_dataset(c.generator, count, dir, c.render, c.threads);
    std::printf("gen-dataset: wrote %zu examples to %s\n", m.size(), dir.string().c_str());
    return 0;
}

int run_render(const Common& common, const std::string& scene_path, const std::string& bank_path,
               const std::string& out, const std::string& labels_out) {
    const Config c = common.load();
    const Scene s = load_scene(scene_path);
    const PrototypeBank bank = bank_or_builtin(bank_path.empty() ? c.paths.bank : bank_path);
    write_png(render(s, bank, c.render), out);
    if (!labels_out.empty()) write_label_png(render_labels(s, bank, c.render), labels_out);
    std::printf("render: %dx%d scene with %zu objects -> %s\n", s.width, s.height, s.objects.size(), out.c_str());
    return 0;
}

FitReport fit_one(const std::string& method, const Image& target, int n_objects, const Scene* init,
                  const PrototypeBank& bank, const FitConfig& fc, std::uint64_t seed) {
    if (method == "opt-iter") return fit_opt_iter(target, n_objects, bank, fc, seed);
    if (method == "rand-optp") return fit_rand_optp(target, n_objects, bank, fc, seed);
    if (init == nullptr) throw ValidationError("--init is required for --method from-init");
    return fit_from_init(target, *init, bank, fc);
}

int run_fit(const Common& common, const std::string& method, const std::string& image, const std::string& dataset,
            const std::string& init, int n_objects, std::size_t limit, const std::string& bank_path,
            const std::string& out) {
    const Config c = common.load();
    const FitConfig fc = c.fit_config();
    const PrototypeBank bank = bank_or_builtin(bank_path.empty() ? c.paths.bank : bank_path);
    if (!image.empty()) {
        const Image target = read_png(image);
        std::optional<Scene> init_scene;
        if (!init.empty()) init_scene = load_scene(init);
        const int n = n_objects > 0 ? n_objects : c.generator.max_objects;
        const FitReport r = fit_one(method, target, n, init_scene ? &*init_scene : nullptr, bank, fc, c.seed);
        save_json(fit_report_json(r), out);
        std::printf("fit: %s, %zu objects, loss %.6f after %d iterations -> %s\n", method.c_str(),
                    r.scene.objects.size(), r.best_loss, r.iterations, out.c_str());
        return 0;
    }
    const Manifest m = load_manifest(dataset.empty() ? c.paths.dataset : dataset);
    if (m.empty()) throw EmptyManifest("manifest has no examples");
    if (method == "from-init") throw ValidationError("--method from-init needs --image and --init");
    const std::size_t count = limit > 0 ? std::min(limit, m.size()) : m.size();
    std::vector<double> losses(count, 0.0);
    parallel_for(count, c.threads, [&](std::size_t i) {
        const Image target = load_example_image(m, i);
        const int n = n_objects > 0 ? n_objects : static_cast<int>(m.entries[i].n_objects);
        const FitReport r = fit_one(method, target, n, nullptr, bank, fc, derive_seed(c.seed, i));
        save_json(fit_report_json(r), fs::path(out) / (entry_stem(m.entries[i]) + ".json"));
        losses[i] = r.best_loss;
    });
    double mean = 0.0;
    for (double v : losses) mean += v;
    std::printf("fit: %s on %zu examples, mean loss %.6f -> %s\n", method.c_str(), count,
                mean / static_cast<double>(count), out.c_str());
    return 0;
}

int run_prototypes(const Common& common, const std::string& images, int rounds, std::size_t limit,
                   const std::string& out) {
    Config c = common.load();
    if (rounds > 0) c.prototypes.rounds = rounds;
    const Manifest m = load_manifest(images.empty() ? c.paths.dataset : images);
    if (m.empty()) throw EmptyManifest("manifest has no examples");
    const std::size_t count = limit > 0 ? std::min(limit, m.size()) : m.size();
    const DiscoveryConfig dc = c.discovery_config();
    std::vector<Image> targets(count);
    std::vector<int> counts(count);
    for (std::size_t i = 0; i < count; ++i) {
        targets[i] = load_example_image(m, i);
        counts[i] = static_cast<int>(m.entries[i].n_objects);
    }
    const std::vector<Scene> inits = discovery_init(targets, counts, dc, c.harmonics);
    const DiscoveryResult r = discover_prototypes(targets, inits, circle_bank(c.harmonics), dc);
    save_bank(r.bank, out);
    std::string orders;
    for (const EfdShape& s : r.bank.shapes) orders += (orders.empty() ? "" : ",") + std::to_string(symmetry_order(s));
    std::printf("prototypes: k=%zu silhouette %.4f symmetry orders {%s} -> %s\n", r.clusters.k, r.clusters.silhouette,
                orders.c_str(), out.c_str());
    return 0;
}

int run_eval(const Common& common, const std::string& pred_dir, const std::string& dataset, const std::string& bank_path,
             const std::string& out) {
    const Config c = common.load();
    const Manifest m = load_manifest(dataset.empty() ? c.paths.dataset : dataset);
    const PrototypeBank bank = bank_or_builtin(bank_path.empty() ? c.paths.bank : bank_path);
    std::vector<Scene> pred;
    std::vector<Scene> truth;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const fs::path p = fs::path(pred_dir) / (entry_stem(m.entries[i]) + ".json");
        if (!fs::exists(p)) continue;
        pred.push_back(load_prediction(p));
        truth.push_back(load_example_scene(m, i));
        index.push_back(m.entries[i].index);
    }
    if (pred.empty()) throw EmptyManifest("no predictions found in " + pred_dir);
    const MetricReport r = evaluate(pred, truth, bank, c.render, c.threads);
    std::string csv = "index,mae,mse,ssim,iou,ari\n";
    char buf[256];
    for (std::size_t i = 0; i < r.per_example.size(); ++i) {
        const ExampleMetrics& e = r.per_example[i];
        std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g\n", index[i], e.mae, e.mse, e.ssim, e.iou, e.ari);
        csv += buf;
    }
    std::snprintf(buf, sizeof buf, "mean,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.mae, r.mse, r.ssim, r.iou, r.ari);
    csv += buf;
    write_text(csv, out);
    std::printf("eval: %zu examples, MAE %.4f MSE %.4f SSIM %.4f IoU %.4f ARI %.4f -> %s\n", pred.size(), r.mae, r.mse,
                r.ssim, r.iou, r.ari, out.c_str());
    return 0;
}

int run_grad_analysis(const Common& common, const std::string& dataset, std::size_t pairs, const std::string& bank_path,
                      const std::string& out) {
    const Config c = common.load();
    AnalysisConfig ac = c.analysis_config();
    if (pairs > 0) ac.n_pairs = pairs;
    const Manifest m = load_manifest(dataset.empty() ? c.paths.dataset : dataset);
    const PrototypeBank bank = bank_or_builtin(bank_path.empty() ? c.paths.bank : bank_path);
    const auto rows = gradient_alignment(m, bank, ac);
    write_text(alignment_csv(rows), out);
    std::printf("grad-analysis: %zu pairs, %zu rows -> %s\n", ac.n_pairs, rows.size(), out.c_str());
    return 0;
}

int run_recovery(const Common& common, const std::string& dataset, std::size_t pairs, const std::string& bank_path,
                 const std::string& out) {
    const Config c = common.load();
    AnalysisConfig ac = c.analysis_config();
    if (pairs > 0) ac.n_pairs = pairs;
    const Manifest m = load_manifest(dataset.empty() ? c.paths.dataset : dataset);
    const PrototypeBank bank = bank_or_builtin(bank_path.empty() ? c.paths.bank : bank_path);
    const auto rows = recovery_study(m, bank, ac, c.fit_config());
    write_text(recovery_csv(rows), out);
    std::printf("recovery: %zu pairs, %zu alphas -> %s\n", ac.n_pairs, rows.size(), out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentiable vector-scene engine: generation, rendering, fitting and analysis."};
    app.set_version_flag("--version", std::string("vscene ") + VSCENE_VERSION + " (" + VSCENE_BUILD_TYPE +
                                          ", " + __VERSION__ + ")");
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON config file (default: $" + std::string(kConfigEnvVar) + ")");
        sub->add_option("--seed", common.seed, "Seed for every random stream");
        sub->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
    };

    std::size_t count = 0;
    std::string out, scene, bank, labels, method = "opt-iter", image, dataset, init, images, pred;
    int n_objects = 0;
    int rounds = 0;
    std::size_t limit = 0;
    std::size_t pairs = 0;

    auto* gen = app.add_subcommand("gen-dataset", "Generate a benchmark dataset");
    gen->add_option("--count", count, "Number of examples")->required()->check(CLI::NonNegativeNumber);
    gen->add_option("--out", out, "Output directory");
    std::optional<int> size, max_objects;
    gen->add_option("--size", size, "Image width and height in pixels")->check(CLI::PositiveNumber);
    gen->add_option("--max-objects", max_objects, "Largest object count per scene")->check(CLI::PositiveNumber);
    add_common(gen);

    auto* ren = app.add_subcommand("render", "Render a scene to PNG");
    ren->add_option("--scene", scene, "Scene JSON")->required();
    ren->add_option("--bank", bank, "Prototype bank JSON (default: built-in)");
    ren->add_option("--out", out, "Output PNG")->required();
    ren->add_option("--labels", labels, "Optional label-map PNG");
    add_common(ren);

    auto* fit = app.add_subcommand("fit", "Fit scene parameters to images");
    fit->add_option("--method", method, "opt-iter, rand-optp or from-init")
        ->check(CLI::IsMember({"opt-iter", "rand-optp", "from-init"}));
    auto* img_opt = fit->add_option("--image,--target", image, "Target PNG");
    auto* ds_opt = fit->add_option("--dataset", dataset, "Dataset directory or manifest (batch mode)");
    img_opt->excludes(ds_opt);
    fit->add_option("--init", init, "Initial scene JSON for from-init");
    fit->add_option("--n-objects", n_objects, "Object slots (default: manifest count or generator maximum)");
    fit->add_option("--limit", limit, "Fit only the first N dataset examples");
    fit->add_option("--bank", bank, "Prototype bank JSON (default: built-in)");
    fit->add_option("--out", out, "Result JSON (single image) or directory (batch)")->required();
    add_common(fit);

    auto* pro = app.add_subcommand("prototypes", "Discover shape prototypes from images");
    pro->add_option("--images", images, "Dataset directory or manifest");
    pro->add_option("--rounds", rounds, "Fit/cluster/replace rounds")->check(CLI::PositiveNumber);
    pro->add_option("--limit", limit, "Use only the first N examples");
    pro->add_option("--out", out, "Output bank JSON")->required();
    add_common(pro);

    auto* ev = app.add_subcommand("eval", "Score predicted scenes against a dataset");
    ev->add_option("--pred", pred, "Directory of predicted scene or fit-report JSON files")->required();
    ev->add_option("--dataset,--truth", dataset, "Ground-truth dataset directory or manifest");
    ev->add_option("--bank", bank, "Prototype bank JSON (default: built-in)");
    ev->add_option("--out", out, "Output CSV")->required();
    add_common(ev);

    auto* ga = app.add_subcommand("grad-analysis", "Cosine similarity of image-loss and parameter-loss gradients");
    ga->add_option("--dataset", dataset, "Dataset directory or manifest");
    ga->add_option("--pairs", pairs, "Number of example pairs");
    ga->add_option("--bank", bank, "Prototype bank JSON (default: built-in)");
    ga->add_option("--out", out, "Output CSV")->required();
    add_common(ga);

    auto* rec = app.add_subcommand("recovery", "Parameter loss before and after image-loss optimization");
    rec->add_option("--dataset", dataset, "Dataset directory or manifest");
    rec->add_option("--pairs", pairs, "Number of example pairs");
    rec->add_option("--bank", bank, "Prototype bank JSON (default: built-in)");
    rec->add_option("--out", out, "Output CSV")->required();
    add_common(rec);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << "\n" << app.help();
        return 1;
    }

    try {
        if (gen->parsed()) return run_gen_dataset(common, count, out, size, max_objects);
        if (ren->parsed()) return run_render(common, scene, bank, out, labels);
        if (fit->parsed()) {
            if (image.empty() && dataset.empty()) {
                Config c = common.load();
                if (c.paths.dataset.empty()) {
                    std::cerr << "fit: one of --image or --dataset is required\n" << fit->help();
                    return 1;
                }
            }
            return run_fit(common, method, image, dataset, init, n_objects, limit, bank, out);
        }
        if (pro->parsed()) return run_prototypes(common, images, rounds, limit, out);
        if (ev->parsed()) return run_eval(common, pred, dataset, bank, out);
        if (ga->parsed()) return run_grad_analysis(common, dataset, pairs, bank, out);
        if (rec->parsed()) return run_recovery(common, dataset, pairs, bank, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
