#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vscene/efd.hpp"
#include "vscene/image.hpp"
#include "vscene/random.hpp"
#include "vscene/renderer.hpp"
#include "vscene/scene.hpp"

namespace vscene {

struct GenConfig {
    int min_objects = 1;
    int max_objects = 4;
    double scale_min = 0.1;
    double scale_max = 0.3;
    double translation_min = 0.05;
    double translation_max = 0.95;
    int n_placement_sets = 8;
    int width = 128;
    int height = 128;
    std::vector<std::string> shapes{"ellipse", "heart", "square"};
    std::uint64_t seed = 0;
};

/// Throws ValidationError naming the offending field.
void validate_gen_config(const GenConfig& cfg);

void to_json(nlohmann::json& j, const GenConfig& c);
void from_json(const nlohmann::json& j, GenConfig& c);

/// Names of the built-in prototypes, in bank order.
const std::vector<std::string>& builtin_shape_names();

/// Analytic source curve of a built-in prototype (counter-clockwise, dense).
Contour builtin_contour(const std::string& name, std::size_t points = 2048);

/// Normalized 16-harmonic prototypes: ellipse (axes 1 : 0.5), heart, square.
PrototypeBank builtin_bank();

/// Built-in prototypes in the order given. Throws ValidationError for unknown names.
PrototypeBank bank_for_shapes(const std::vector<std::string>& names);

/// Picks the candidate set with the largest minimum pairwise distance (first on ties; the
/// first set when there is at most one point).
std::size_t select_placement(const std::vector<std::vector<Vec2>>& candidate_sets);

/// One random scene. The translation candidate sets drawn for placement are written to
/// `candidate_sets` when given.
Scene sample_scene(const GenConfig& cfg, Rng& rng, std::vector<std::vector<Vec2>>* candidate_sets = nullptr);

struct DatasetExample {
    Image image;
    Scene scene;
    LabelMap labels;
};

/// Renders the example for `scene`: the image is quantized to 8 bits as stored on disk.
DatasetExample make_example(const Scene& scene, const PrototypeBank& bank, const RenderConfig& rcfg);

struct ManifestEntry {
    std::size_t index = 0;
    std::string image;   // relative to the dataset root
    std::string labels;
    std::string scene;
    std::size_t n_objects = 0;
    std::uint64_t seed = 0;
};

struct Manifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
};

/// Writes images/NNNNNN.png, labels/NNNNNN.png, scenes/NNNNNN.json and manifest.jsonl under
/// `out_dir`. Example i uses the stream derive_seed(cfg.seed, i). Throws IoFailure.
Manifest generate_dataset(const GenConfig& cfg, std::size_t count, const std::filesystem::path& out_dir,
                          const RenderConfig& rcfg = {}, unsigned threads = 1);

/// Accepts the dataset directory or its manifest.jsonl. Throws IoFailure / ParseError.
Manifest load_manifest(const std::filesystem::path& path);

Scene load_example_scene(const Manifest& m, std::size_t i);
Image load_example_image(const Manifest& m, std::size_t i);
LabelMap load_example_labels(const Manifest& m, std::size_t i);

/// Ground-truth scene of a uniformly chosen example. Throws EmptyManifest.
Scene sample_params_from_dataset(const Manifest& m, Rng& rng);

}  // namespace vscene
