#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vscene/efd.hpp"
#include "vscene/image.hpp"
#include "vscene/optimize.hpp"
#include "vscene/scene.hpp"

namespace vscene {

using DistanceMatrix = std::vector<std::vector<double>>;

struct ShapeRaster {
    int size = 64;
    int rotations = 24;  // alignment angles tried; 1 compares the shapes as posed
    double scale = 0.45;
    double sigma = 1e-4;
};

/// Filled white-on-black renderings of the shape at every alignment angle, normalized after rotating.
std::vector<std::vector<double>> shape_renderings(const EfdShape& shape, const ShapeRaster& r = {});

/// Rotation-aligned raster MSE between the normalized shapes: the smallest MSE over the
/// alignment angles, taken in both directions.
double shape_distance(const EfdShape& a, const EfdShape& b, const ShapeRaster& r = {});

/// Pairwise shape_distance; renderings are computed once per shape.
DistanceMatrix shape_distances(const std::vector<EfdShape>& shapes, const ShapeRaster& r = {}, unsigned threads = 1);

struct ClusterResult {
    std::size_t k = 0;
    std::vector<std::size_t> medoids;      // item indices, ascending
    std::vector<std::size_t> assignment;   // item -> position in `medoids`
    double cost = 0.0;                     // sum of distances to the assigned medoid
    double silhouette = 0.0;
    std::vector<double> cost_history;      // cost after initialization and after each swap
};

/// PAM: farthest-point initialization from several seeded starts, then best-improvement swaps
/// until no swap lowers the cost. Throws InvalidK.
ClusterResult k_medoids(const DistanceMatrix& d, std::size_t k, std::uint64_t seed = 0);

/// Mean silhouette; items in singleton clusters score 0.
double silhouette(const DistanceMatrix& d, const std::vector<std::size_t>& assignment);

/// k in [k_min, k_max] with the largest mean silhouette (smallest k on ties). Throws InvalidRange.
std::size_t choose_k(const DistanceMatrix& d, std::size_t k_min, std::size_t k_max, std::uint64_t seed = 0);

struct DiscoveryConfig {
    FitConfig fit;
    int rounds = 3;
    std::size_t k_min = 2;
    std::size_t k_max = 6;
    ShapeRaster raster;
    // Only fully observed, well-fitted objects are clustered: off the frame border, at least
    // `min_area` pixels, sharing at most `max_overlap` of their area with other objects, and with a
    // mean absolute residual of at most `max_residual` over their mask grown by `residual_margin` pixels.
    std::size_t min_area = 16;
    double max_overlap = 0.05;
    double max_residual = 0.03;
    int residual_margin = 3;
    double min_cluster_fraction = 0.1;  // smaller clusters, and singletons, are treated as outliers
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct DiscoveryResult {
    PrototypeBank bank;                  // normalized medoid shapes
    ClusterResult clusters;              // final round; medoids index pooled_shapes, assignment follows `clustered`
    std::vector<std::size_t> clustered;  // positions in pooled_shapes that were clustered
    std::vector<double> round_losses;    // mean post-fit image loss per round
    std::vector<Scene> scenes;           // free-shape scenes after the last round
    std::vector<EfdShape> pooled_shapes; // final round, in image/object order
};

/// Alternates per-image fitting with free EFD shapes, k-medoids clustering of the fully observed
/// pooled shapes, and replacement of every shape by its nearest medoid. `init_scenes` are expressed over `init_bank`.
DiscoveryResult discover_prototypes(const std::vector<Image>& images, const std::vector<Scene>& init_scenes,
                                    const PrototypeBank& init_bank, const DiscoveryConfig& cfg);

/// A one-prototype bank holding the unit circle; the neutral starting point for discovery.
PrototypeBank circle_bank(std::size_t harmonics = kDefaultHarmonics);

/// Opt-Iter fits over circle_bank(harmonics), one per image, with a single residual peak and a
/// single start angle per inserted object. Image i uses the stream derive_seed(cfg.seed, i).
std::vector<Scene> discovery_init(const std::vector<Image>& images, const std::vector<int>& n_objects,
                                  const DiscoveryConfig& cfg, std::size_t harmonics = kDefaultHarmonics);

}  // namespace vscene
