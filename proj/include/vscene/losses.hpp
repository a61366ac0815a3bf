#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "vscene/efd.hpp"
#include "vscene/image.hpp"
#include "vscene/scene.hpp"

namespace vscene {

enum class ImageLossKind { kMae, kMse };

/// Mean over pixels and channels of |a - b| or (a - b)^2. Throws DimensionMismatch.
double image_loss(const Image& a, const Image& b, ImageLossKind kind);

/// Loss value and its gradient with respect to `rendered`.
double image_loss_adjoint(const Image& rendered, const Image& target, ImageLossKind kind, Image& adjoint);

/// ||t - t'|| + 0.1 ||c - c'|| + 0.01 |conf - conf'| (plain Euclidean norms).
double matching_cost(const ObjectParams& target, const ObjectParams& pred);

struct MatchResult {
    std::vector<std::pair<std::size_t, std::size_t>> assignment;  // (target, candidate), by target
    std::vector<std::size_t> unmatched_candidates;
    double total_cost = 0.0;
};

using CostMatrix = std::vector<std::vector<double>>;

/// Minimum-cost assignment for an n x k matrix (rows = targets). When several assignments
/// tie, the one whose candidate indices are lexicographically smallest (by target) wins.
MatchResult hungarian(const CostMatrix& costs);

CostMatrix matching_costs(const Scene& target, const Scene& pred);

enum class ShapeTerm {
    kWeights,  // distance between shape-weight vectors
    kContour,  // RMS point distance between blended contours
};

struct ParamLossOptions {
    double confidence_eps = 1e-7;
    double symmetry_threshold = kDefaultSymmetryThreshold;
    ShapeTerm shape_term = ShapeTerm::kWeights;
    std::size_t k_points = kDefaultContourPoints;
};

/// Parameter-space loss after Hungarian matching on matching_cost. Throws NotEnoughCandidates.
double param_loss(const Scene& target, const Scene& pred, const PrototypeBank& bank,
                  const ParamLossOptions& opts = {});

/// Gradient of param_loss with respect to the raw flat parameters of `pred`, with the assignment
/// and the target's symmetry orders held fixed. Writes the loss to `loss` when given.
GradientVector grad_param_loss(const Scene& target, const FlatParams& pred, const PrototypeBank& bank,
                               const ParamLossOptions& opts = {}, double* loss = nullptr);

}  // namespace vscene
