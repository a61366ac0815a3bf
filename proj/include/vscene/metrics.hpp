#pragma once

#include <vector>

#include "vscene/efd.hpp"
#include "vscene/image.hpp"
#include "vscene/renderer.hpp"
#include "vscene/scene.hpp"

namespace vscene {

/// Mean SSIM over all valid 11x11 window positions and channels (Gaussian window, sigma 1.5,
/// K1 = 0.01, K2 = 0.03, dynamic range 1). Throws TooSmall below 11x11, DimensionMismatch.
double ssim(const Image& a, const Image& b);

/// Foreground IoU of the binarized maps; 1 when both foregrounds are empty.
double iou(const LabelMap& a, const LabelMap& b);

/// Adjusted Rand index over the pixels whose truth label is nonzero. When the index is
/// undefined (both partitions trivial) it is 1 if the partitions agree and the predicted label
/// is not background, 0 otherwise; an empty evaluation set gives 1.
double ari(const LabelMap& pred, const LabelMap& truth);

struct ExampleMetrics {
    double mae = 0.0;
    double mse = 0.0;
    double ssim = 0.0;
    double iou = 0.0;
    double ari = 0.0;
};

struct MetricReport {
    double mae = 0.0;
    double mse = 0.0;
    double ssim = 0.0;
    double iou = 0.0;
    double ari = 0.0;
    std::vector<ExampleMetrics> per_example;
};

ExampleMetrics compare(const Image& pred_image, const LabelMap& pred_labels, const Image& truth_image,
                       const LabelMap& truth_labels);

/// Means of the per-example values (in order).
MetricReport summarize(std::vector<ExampleMetrics> per_example);

/// Renders both scene lists and compares them. Throws LengthMismatch.
MetricReport evaluate(const std::vector<Scene>& pred, const std::vector<Scene>& truth, const PrototypeBank& bank,
                      const RenderConfig& cfg, unsigned threads = 1);

}  // namespace vscene
