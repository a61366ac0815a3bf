#include "vscene/metrics.hpp"

#include <cmath>
#include <map>

#include "vscene/errors.hpp"
#include "vscene/losses.hpp"
#include "vscene/parallel.hpp"

namespace vscene {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

std::vector<double> gaussian_kernel() {
    std::vector<double> k(kWindow);
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double x = i - kWindow / 2;
        k[i] = std::exp(-x * x / (2.0 * kWindowSigma * kWindowSigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Valid-mode separable filter of one H x W plane: output (H-10) x (W-10).
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h, const std::vector<double>& k) {
    const int ow = w - kWindow + 1, oh = h - kWindow + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (int t = 0; t < kWindow; ++t) acc += k[t] * plane[static_cast<std::size_t>(r) * w + c + t];
            tmp[static_cast<std::size_t>(r) * ow + c] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (int t = 0; t < kWindow; ++t) acc += k[t] * tmp[static_cast<std::size_t>(r + t) * ow + c];
            out[static_cast<std::size_t>(r) * ow + c] = acc;
        }
    }
    return out;
}

double comb2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double ssim(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height) throw DimensionMismatch("image dimensions differ");
    if (a.width < kWindow || a.height < kWindow) throw TooSmall("SSIM needs images of at least 11x11");
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const auto k = gaussian_kernel();
    const int w = a.width, h = a.height;
    const std::size_t n = a.pixels();
    double total = 0.0;
    std::size_t count = 0;
    for (int ch = 0; ch < 3; ++ch) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = a.data[i * 3 + ch];
            y[i] = b.data[i * 3 + ch];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, w, h, k), my = filter_valid(y, w, h, k);
        const auto sxx = filter_valid(xx, w, h, k), syy = filter_valid(yy, w, h, k), sxy = filter_valid(xy, w, h, k);
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i];
            const double vy = syy[i] - my[i] * my[i];
            const double cxy = sxy[i] - mx[i] * my[i];
            total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
                     ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        count += mx.size();
    }
    return total / static_cast<double>(count);
}

double iou(const LabelMap& a, const LabelMap& b) {
    if (a.width != b.width || a.height != b.height) throw DimensionMismatch("label map dimensions differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const bool fa = a.labels[i] != 0, fb = b.labels[i] != 0;
        inter += fa && fb;
        uni += fa || fb;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double ari(const LabelMap& pred, const LabelMap& truth) {
    if (pred.width != truth.width || pred.height != truth.height) {
        throw DimensionMismatch("label map dimensions differ");
    }
    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> rows, cols;
    double n = 0.0;
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        if (truth.labels[i] == 0) continue;
        cells[{truth.labels[i], pred.labels[i]}] += 1.0;
        rows[truth.labels[i]] += 1.0;
        cols[pred.labels[i]] += 1.0;
        n += 1.0;
    }
    if (n == 0.0) return 1.0;
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, v] : cells) index += comb2(v);
    for (const auto& [key, v] : rows) sum_rows += comb2(v);
    for (const auto& [key, v] : cols) sum_cols += comb2(v);
    const double expected = n > 1.0 ? sum_rows * sum_cols / comb2(n) : 0.0;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    const double denom = max_index - expected;
    if (denom == 0.0) {
        const bool same = cells.size() == rows.size() && cells.size() == cols.size();
        return same && !cols.count(0) ? 1.0 : 0.0;
    }
    return (index - expected) / denom;
}

ExampleMetrics compare(const Image& pred_image, const LabelMap& pred_labels, const Image& truth_image,
                       const LabelMap& truth_labels) {
    ExampleMetrics m;
    m.mae = image_loss(pred_image, truth_image, ImageLossKind::kMae);
    m.mse = image_loss(pred_image, truth_image, ImageLossKind::kMse);
    m.ssim = ssim(pred_image, truth_image);
    m.iou = iou(pred_labels, truth_labels);
    m.ari = ari(pred_labels, truth_labels);
    return m;
}

MetricReport summarize(std::vector<ExampleMetrics> per_example) {
    MetricReport r;
    r.per_example = std::move(per_example);
    if (r.per_example.empty()) return r;
    for (const auto& e : r.per_example) {
        r.mae += e.mae;
        r.mse += e.mse;
        r.ssim += e.ssim;
        r.iou += e.iou;
        r.ari += e.ari;
    }
    const double n = static_cast<double>(r.per_example.size());
    r.mae /= n;
    r.mse /= n;
    r.ssim /= n;
    r.iou /= n;
    r.ari /= n;
    return r;
}

MetricReport evaluate(const std::vector<Scene>& pred, const std::vector<Scene>& truth, const PrototypeBank& bank,
                      const RenderConfig& cfg, unsigned threads) {
    if (pred.size() != truth.size()) throw LengthMismatch("prediction and truth lists differ in length");
    std::vector<ExampleMetrics> per(pred.size());
    parallel_for(pred.size(), threads, [&](std::size_t i) {
        const Rasterizer rp(raster_input(pred[i], bank, cfg), cfg);
        const Rasterizer rt(raster_input(truth[i], bank, cfg), cfg);
        per[i] = compare(rp.image(), rp.labels(), rt.image(), rt.labels());
    });
    return summarize(std::move(per));
}

}  // namespace vscene
