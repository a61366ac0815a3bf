#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vscene/geometry.hpp"

namespace vscene {

/// H x W x 3 channel intensities, row-major, channels interleaved.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}

    std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    std::size_t index(int row, int col, int ch) const {
        return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)) * 3 +
               static_cast<std::size_t>(ch);
    }
    double& at(int row, int col, int ch) { return data[index(row, col, ch)]; }
    double at(int row, int col, int ch) const { return data[index(row, col, ch)]; }

    friend bool operator==(const Image&, const Image&) = default;
};

/// Per-pixel object labels: 0 = background, j >= 1 = object j (1-based).
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<int> labels;

    LabelMap() = default;
    LabelMap(int w, int h, int fill = 0)
        : width(w), height(h), labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    int& at(int row, int col) { return labels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)]; }
    int at(int row, int col) const {
        return labels[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)];
    }

    friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// round(255 * v), v clamped to [0, 1].
std::uint8_t quantize(double v);

/// Image with every value replaced by its 8-bit quantized value / 255.
Image quantized(const Image& img);

/// 8-bit RGB PNG. Throws IoFailure.
void write_png(const Image& img, const std::filesystem::path& path);
/// Reads any PNG as RGB in [0, 1]. Throws IoFailure.
Image read_png(const std::filesystem::path& path);

/// 8-bit single-channel PNG with raw label values. Throws IoFailure.
void write_label_png(const LabelMap& labels, const std::filesystem::path& path);
LabelMap read_label_png(const std::filesystem::path& path);

}  // namespace vscene
