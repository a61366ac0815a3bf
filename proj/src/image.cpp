#include "vscene/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "vscene/errors.hpp"

namespace vscene {

std::uint8_t quantize(double v) {
    const double c = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(255.0 * c));
}

Image quantized(const Image& img) {
    Image out = img;
    for (double& v : out.data) v = quantize(v) / 255.0;
    return out;
}

namespace {

void write_raw(const std::filesystem::path& path, int w, int h, png_uint_32 format,
               const std::vector<std::uint8_t>& buf) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = format;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
        throw IoFailure("cannot write PNG " + path.string() + ": " + image.message);
    }
}

std::vector<std::uint8_t> read_raw(const std::filesystem::path& path, png_uint_32 format, int& w, int& h) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw IoFailure("cannot read PNG " + path.string() + ": " + image.message);
    }
    image.format = format;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoFailure("cannot decode PNG " + path.string() + ": " + image.message);
    }
    w = static_cast<int>(image.width);
    h = static_cast<int>(image.height);
    return buf;
}

}  // namespace

void write_png(const Image& img, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf(img.data.size());
    std::transform(img.data.begin(), img.data.end(), buf.begin(), quantize);
    write_raw(path, img.width, img.height, PNG_FORMAT_RGB, buf);
}

Image read_png(const std::filesystem::path& path) {
    int w = 0, h = 0;
    const auto buf = read_raw(path, PNG_FORMAT_RGB, w, h);
    Image img(w, h);
    for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] / 255.0;
    return img;
}

void write_label_png(const LabelMap& labels, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf(labels.labels.size());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        buf[i] = static_cast<std::uint8_t>(std::clamp(labels.labels[i], 0, 255));
    }
    write_raw(path, labels.width, labels.height, PNG_FORMAT_GRAY, buf);
}

LabelMap read_label_png(const std::filesystem::path& path) {
    int w = 0, h = 0;
    const auto buf = read_raw(path, PNG_FORMAT_GRAY, w, h);
    LabelMap out(w, h);
    for (std::size_t i = 0; i < buf.size(); ++i) out.labels[i] = buf[i];
    return out;
}

}  // namespace vscene
