#pragma once

#include <algorithm>
#include <cmath>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vscene/efd.hpp"
#include "vscene/renderer.hpp"
#include "vscene/scene.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("vscene_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Directory contents as (relative path, bytes), sorted.
inline std::vector<std::pair<std::string, std::string>> snapshot(const std::filesystem::path& root) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out.emplace_back(std::filesystem::relative(e.path(), root).string(), read_file(e.path()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Unit-weight scene object over an m-prototype bank.
inline vscene::ObjectParams object(double tx, double ty, double scale, double angle, std::size_t shape, std::size_t m,
                                   vscene::Rgb color = {0.8, 0.3, 0.1}) {
    vscene::ObjectParams o;
    o.translation = {tx, ty};
    o.scale = scale;
    o.rotation = {std::cos(angle), std::sin(angle)};
    o.shape_weights.assign(m, 0.0);
    o.shape_weights[shape] = 1.0;
    o.color = color;
    o.confidence = 1.0;
    return o;
}

// Random band-limited coefficients with a dominant first harmonic.
inline vscene::EfdShape random_shape(std::mt19937_64& gen, std::size_t harmonics, double decay = 0.15) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    vscene::EfdShape s(harmonics);
    s.coeffs[0] = {1.0, 0.1 * u(gen), 0.1 * u(gen), 0.8 + 0.1 * u(gen)};
    for (std::size_t n = 1; n < harmonics; ++n) {
        for (double& c : s.coeffs[n]) c = decay * u(gen) / static_cast<double>((n + 1) * (n + 1));
    }
    return s;
}

struct FdCheck {
    double cosine = 0.0;         // over smooth components
    double max_rel_error = 0.0;  // over smooth components
    std::size_t components = 0;
    std::size_t smooth = 0;
};

// render_grad against central differences of sum(adjoint * image) with step h. A component counts
// as smooth when the one-sided differences over [-h, 0] and [0, h] agree to 1e-2 and the central
// differences at h and h/2 agree to 1e-3; together these rule out jumps, kinks and curvature large
// enough to spoil the central difference.
inline FdCheck fd_check(const vscene::Scene& s, const vscene::PrototypeBank& bank, const vscene::RenderConfig& cfg,
                        const vscene::Image& adjoint, double h) {
    using namespace vscene;
    const GradientVector g = render_grad(s, bank, cfg, adjoint);
    const FlatParams fp = flatten(s);
    auto f = [&](std::size_t k, double step) {
        FlatParams a = fp;
        a.values[k] += step;
        const Image img = render(unflatten_raw(a), bank, cfg);
        double v = 0.0;
        for (std::size_t i = 0; i < img.data.size(); ++i) v += img.data[i] * adjoint.data[i];
        return v;
    };
    const double f0 = f(0, 0.0);
    FdCheck out;
    out.components = fp.values.size();
    double dot = 0.0, nf = 0.0, ng = 0.0;
    for (std::size_t k = 0; k < fp.values.size(); ++k) {
        const double fwd = (f(k, h) - f0) / h, bwd = (f0 - f(k, -h)) / h;
        const double fd = 0.5 * (fwd + bwd);
        const double fd_half = (f(k, h / 2) - f(k, -h / 2)) / h;
        const double mag = std::max({std::abs(fd), std::abs(g[k]), 1e-6});
        if (std::abs(fwd - bwd) > 1e-2 * mag || std::abs(fd - fd_half) > 1e-3 * mag) continue;
        ++out.smooth;
        dot += fd * g[k];
        nf += fd * fd;
        ng += g[k] * g[k];
        out.max_rel_error = std::max(out.max_rel_error, std::abs(fd - g[k]) / mag);
    }
    out.cosine = (nf > 0.0 && ng > 0.0) ? dot / std::sqrt(nf * ng) : (nf == ng ? 1.0 : 0.0);
    return out;
}

}  // namespace testutil
