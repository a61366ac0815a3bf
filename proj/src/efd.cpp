#include "vscene/efd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vscene/errors.hpp"

namespace vscene {

namespace {

Contour drop_consecutive_duplicates(const Contour& in) {
    Contour out;
    out.reserve(in.size());
    for (const Vec2& p : in) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw DegenerateContour("contour has non-finite coordinates");
        }
        if (out.empty() || !(out.back() == p)) out.push_back(p);
    }
    while (out.size() > 1 && out.back() == out.front()) out.pop_back();
    return out;
}

}  // namespace

EfdShape efd_from_contour(const Contour& contour, std::size_t n_harmonics, EfdParametrization mode) {
    if (n_harmonics == 0) throw DegenerateContour("n_harmonics must be positive");
    const Contour pts = drop_consecutive_duplicates(contour);
    const std::size_t k = pts.size();
    if (k < 3) throw DegenerateContour("contour needs at least 3 distinct points");

    // Point i of the input sits at p = i + 1; p = 0 is the closing point (the last input point).
    std::vector<double> dx(k), dy(k), dt(k), t(k + 1, 0.0);
    for (std::size_t p = 1; p <= k; ++p) {
        const Vec2& cur = pts[p - 1];
        const Vec2& prev = pts[(p + k - 2) % k];
        dx[p - 1] = cur.x - prev.x;
        dy[p - 1] = cur.y - prev.y;
        dt[p - 1] = std::hypot(dx[p - 1], dy[p - 1]);
    }
    const double perimeter = std::accumulate(dt.begin(), dt.end(), 0.0);
    if (!(perimeter > 0.0)) throw DegenerateContour("contour perimeter is zero");

    double period = perimeter;
    if (mode == EfdParametrization::kSampled) {
        std::fill(dt.begin(), dt.end(), 1.0);
        period = static_cast<double>(k);
    }
    for (std::size_t p = 1; p <= k; ++p) t[p] = t[p - 1] + dt[p - 1];

    EfdShape out(n_harmonics);
    for (std::size_t n = 1; n <= n_harmonics; ++n) {
        const double nn = static_cast<double>(n);
        const double omega = 2.0 * nn * kPi / period;
        double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
        double cos_prev = std::cos(omega * t[0]);
        double sin_prev = std::sin(omega * t[0]);
        for (std::size_t p = 1; p <= k; ++p) {
            const double cos_cur = std::cos(omega * t[p]);
            const double sin_cur = std::sin(omega * t[p]);
            const double rx = dx[p - 1] / dt[p - 1];
            const double ry = dy[p - 1] / dt[p - 1];
            a += rx * (cos_cur - cos_prev);
            b += rx * (sin_cur - sin_prev);
            c += ry * (cos_cur - cos_prev);
            d += ry * (sin_cur - sin_prev);
            cos_prev = cos_cur;
            sin_prev = sin_cur;
        }
        double scale = period / (2.0 * nn * nn * kPi * kPi);
        if (mode == EfdParametrization::kSampled) {
            // Divide out the triangle-kernel gain of the piecewise-linear interpolant.
            const double x = nn * kPi / static_cast<double>(k);
            const double sinc = std::sin(x) / x;
            const double gain = sinc * sinc;
            if (gain < 1e-12) {
                scale = 0.0;  // n is a multiple of K: the sums vanish identically
            } else {
                scale /= gain;
            }
        }
        out.coeffs[n - 1] = {a * scale, b * scale, c * scale, d * scale};
    }
    return out;
}

EfdBasis::EfdBasis(std::size_t n_harmonics, std::size_t k)
    : k_points(k), harmonics(n_harmonics), cos_table(k * n_harmonics), sin_table(k * n_harmonics) {
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t n = 0; n < n_harmonics; ++n) {
            // Reduce the integer phase first so large n*p keep full precision.
            const std::size_t phase = ((n + 1) * (p + 1)) % k;
            const double angle = 2.0 * kPi * static_cast<double>(phase) / static_cast<double>(k);
            cos_table[p * n_harmonics + n] = std::cos(angle);
            sin_table[p * n_harmonics + n] = std::sin(angle);
        }
    }
}

Contour contour_from_efd(const EfdShape& shape, const EfdBasis& basis) {
    if (basis.harmonics != shape.harmonics()) {
        throw DegenerateContour("basis harmonics do not match shape");
    }
    Contour out(basis.k_points);
    for (std::size_t p = 0; p < basis.k_points; ++p) {
        double x = 0.0, y = 0.0;
        for (std::size_t n = 0; n < basis.harmonics; ++n) {
            const auto& q = shape.coeffs[n];
            const double cs = basis.c(p, n);
            const double sn = basis.s(p, n);
            x += q[0] * cs + q[1] * sn;
            y += q[2] * cs + q[3] * sn;
        }
        out[p] = {x, y};
    }
    return out;
}

Contour contour_from_efd(const EfdShape& shape, std::size_t k_points) {
    if (k_points == 0) throw DegenerateContour("k_points must be positive");
    return contour_from_efd(shape, EfdBasis(shape.harmonics(), k_points));
}

namespace {

void check_simplex(const PrototypeBank& bank, std::span<const double> weights) {
    if (weights.size() != bank.size()) {
        throw WeightSimplexViolation("expected " + std::to_string(bank.size()) + " weights, got " +
                                     std::to_string(weights.size()));
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw WeightSimplexViolation("shape weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw WeightSimplexViolation("shape weights sum to " + std::to_string(sum));
    }
}

}  // namespace

Contour blend_shapes(const PrototypeBank& bank, std::span<const double> weights, std::size_t k_points) {
    check_simplex(bank, weights);
    Contour out(k_points, Vec2{});
    for (std::size_t j = 0; j < bank.size(); ++j) {
        if (weights[j] == 0.0) continue;
        const Contour c = contour_from_efd(bank[j], k_points);
        for (std::size_t p = 0; p < k_points; ++p) out[p] += weights[j] * c[p];
    }
    return out;
}

EfdShape blend_coefficients(const PrototypeBank& bank, std::span<const double> weights) {
    check_simplex(bank, weights);
    EfdShape out(bank[0].harmonics());
    for (std::size_t j = 0; j < bank.size(); ++j) {
        if (bank[j].harmonics() != out.harmonics()) {
            throw ValidationError("prototype bank mixes harmonic counts");
        }
        for (std::size_t n = 0; n < out.harmonics(); ++n) {
            for (int q = 0; q < 4; ++q) out.coeffs[n][q] += weights[j] * bank[j].coeffs[n][q];
        }
    }
    return out;
}

EfdShape scale_shape(const EfdShape& shape, double factor) {
    EfdShape out = shape;
    for (auto& q : out.coeffs) {
        for (double& v : q) v *= factor;
    }
    return out;
}

EfdShape normalize_shape(const EfdShape& shape, std::size_t k_points) {
    const Contour c = contour_from_efd(shape, k_points);
    double extent = 0.0;
    for (const Vec2& p : c) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
    if (!(extent > 0.0) || !std::isfinite(extent)) {
        throw DegenerateContour("shape has zero extent");
    }
    return scale_shape(shape, 1.0 / extent);
}

EfdShape rotate_shape(const EfdShape& shape, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    EfdShape out = shape;
    for (auto& q : out.coeffs) {
        const auto [a, b, cc, d] = q;
        q = {c * a - s * cc, c * b - s * d, s * a + c * cc, s * b + c * d};
    }
    return out;
}

std::vector<std::complex<double>> complex_harmonics(const EfdShape& shape) {
    const std::size_t n_h = shape.harmonics();
    std::vector<std::complex<double>> z(2 * n_h + 1, {0.0, 0.0});
    for (std::size_t n = 1; n <= n_h; ++n) {
        const auto [a, b, c, d] = shape.coeffs[n - 1];
        z[n_h + n] = {(a + d) / 2.0, (c - b) / 2.0};
        z[n_h - n] = {(a - d) / 2.0, (c + b) / 2.0};
    }
    return z;
}

int symmetry_order(const EfdShape& shape, double threshold) {
    const auto z = complex_harmonics(shape);
    const int n_h = static_cast<int>(shape.harmonics());
    if (n_h == 0) return 1;
    const double pos = std::abs(z[n_h + 1]);
    const double neg = std::abs(z[n_h - 1]);
    const int ref = neg > pos ? -1 : 1;
    const double ref_mag = std::max(pos, neg);
    if (!(ref_mag > 0.0)) return 1;
    int g = 0;
    for (int k = -n_h; k <= n_h; ++k) {
        if (k == 0 || k == ref) continue;
        if (std::abs(z[n_h + k]) > threshold * ref_mag) g = std::gcd(g, std::abs(k - ref));
    }
    return g == 0 ? 1 : g;
}

void validate_bank(const PrototypeBank& bank) {
    if (bank.size() == 0) throw ValidationError("prototype bank is empty");
    const std::size_t n_h = bank[0].harmonics();
    for (std::size_t j = 0; j < bank.size(); ++j) {
        const EfdShape& s = bank[j];
        if (s.harmonics() == 0 || s.harmonics() != n_h) {
            throw ValidationError("prototype " + std::to_string(j) + " has inconsistent harmonics");
        }
        for (const auto& q : s.coeffs) {
            for (double v : q) {
                if (!std::isfinite(v)) throw ValidationError("prototype " + std::to_string(j) + " is not finite");
            }
        }
        if (!is_simple_polygon(contour_from_efd(s, kDefaultContourPoints))) {
            throw DegenerateContour("prototype " + std::to_string(j) + " is not a simple polygon");
        }
    }
}

void to_json(nlohmann::json& j, const EfdShape& s) {
    j = nlohmann::json{{"n", s.harmonics()}, {"coeffs", s.coeffs}};
}

void from_json(const nlohmann::json& j, EfdShape& s) {
    const auto n = j.at("n").get<std::size_t>();
    s.coeffs = j.at("coeffs").get<std::vector<std::array<double, 4>>>();
    if (s.coeffs.size() != n) throw ParseError("EFD 'n' does not match the coefficient count");
}

void to_json(nlohmann::json& j, const PrototypeBank& b) {
    j = nlohmann::json::array();
    for (const auto& s : b.shapes) j.push_back(s);
}

void from_json(const nlohmann::json& j, PrototypeBank& b) {
    if (!j.is_array()) throw ParseError("prototype bank must be a JSON array");
    b.shapes.clear();
    for (const auto& e : j) b.shapes.push_back(e.get<EfdShape>());
}

}  // namespace vscene
