#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "vscene/geometry.hpp"

namespace vscene {

constexpr std::size_t kDefaultHarmonics = 16;
constexpr std::size_t kDefaultContourPoints = 64;
constexpr double kDefaultSymmetryThreshold = 0.05;

/// Elliptic Fourier Descriptor: one (A_n, B_n, C_n, D_n) quadruple per harmonic n = 1..N.
struct EfdShape {
    std::vector<std::array<double, 4>> coeffs;

    EfdShape() = default;
    explicit EfdShape(std::size_t harmonics) : coeffs(harmonics, {0.0, 0.0, 0.0, 0.0}) {}
    explicit EfdShape(std::vector<std::array<double, 4>> c) : coeffs(std::move(c)) {}

    std::size_t harmonics() const noexcept { return coeffs.size(); }

    friend bool operator==(const EfdShape&, const EfdShape&) = default;
};

/// Fixed set of normalized prototype shapes, soft-indexed by an object's shape weights.
struct PrototypeBank {
    std::vector<EfdShape> shapes;

    std::size_t size() const noexcept { return shapes.size(); }
    const EfdShape& operator[](std::size_t i) const { return shapes[i]; }
};

/// How efd_from_contour assigns the curve parameter t_p to the input points.
enum class EfdParametrization {
    /// t_p = p*T/K and the linear-interpolation attenuation sinc^2(n*pi/K) is divided out.
    /// Exact inverse of contour_from_efd for band-limited contours.
    kSampled,
    /// t_p = cumulative polygon arc length (Kuhl-Giardina on the raw polyline).
    kArcLength,
};

/// Forward transform. Exact consecutive duplicates are dropped first.
/// Throws DegenerateContour when fewer than 3 distinct points remain or the perimeter is zero.
EfdShape efd_from_contour(const Contour& contour, std::size_t n_harmonics = kDefaultHarmonics,
                          EfdParametrization mode = EfdParametrization::kSampled);

/// Inverse transform evaluated at t_p = p*T/K, p = 1..K.
Contour contour_from_efd(const EfdShape& shape, std::size_t k_points = kDefaultContourPoints);

/// Basis values for the inverse transform: cos/sin(2*pi*n*p/K) laid out [p][n].
struct EfdBasis {
    std::size_t k_points = 0;
    std::size_t harmonics = 0;
    std::vector<double> cos_table;
    std::vector<double> sin_table;

    EfdBasis(std::size_t harmonics, std::size_t k_points);
    double c(std::size_t p, std::size_t n) const { return cos_table[p * harmonics + n]; }
    double s(std::size_t p, std::size_t n) const { return sin_table[p * harmonics + n]; }
};

Contour contour_from_efd(const EfdShape& shape, const EfdBasis& basis);

/// Pointwise simplex-weighted sum of the prototype contours.
/// Throws WeightSimplexViolation for negative weights, wrong length, or sum != 1 (tol 1e-6).
Contour blend_shapes(const PrototypeBank& bank, std::span<const double> weights,
                     std::size_t k_points = kDefaultContourPoints);

/// Coefficient-space blend; contour_from_efd(blend_coefficients(...)) equals blend_shapes.
EfdShape blend_coefficients(const PrototypeBank& bank, std::span<const double> weights);

/// Scales the shape so its K-point reconstruction has max(|x|, |y|) = 1.
/// The inverse transform has no DC term, so the reconstruction is already centered on its
/// sample mean. Throws DegenerateContour for zero extent.
EfdShape normalize_shape(const EfdShape& shape, std::size_t k_points = kDefaultContourPoints);

/// Rotates the shape about the origin by `angle` radians.
EfdShape rotate_shape(const EfdShape& shape, double angle);

EfdShape scale_shape(const EfdShape& shape, double factor);

/// Complex-exponential coefficient of e^{i k t} for k in [-N, N] \ {0}; index k + N.
std::vector<std::complex<double>> complex_harmonics(const EfdShape& shape);

/// Order of rotational symmetry: GCD of |k - k_ref| over significant complex harmonics,
/// where k_ref is the dominant first harmonic (+1, or -1 for clockwise contours).
int symmetry_order(const EfdShape& shape, double threshold = kDefaultSymmetryThreshold);

/// Throws DegenerateContour / ValidationError when the bank breaks its invariants
/// (empty, inconsistent harmonics, non-finite, or a non-simple 64-point reconstruction).
void validate_bank(const PrototypeBank& bank);

void to_json(nlohmann::json& j, const EfdShape& s);
void from_json(const nlohmann::json& j, EfdShape& s);
void to_json(nlohmann::json& j, const PrototypeBank& b);
void from_json(const nlohmann::json& j, PrototypeBank& b);

}  // namespace vscene
