#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace vscene {

constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    constexpr Vec2& operator-=(const Vec2& o) {
        x -= o.x;
        y -= o.y;
        return *this;
    }
    constexpr Vec2& operator*=(double s) {
        x *= s;
        y *= s;
        return *this;
    }
    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
constexpr double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

using Rgb = std::array<double, 3>;

/// Closed polyline; point 0 implicitly follows the last point.
using Contour = std::vector<Vec2>;

/// Shoelace signed area of a closed contour (positive when counter-clockwise).
double signed_area(const Contour& c);

/// True when no two non-adjacent edges of the closed contour intersect.
bool is_simple_polygon(const Contour& c);

/// Even-odd point-in-polygon test.
bool point_in_polygon(const Contour& poly, const Vec2& p);

}  // namespace vscene
