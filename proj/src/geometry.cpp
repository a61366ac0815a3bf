#include "vscene/geometry.hpp"

#include <algorithm>

namespace vscene {

double signed_area(const Contour& c) {
    double acc = 0.0;
    const std::size_t n = c.size();
    for (std::size_t i = 0; i < n; ++i) {
        acc += cross(c[i], c[(i + 1) % n]);
    }
    return 0.5 * acc;
}

namespace {

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
    const int o1 = sign(orient(p1, p2, q1));
    const int o2 = sign(orient(p1, p2, q2));
    const int o3 = sign(orient(q1, q2, p1));
    const int o4 = sign(orient(q1, q2, p2));
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

}  // namespace

bool is_simple_polygon(const Contour& c) {
    const std::size_t n = c.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = c[i];
        const Vec2& b = c[(i + 1) % n];
        // Bounding box of edge i for a cheap reject.
        const double ax0 = std::min(a.x, b.x), ax1 = std::max(a.x, b.x);
        const double ay0 = std::min(a.y, b.y), ay1 = std::max(a.y, b.y);
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
            const Vec2& p = c[j];
            const Vec2& q = c[(j + 1) % n];
            if (std::max(p.x, q.x) < ax0 || std::min(p.x, q.x) > ax1 || std::max(p.y, q.y) < ay0 ||
                std::min(p.y, q.y) > ay1) {
                continue;
            }
            if (segments_intersect(a, b, p, q)) return false;
        }
    }
    return true;
}

bool point_in_polygon(const Contour& poly, const Vec2& p) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

}  // namespace vscene
