#include "vscene/triangulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vscene/errors.hpp"

namespace vscene {

namespace {

bool inside_or_on(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
    return orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0;
}

}  // namespace

std::vector<TriangleIndices> ear_clip(const Contour& polygon, std::size_t object_index, double min_area) {
    const std::size_t n = polygon.size();
    if (n < 3) throw TriangulationFailure(object_index, "polygon has fewer than 3 vertices");
    for (const Vec2& p : polygon) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw TriangulationFailure(object_index, "polygon has non-finite vertices");
        }
    }
    if (!is_simple_polygon(polygon)) throw TriangulationFailure(object_index, "polygon self-intersects");

    std::vector<std::size_t> ring(n);
    std::iota(ring.begin(), ring.end(), std::size_t{0});
    if (signed_area(polygon) < 0.0) std::reverse(ring.begin(), ring.end());

    std::vector<TriangleIndices> out;
    out.reserve(n - 2);
    const double min_area2 = 2.0 * min_area;

    auto is_ear = [&](std::size_t pos) {
        const std::size_t m = ring.size();
        const std::size_t ip = ring[(pos + m - 1) % m], ic = ring[pos], in = ring[(pos + 1) % m];
        const Vec2 &a = polygon[ip], &b = polygon[ic], &c = polygon[in];
        for (std::size_t q = 0; q < m; ++q) {
            const std::size_t iq = ring[q];
            if (iq == ip || iq == ic || iq == in) continue;
            const Vec2& p = polygon[iq];
            if (p == a || p == b || p == c) continue;
            // Only reflex (or flat) vertices can lie inside an ear of a simple polygon.
            const Vec2& pp = polygon[ring[(q + m - 1) % m]];
            const Vec2& pn = polygon[ring[(q + 1) % m]];
            if (orient(pp, p, pn) > 0.0) continue;
            if (inside_or_on(a, b, c, p)) return false;
        }
        return true;
    };

    std::size_t pos = 0;
    std::size_t stalled = 0;
    while (ring.size() > 3) {
        const std::size_t m = ring.size();
        pos %= m;
        const std::size_t ip = ring[(pos + m - 1) % m], ic = ring[pos], in = ring[(pos + 1) % m];
        const double area2 = orient(polygon[ip], polygon[ic], polygon[in]);
        if (std::abs(area2) <= min_area2) {
            ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(pos));
            stalled = 0;
            continue;
        }
        if (area2 > 0.0 && is_ear(pos)) {
            out.push_back({ip, ic, in});
            ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(pos));
            stalled = 0;
            continue;
        }
        ++pos;
        if (++stalled > m) throw TriangulationFailure(object_index, "no ear found");
    }
    if (orient(polygon[ring[0]], polygon[ring[1]], polygon[ring[2]]) > min_area2) {
        out.push_back({ring[0], ring[1], ring[2]});
    }
    return out;
}

}  // namespace vscene
