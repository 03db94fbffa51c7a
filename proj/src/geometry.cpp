#include "ddc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "ddc/errors.hpp"

namespace ddc {

double Vector2::norm() const noexcept { return std::sqrt(dx * dx + dy * dy); }

bool is_finite(Point2 p) noexcept { return std::isfinite(p.x) && std::isfinite(p.y); }

double squared_distance(Point2 p, Point2 q) noexcept {
    const double dx = p.x - q.x;
    const double dy = p.y - q.y;
    return dx * dx + dy * dy;
}

double distance(Point2 p, Point2 q) noexcept { return std::sqrt(squared_distance(p, q)); }

Vector2 normalized(Vector2 v) noexcept {
    const double n = v.norm();
    if (n <= 1e-12) return {};
    return {v.dx / n, v.dy / n};
}

double distance_to_segment(Point2 p, Point2 a, Point2 b) noexcept {
    const Vector2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 == 0.0) return distance(p, a);
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return distance(p, a + t * ab);
}

BBox BBox::of(std::span<const Point2> pts) {
    BBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& p : pts) {
        box.min_x = std::min(box.min_x, p.x);
        box.min_y = std::min(box.min_y, p.y);
        box.max_x = std::max(box.max_x, p.x);
        box.max_y = std::max(box.max_y, p.y);
    }
    return box;
}

bool BBox::intersects(const BBox& o, double pad) const noexcept {
    return min_x <= o.max_x + pad && o.min_x <= max_x + pad && min_y <= o.max_y + pad &&
           o.min_y <= max_y + pad;
}

bool BBox::contains(Point2 p, double pad) const noexcept {
    return p.x >= min_x - pad && p.x <= max_x + pad && p.y >= min_y - pad && p.y <= max_y + pad;
}

Segment::Segment(Point2 a, Point2 b) : a_(a), b_(b) {
    if (a == b) throw GeometryError("degenerate segment");
}

// ---------------------------------------------------------------------------
// Polygon

double signed_area(std::span<const Point2> ring) noexcept {
    const std::size_t n = ring.size();
    if (n < 3) return 0.0;
    // Shift to the first vertex to limit cancellation for far-off rings.
    const Point2 o = ring[0];
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        acc += (ring[i] - o).cross(ring[i + 1] - o);
    }
    return 0.5 * acc;
}

Polygon::Polygon(std::vector<Point2> vertices) {
    std::vector<Point2> ring;
    ring.reserve(vertices.size());
    for (const auto& p : vertices) {
        if (!is_finite(p)) throw GeometryError("polygon vertex is not finite");
        if (ring.empty() || !(ring.back() == p)) ring.push_back(p);
    }
    while (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
    if (ring.size() < 3) throw GeometryError("polygon needs at least 3 distinct vertices");
    const double area = signed_area(ring);
    if (!(std::abs(area) > 0.0)) throw GeometryError("polygon has zero area");
    if (area < 0.0) std::reverse(ring.begin(), ring.end());
    vertices_ = std::move(ring);
    bbox_ = BBox::of(vertices_);
}

std::vector<Segment> Polygon::edges() const {
    std::vector<Segment> out;
    out.reserve(vertices_.size());
    for (std::size_t i = 0; i < vertices_.size(); ++i) out.push_back(edge(i));
    return out;
}

double polygon_area(const Polygon& poly) noexcept { return std::abs(signed_area(poly.vertices())); }

double distance_to_boundary(Point2 p, const Polygon& poly) noexcept {
    double best = std::numeric_limits<double>::infinity();
    const auto& v = poly.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
        best = std::min(best, distance_to_segment(p, v[i], v[(i + 1) % v.size()]));
    }
    return best;
}

bool point_in_polygon(Point2 p, const Polygon& poly) noexcept {
    if (!poly.bbox().contains(p, kGeomTolerance)) return false;
    const auto& v = poly.vertices();
    const std::size_t n = v.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2 a = v[j];
        const Point2 b = v[i];
        if (distance_to_segment(p, a, b) <= kGeomTolerance) return true;
        if ((b.y > p.y) != (a.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

// ---------------------------------------------------------------------------
// Segment intersection

namespace {

// Sign of the turn a -> b -> c; zero when c lies within tolerance of line ab.
int side(Point2 a, Point2 b, Point2 c) noexcept {
    const Vector2 ab = b - a;
    const double cr = ab.cross(c - a);
    const double len = ab.norm();
    if (std::abs(cr) <= kGeomTolerance * len) return 0;
    return cr > 0 ? 1 : -1;
}

double project(Point2 a, Vector2 dir, double len2, Point2 p) noexcept {
    return (p - a).dot(dir) / len2;
}

std::optional<Point2> collinear_overlap(const Segment& s1, const Segment& s2) noexcept {
    const Point2 a = s1.a();
    const Vector2 r = s1.b() - a;
    const double len2 = r.dot(r);
    const double len = std::sqrt(len2);
    const double ta = project(a, r, len2, s2.a());
    const double tb = project(a, r, len2, s2.b());
    const double lo = std::max(0.0, std::min(ta, tb));
    const double hi = std::min(1.0, std::max(ta, tb));
    if ((hi - lo) * len < -kGeomTolerance) return std::nullopt;
    const double mid = std::clamp(0.5 * (lo + hi), 0.0, 1.0);
    return a + mid * r;
}

}  // namespace

std::optional<Point2> segments_intersect(const Segment& s1, const Segment& s2) noexcept {
    const Point2 a1 = s1.a(), b1 = s1.b(), a2 = s2.a(), b2 = s2.b();
    const int o1 = side(a1, b1, a2);
    const int o2 = side(a1, b1, b2);
    const int o3 = side(a2, b2, a1);
    const int o4 = side(a2, b2, b1);

    if ((o1 == 0 && o2 == 0) || (o3 == 0 && o4 == 0)) {
        // Both on one supporting line: overlap test along the longer segment.
        return s1.length() >= s2.length() ? collinear_overlap(s1, s2) : collinear_overlap(s2, s1);
    }
    if (o1 * o2 > 0 || o3 * o4 > 0) return std::nullopt;

    // Touching configurations: the touching endpoint must lie on the other segment.
    auto on = [](Point2 p, Point2 a, Point2 b) { return distance_to_segment(p, a, b) <= kGeomTolerance; };
    if (o1 == 0) return on(a2, a1, b1) ? std::optional<Point2>(a2) : std::nullopt;
    if (o2 == 0) return on(b2, a1, b1) ? std::optional<Point2>(b2) : std::nullopt;
    if (o3 == 0) return on(a1, a2, b2) ? std::optional<Point2>(a1) : std::nullopt;
    if (o4 == 0) return on(b1, a2, b2) ? std::optional<Point2>(b1) : std::nullopt;

    const Vector2 r = b1 - a1;
    const Vector2 s = b2 - a2;
    const double denom = r.cross(s);
    const double t = std::clamp((a2 - a1).cross(s) / denom, 0.0, 1.0);
    return a1 + t * r;
}

std::vector<SegmentIntersection> sweep_intersections(std::span<const Segment> segments) {
    const std::size_t n = segments.size();
    std::vector<BBox> boxes(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 pts[2] = {segments[i].a(), segments[i].b()};
        boxes[i] = BBox::of(pts);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        if (boxes[l].min_x != boxes[r].min_x) return boxes[l].min_x < boxes[r].min_x;
        return l < r;
    });

    std::vector<SegmentIntersection> out;
    std::vector<std::size_t> active;
    for (const std::size_t cur : order) {
        const double sweep_x = boxes[cur].min_x;
        std::erase_if(active, [&](std::size_t k) { return boxes[k].max_x < sweep_x - kGeomTolerance; });
        for (const std::size_t other : active) {
            if (!boxes[cur].intersects(boxes[other], kGeomTolerance)) continue;
            const std::size_t lo = std::min(cur, other);
            const std::size_t hi = std::max(cur, other);
            if (auto hit = segments_intersect(segments[lo], segments[hi])) {
                out.push_back({lo, hi, *hit});
            }
        }
        active.push_back(cur);
    }
    std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) {
        return std::tie(l.first, l.second) < std::tie(r.first, r.second);
    });
    return out;
}

bool is_simple(const Polygon& poly) {
    const auto edges = poly.edges();
    const std::size_t n = edges.size();
    auto near = [](Point2 p, Point2 q) { return distance(p, q) <= kGeomTolerance; };
    for (const auto& hit : sweep_intersections(edges)) {
        const std::size_t i = hit.first;
        const std::size_t j = hit.second;
        const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
        if (adjacent) {
            const Point2 shared = (j == i + 1) ? edges[i].b() : edges[j].b();
            if (!near(hit.point, shared)) return false;
            continue;
        }
        const bool at_i = near(hit.point, edges[i].a()) || near(hit.point, edges[i].b());
        const bool at_j = near(hit.point, edges[j].a()) || near(hit.point, edges[j].b());
        if (!(at_i && at_j)) return false;
        // A pinch shares a vertex; reject if the two edges overlap along a line.
        const Vector2 di = edges[i].b() - edges[i].a();
        const Vector2 dj = edges[j].b() - edges[j].a();
        if (std::abs(di.cross(dj)) <= kGeomTolerance * di.norm() * dj.norm()) {
            if (collinear_overlap(edges[i], edges[j]) &&
                side(edges[i].a(), edges[i].b(), edges[j].a()) == 0 &&
                side(edges[i].a(), edges[i].b(), edges[j].b()) == 0) {
                const Vector2 r = edges[i].b() - edges[i].a();
                const double len2 = r.dot(r);
                const double ta = project(edges[i].a(), r, len2, edges[j].a());
                const double tb = project(edges[i].a(), r, len2, edges[j].b());
                const double overlap = std::min(1.0, std::max(ta, tb)) - std::max(0.0, std::min(ta, tb));
                if (overlap * std::sqrt(len2) > kGeomTolerance) return false;
            }
        }
    }
    return true;
}

std::vector<Point2> convex_hull(std::vector<Point2> points) {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 3) return points;
    std::vector<Point2> hull(2 * points.size());
    std::size_t k = 0;
    for (const auto& p : points) {
        while (k >= 2 && (hull[k - 1] - hull[k - 2]).cross(p - hull[k - 2]) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = points.size() - 1, t = k + 1; i-- > 0;) {
        const Point2 p = points[i];
        while (k >= t && (hull[k - 1] - hull[k - 2]).cross(p - hull[k - 2]) <= 0) --k;
        hull[k++] = p;
    }
    hull.resize(k - 1);
    return hull;
}

// ---------------------------------------------------------------------------
// Union by overlay

namespace {

// Vertex table that merges coordinates closer than the geometric tolerance.
class VertexTable {
public:
    std::size_t intern(Point2 p) {
        const auto cx = cell(p.x);
        const auto cy = cell(p.y);
        for (std::int64_t ix = cx - 1; ix <= cx + 1; ++ix) {
            for (std::int64_t iy = cy - 1; iy <= cy + 1; ++iy) {
                auto it = cells_.find({ix, iy});
                if (it == cells_.end()) continue;
                for (std::size_t id : it->second) {
                    if (distance(points_[id], p) <= kGeomTolerance) return id;
                }
            }
        }
        points_.push_back(p);
        cells_[{cx, cy}].push_back(points_.size() - 1);
        return points_.size() - 1;
    }

    const std::vector<Point2>& points() const noexcept { return points_; }

private:
    static constexpr double kCell = 1e-6;
    static std::int64_t cell(double v) { return static_cast<std::int64_t>(std::floor(v / kCell)); }

    std::vector<Point2> points_;
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> cells_;
};

double ccw_angle_from(Vector2 from, Vector2 to) {
    double a = std::atan2(to.dy, to.dx) - std::atan2(from.dy, from.dx);
    while (a <= 0.0) a += 2.0 * std::numbers::pi;
    while (a > 2.0 * std::numbers::pi) a -= 2.0 * std::numbers::pi;
    return a;
}

// Drop vertices where the ring continues straight on.
std::vector<Point2> drop_collinear(std::vector<Point2> ring) {
    bool changed = true;
    while (changed && ring.size() > 3) {
        changed = false;
        for (std::size_t i = 0; i < ring.size() && ring.size() > 3; ++i) {
            const Point2 prev = ring[(i + ring.size() - 1) % ring.size()];
            const Point2 cur = ring[i];
            const Point2 next = ring[(i + 1) % ring.size()];
            if (side(prev, next, cur) == 0 && (cur - prev).dot(next - cur) > 0) {
                ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                --i;
            }
        }
    }
    return ring;
}

Polygon trace_outer_face(const std::vector<Point2>& verts,
                         const std::vector<std::vector<std::size_t>>& adj, std::size_t edge_count) {
    std::size_t start = 0;
    for (std::size_t v = 1; v < verts.size(); ++v) {
        if (adj[v].empty()) continue;
        if (adj[start].empty() || verts[v].y < verts[start].y ||
            (verts[v].y == verts[start].y && verts[v].x < verts[start].x)) {
            start = v;
        }
    }

    auto next_of = [&](std::size_t at, Vector2 back, std::optional<std::size_t> came_from) {
        std::size_t best = adj[at].front();
        double best_angle = std::numeric_limits<double>::infinity();
        for (std::size_t nb : adj[at]) {
            if (came_from && nb == *came_from && adj[at].size() > 1) continue;
            const double ang = ccw_angle_from(back, verts[nb] - verts[at]);
            if (ang < best_angle) {
                best_angle = ang;
                best = nb;
            }
        }
        return best;
    };

    const std::size_t first = next_of(start, Vector2{0.0, -1.0}, std::nullopt);
    std::vector<Point2> ring{verts[start]};
    std::size_t prev = start;
    std::size_t cur = first;
    const std::size_t guard = 2 * edge_count + 4;
    for (std::size_t steps = 0;; ++steps) {
        if (steps > guard) throw GeometryError("outer face trace did not close");
        const std::size_t nxt = next_of(cur, verts[prev] - verts[cur], prev);
        if (cur == start && nxt == first) break;
        ring.push_back(verts[cur]);
        prev = cur;
        cur = nxt;
    }
    return Polygon(drop_collinear(std::move(ring)));
}

}  // namespace

std::vector<Polygon> polygon_union(const Polygon& a, const Polygon& b) {
    if (!is_simple(a) || !is_simple(b)) throw GeometryError("polygon_union: non-simple input");

    std::vector<Segment> segs = a.edges();
    const std::size_t na = segs.size();
    for (const auto& e : b.edges()) segs.push_back(e);

    // Split points per edge, expressed as points lying on the edge.
    std::vector<std::vector<Point2>> splits(segs.size());
    bool crossed = false;
    if (a.bbox().intersects(b.bbox(), kGeomTolerance)) {
        auto on = [](Point2 p, const Segment& s) { return distance_to_segment(p, s.a(), s.b()) <= kGeomTolerance; };
        for (const auto& hit : sweep_intersections(segs)) {
            const bool from_a = hit.first < na;
            const bool from_b = hit.second >= na;
            if (!(from_a && from_b)) continue;
            crossed = true;
            const Segment& s = segs[hit.first];
            const Segment& t = segs[hit.second];
            for (const Point2 p : {hit.point, s.a(), s.b(), t.a(), t.b()}) {
                if (on(p, s) && on(p, t)) {
                    splits[hit.first].push_back(p);
                    splits[hit.second].push_back(p);
                }
            }
        }
    }

    if (!crossed) {
        if (point_in_polygon(b[0], a)) return {a};
        if (point_in_polygon(a[0], b)) return {b};
        return {a, b};
    }

    VertexTable table;
    std::set<std::pair<std::size_t, std::size_t>> edge_set;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const Point2 s0 = segs[i].a();
        const Vector2 dir = segs[i].b() - s0;
        const double len2 = dir.dot(dir);
        std::vector<std::pair<double, Point2>> pts{{0.0, s0}, {1.0, segs[i].b()}};
        for (const auto& p : splits[i]) pts.emplace_back(project(s0, dir, len2, p), p);
        std::sort(pts.begin(), pts.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
        std::size_t prev_id = table.intern(pts.front().second);
        for (std::size_t k = 1; k < pts.size(); ++k) {
            const std::size_t id = table.intern(pts[k].second);
            if (id != prev_id) edge_set.insert({std::min(id, prev_id), std::max(id, prev_id)});
            prev_id = id;
        }
    }

    const auto& verts = table.points();
    std::vector<std::vector<std::size_t>> adj(verts.size());
    for (const auto& [u, v] : edge_set) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    return {trace_outer_face(verts, adj, edge_set.size())};
}

// ---------------------------------------------------------------------------
// Grid index

GridIndex::GridIndex(std::span<const Point2> points, double cell_size)
    : cell_size_(cell_size), points_(points.begin(), points.end()) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw ParameterError("grid cell size must be > 0");
    std::vector<std::uint64_t> keys(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        keys[i] = key(cell_of(points_[i].x), cell_of(points_[i].y));
    }
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t l, std::size_t r) { return keys[l] < keys[r]; });
    for (std::size_t k = 0; k < order_.size();) {
        std::size_t end = k;
        while (end < order_.size() && keys[order_[end]] == keys[order_[k]]) ++end;
        buckets_.emplace(keys[order_[k]], std::make_pair(k, end));
        k = end;
    }
}

std::int64_t GridIndex::cell_of(double v) const noexcept {
    return static_cast<std::int64_t>(std::floor(v / cell_size_));
}

std::uint64_t GridIndex::key(std::int64_t ix, std::int64_t iy) noexcept {
    return (static_cast<std::uint64_t>(ix) << 32) ^ (static_cast<std::uint64_t>(iy) & 0xffffffffULL);
}

std::vector<std::size_t> GridIndex::query_indices(Point2 p, double eps) const {
    std::vector<std::size_t> out;
    for_each_within(p, eps, [&](std::size_t idx) { out.push_back(idx); });
    return out;
}

GridIndex build_index(std::span<const Point2> points, double eps) {
    if (!(eps > 0.0)) throw ParameterError("build_index: eps must be > 0");
    return GridIndex(points, eps);
}

std::vector<Point2> neighbourhood(const GridIndex& index, Point2 p, double eps) {
    auto idx = index.query_indices(p, eps);
    const auto& pts = index.points();
    std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) {
        if (pts[l] != pts[r]) return pts[l] < pts[r];
        return l < r;
    });
    std::vector<Point2> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(pts[i]);
    return out;
}

}  // namespace ddc
