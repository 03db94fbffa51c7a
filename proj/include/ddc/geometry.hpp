#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace ddc {

// Incidence tolerance in dataset units.
inline constexpr double kGeomTolerance = 1e-9;

struct Vector2 {
    double dx = 0.0;
    double dy = 0.0;

    double norm() const noexcept;
    double dot(const Vector2& o) const noexcept { return dx * o.dx + dy * o.dy; }
    double cross(const Vector2& o) const noexcept { return dx * o.dy - dy * o.dx; }

    friend Vector2 operator+(Vector2 a, Vector2 b) noexcept { return {a.dx + b.dx, a.dy + b.dy}; }
    friend Vector2 operator-(Vector2 a, Vector2 b) noexcept { return {a.dx - b.dx, a.dy - b.dy}; }
    friend Vector2 operator*(double s, Vector2 v) noexcept { return {s * v.dx, s * v.dy}; }
    friend bool operator==(const Vector2&, const Vector2&) = default;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Vector2 operator-(Point2 a, Point2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator+(Point2 p, Vector2 v) noexcept { return {p.x + v.dx, p.y + v.dy}; }
    friend bool operator==(const Point2&, const Point2&) = default;
    friend auto operator<=>(const Point2&, const Point2&) = default;
};

bool is_finite(Point2 p) noexcept;

double distance(Point2 p, Point2 q) noexcept;
double squared_distance(Point2 p, Point2 q) noexcept;

// Unit vector along v, or the zero vector when |v| <= 1e-12.
Vector2 normalized(Vector2 v) noexcept;

// Distance from p to the closed segment [a, b].
double distance_to_segment(Point2 p, Point2 a, Point2 b) noexcept;

struct BBox {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    static BBox of(std::span<const Point2> pts);
    bool intersects(const BBox& o, double pad = 0.0) const noexcept;
    bool contains(Point2 p, double pad = 0.0) const noexcept;
    double width() const noexcept { return max_x - min_x; }
    double height() const noexcept { return max_y - min_y; }
};

class Segment {
public:
    // Throws GeometryError when a == b.
    Segment(Point2 a, Point2 b);

    Point2 a() const noexcept { return a_; }
    Point2 b() const noexcept { return b_; }
    double length() const noexcept { return distance(a_, b_); }

private:
    Point2 a_;
    Point2 b_;
};

// Ring of vertices, implicitly closed, stored counter-clockwise. The
// constructor drops consecutive duplicates (and a repeated closing vertex),
// reverses clockwise input and rejects rings with fewer than three vertices
// or zero area. Simplicity is checked separately by is_simple().
class Polygon {
public:
    explicit Polygon(std::vector<Point2> vertices);

    const std::vector<Point2>& vertices() const noexcept { return vertices_; }
    std::size_t size() const noexcept { return vertices_.size(); }
    const Point2& operator[](std::size_t i) const noexcept { return vertices_[i]; }
    Segment edge(std::size_t i) const { return {vertices_[i], vertices_[(i + 1) % vertices_.size()]}; }
    std::vector<Segment> edges() const;
    const BBox& bbox() const noexcept { return bbox_; }

private:
    std::vector<Point2> vertices_;
    BBox bbox_;
};

double signed_area(std::span<const Point2> ring) noexcept;
double polygon_area(const Polygon& poly) noexcept;

// Points inside or on the boundary (within kGeomTolerance) count as inside.
bool point_in_polygon(Point2 p, const Polygon& poly) noexcept;
double distance_to_boundary(Point2 p, const Polygon& poly) noexcept;

// Non-adjacent edges may only meet at a repeated vertex (a pinch); any
// crossing, T-touch or collinear overlap makes the ring non-simple.
bool is_simple(const Polygon& poly);

// Intersection point of two closed segments. Collinear overlaps are reported
// at the midpoint of the shared interval.
std::optional<Point2> segments_intersect(const Segment& s1, const Segment& s2) noexcept;

struct SegmentIntersection {
    std::size_t first;   // smaller index
    std::size_t second;  // larger index
    Point2 point;
};

// All intersecting pairs, each reported once, ordered by (first, second).
// Sweep over x with an active list; candidate pairs are confirmed with
// segments_intersect, so the result matches an all-pairs scan exactly.
std::vector<SegmentIntersection> sweep_intersections(std::span<const Segment> segments);

// Counter-clockwise convex hull without collinear points (Andrew's monotone chain).
std::vector<Point2> convex_hull(std::vector<Point2> points);

// Union of two simple polygons by overlay: edges are split at their mutual
// intersections and the outer face of the resulting arrangement is traced.
// Holes are not represented. Disjoint inputs come back unchanged; a polygon
// containing the other is returned alone.
std::vector<Polygon> polygon_union(const Polygon& a, const Polygon& b);

// Uniform grid over the indexed points with cells of size cell_size. The
// multiset of points is kept; indices refer to the input order.
class GridIndex {
public:
    GridIndex(std::span<const Point2> points, double cell_size);

    double cell_size() const noexcept { return cell_size_; }
    std::size_t size() const noexcept { return points_.size(); }
    const std::vector<Point2>& points() const noexcept { return points_; }

    // Indices of points q with distance(p, q) <= eps, in bucket order.
    std::vector<std::size_t> query_indices(Point2 p, double eps) const;

    template <typename Fn>
    void for_each_within(Point2 p, double eps, Fn&& fn) const {
        const auto reach = static_cast<std::int64_t>(std::ceil(eps / cell_size_));
        const auto cx = cell_of(p.x);
        const auto cy = cell_of(p.y);
        for (std::int64_t ix = cx - reach; ix <= cx + reach; ++ix) {
            for (std::int64_t iy = cy - reach; iy <= cy + reach; ++iy) {
                auto it = buckets_.find(key(ix, iy));
                if (it == buckets_.end()) continue;
                for (std::size_t k = it->second.first; k < it->second.second; ++k) {
                    const std::size_t idx = order_[k];
                    if (distance(p, points_[idx]) <= eps) fn(idx);
                }
            }
        }
    }

private:
    std::int64_t cell_of(double v) const noexcept;
    static std::uint64_t key(std::int64_t ix, std::int64_t iy) noexcept;

    double cell_size_;
    std::vector<Point2> points_;
    std::vector<std::size_t> order_;  // point indices grouped by bucket
    std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> buckets_;
};

// Throws ParameterError when eps <= 0.
GridIndex build_index(std::span<const Point2> points, double eps);

// Points within eps of p sorted by (x, y, insertion rank).
std::vector<Point2> neighbourhood(const GridIndex& index, Point2 p, double eps);

}  // namespace ddc
