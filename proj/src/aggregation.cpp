#include "ddc/aggregation.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "ddc/errors.hpp"

namespace ddc {

std::size_t GlobalModel::contour_vertex_count() const noexcept {
    std::size_t n = 0;
    for (const auto& c : clusters) n += c.polygon.size();
    return n;
}

double GlobalModel::total_area() const noexcept {
    double a = 0.0;
    for (const auto& c : clusters) a += polygon_area(c.polygon);
    return a;
}

namespace {

bool edges_cross(const Polygon& a, const Polygon& b) {
    std::vector<Segment> segs = a.edges();
    const std::size_t split = segs.size();
    const auto eb = b.edges();
    segs.insert(segs.end(), eb.begin(), eb.end());
    for (const auto& hit : sweep_intersections(segs)) {
        if (hit.first < split && hit.second >= split) return true;
    }
    return false;
}

bool polygons_overlap(const Polygon& a, const Polygon& b) {
    if (!a.bbox().intersects(b.bbox(), kGeomTolerance)) return false;
    if (edges_cross(a, b)) return true;
    return point_in_polygon(a[0], b) || point_in_polygon(b[0], a);
}

struct ClosestPair {
    Point2 on_a;
    Point2 on_b;
    double dist = std::numeric_limits<double>::infinity();
};

Point2 project_onto_segment(Point2 p, Point2 s, Point2 e) {
    const Vector2 d = e - s;
    const double len2 = d.dot(d);
    if (len2 == 0.0) return s;
    const double t = std::clamp((p - s).dot(d) / len2, 0.0, 1.0);
    return s + Vector2{d.dx * t, d.dy * t};
}

// For non-crossing boundaries the closest pair always involves a vertex.
ClosestPair closest_pair(const Polygon& a, const Polygon& b) {
    ClosestPair best;
    auto scan = [&best](const Polygon& from, const Polygon& to, bool swapped) {
        for (const auto& p : from.vertices()) {
            for (std::size_t i = 0; i < to.size(); ++i) {
                const Point2 q = project_onto_segment(p, to[i], to[(i + 1) % to.size()]);
                const double d = distance(p, q);
                if (d < best.dist) best = swapped ? ClosestPair{q, p, d} : ClosestPair{p, q, d};
            }
        }
    };
    scan(a, b, false);
    scan(b, a, true);
    return best;
}

// Thin rectangle from `from` to `to`, reaching a little past both ends so it
// crosses both boundaries.
Polygon bridge(Point2 from, Point2 to) {
    const double d = distance(from, to);
    const Vector2 u{(to.x - from.x) / d, (to.y - from.y) / d};
    const double h = 0.05 * d;
    const Vector2 n{-u.dy * h, u.dx * h};
    const Vector2 back{-u.dx * h, -u.dy * h}, ahead{u.dx * h, u.dy * h};
    const Point2 s = from + back, e = to + ahead;
    return Polygon({s + Vector2{-n.dx, -n.dy}, e + Vector2{-n.dx, -n.dy}, e + n, s + n});
}

Polygon single(std::vector<Polygon> parts, const char* what) {
    if (parts.size() != 1) throw GeometryError(what);
    return std::move(parts.front());
}

Polygon canonical_start(const Polygon& p) {
    const auto& v = p.vertices();
    const auto first = std::min_element(v.begin(), v.end());
    std::vector<Point2> out(first, v.end());
    out.insert(out.end(), v.begin(), first);
    return Polygon(std::move(out));
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

bool contours_overlap(const Contour& a, const Contour& b) { return polygons_overlap(a.polygon, b.polygon); }

double boundary_gap(const Polygon& a, const Polygon& b) {
    if (edges_cross(a, b)) return 0.0;
    return closest_pair(a, b).dist;
}

double AggregateOptions::link_radius(double eps_a, double eps_b) const noexcept {
    double r = std::max(merge_radius, 0.0);
    if (eps_factor > 0.0 && eps_a > 0.0 && eps_b > 0.0) r = std::max(r, eps_factor * std::min(eps_a, eps_b));
    return r;
}

bool contours_linked(const Contour& a, const Contour& b, const AggregateOptions& options) {
    const double r = options.link_radius(a.eps, b.eps);
    if (r <= 0.0) return contours_overlap(a, b);
    if (!a.polygon.bbox().intersects(b.polygon.bbox(), r + kGeomTolerance)) return false;
    return contours_overlap(a, b) || boundary_gap(a.polygon, b.polygon) <= r;
}

bool contours_linked(const Contour& a, const Contour& b, double merge_radius) {
    return contours_linked(a, b, AggregateOptions{merge_radius});
}

std::vector<MergeGroup> find_merge_groups(std::span<const Contour> contours, double merge_radius) {
    return find_merge_groups(contours, AggregateOptions{merge_radius});
}

Contour merge_group(const MergeGroup& group, std::span<const Contour> contours, double merge_radius) {
    return merge_group(group, contours, AggregateOptions{merge_radius});
}

std::vector<MergeGroup> find_merge_groups(std::span<const Contour> contours, const AggregateOptions& options) {
    const std::size_t n = contours.size();
    // Upper bound on any pair's link radius, for the bbox prefilter.
    double max_eps = 0.0;
    for (const auto& c : contours) max_eps = std::max(max_eps, c.eps);
    const double pad = std::max({options.merge_radius, options.eps_factor * max_eps, 0.0}) + kGeomTolerance;
    std::vector<std::size_t> by_x(n);
    std::iota(by_x.begin(), by_x.end(), std::size_t{0});
    std::sort(by_x.begin(), by_x.end(), [&](std::size_t l, std::size_t r) {
        return contours[l].polygon.bbox().min_x < contours[r].polygon.bbox().min_x;
    });

    DisjointSets sets(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& bi = contours[by_x[i]].polygon.bbox();
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& bj = contours[by_x[j]].polygon.bbox();
            if (bj.min_x > bi.max_x + pad) break;
            if (!bi.intersects(bj, pad)) continue;
            if (sets.find(by_x[i]) == sets.find(by_x[j])) continue;
            if (contours_linked(contours[by_x[i]], contours[by_x[j]], options)) sets.unite(by_x[i], by_x[j]);
        }
    }

    std::vector<MergeGroup> groups;
    std::vector<std::size_t> slot(n, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = sets.find(i);  // roots are the smallest member
        if (slot[root] == std::numeric_limits<std::size_t>::max()) {
            slot[root] = groups.size();
            groups.emplace_back();
        }
        groups[slot[root]].members.push_back(i);
    }
    return groups;
}

Contour merge_group(const MergeGroup& group, std::span<const Contour> contours, const AggregateOptions& options) {
    if (group.members.empty()) throw ParameterError("merge_group: empty group");
    for (std::size_t m : group.members)
        if (m >= contours.size()) throw ParameterError("merge_group: member index out of range");

    const Contour& first = contours[group.members.front()];
    if (group.members.size() == 1) return first;

    Polygon acc = first.polygon;
    std::size_t count = first.point_count;
    double eps = first.eps;
    std::vector<std::size_t> pending(group.members.begin() + 1, group.members.end());
    while (!pending.empty()) {
        bool progress = false;
        for (auto it = pending.begin(); it != pending.end();) {
            const Contour& c = contours[*it];
            if (polygons_overlap(acc, c.polygon)) {
                acc = single(polygon_union(acc, c.polygon), "merge_group: overlapping contours gave disjoint union");
            } else if (const double r = options.link_radius(eps, c.eps);
                       r > 0.0 && acc.bbox().intersects(c.polygon.bbox(), r + kGeomTolerance)) {
                const auto cp = closest_pair(acc, c.polygon);
                if (cp.dist > r) {
                    ++it;
                    continue;
                }
                acc = single(polygon_union(acc, bridge(cp.on_a, cp.on_b)), "merge_group: bridge failed to attach");
                acc = single(polygon_union(acc, c.polygon), "merge_group: bridged contours gave disjoint union");
            } else {
                ++it;
                continue;
            }
            count += c.point_count;
            eps = std::max(eps, c.eps);
            it = pending.erase(it);
            progress = true;
        }
        if (!progress) throw GeometryError("merge_group: members do not form one connected region");
    }
    return Contour::make(canonical_start(acc), count, first.source_node, first.source_cluster, eps);
}

GlobalModel to_global(const LocalModel& model) {
    GlobalModel g;
    for (const auto& c : model.contours) {
        g.clusters.push_back(c);
        g.provenance.push_back({ContourOrigin{c.source_node, c.source_cluster}});
        g.total_point_count += c.point_count;
    }
    g.internal_reps = model.internal_reps;
    return g;
}

GlobalModel merge_models(std::span<const GlobalModel> models, const AggregateOptions& options) {
    struct Entry {
        Contour contour;
        std::vector<ContourOrigin> origins;
    };
    std::vector<Entry> entries;
    GlobalModel out;
    for (const auto& m : models) {
        if (m.provenance.size() != m.clusters.size()) throw ParameterError("merge_models: provenance mismatch");
        for (std::size_t i = 0; i < m.clusters.size(); ++i) entries.push_back({m.clusters[i], m.provenance[i]});
        out.internal_reps.insert(out.internal_reps.end(), m.internal_reps.begin(), m.internal_reps.end());
    }
    // Canonical order makes the result independent of arrival order.
    std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) { return l.origins < r.origins; });
    std::sort(out.internal_reps.begin(), out.internal_reps.end());

    // Merged regions are unions of linked members, so a second pass only
    // finds something when a bridge or union grew a region into a neighbour.
    for (;;) {
        std::vector<Contour> contours;
        for (const auto& e : entries) contours.push_back(e.contour);
        const auto groups = find_merge_groups(contours, options);
        if (groups.size() == entries.size()) break;
        std::vector<Entry> merged;
        for (const auto& g : groups) {
            Entry e{merge_group(g, contours, options), {}};
            for (std::size_t m : g.members)
                e.origins.insert(e.origins.end(), entries[m].origins.begin(), entries[m].origins.end());
            std::sort(e.origins.begin(), e.origins.end());
            e.contour.source_node = e.origins.front().node;
            e.contour.source_cluster = e.origins.front().cluster;
            merged.push_back(std::move(e));
        }
        entries = std::move(merged);
    }

    for (auto& e : entries) {
        out.total_point_count += e.contour.point_count;
        out.clusters.push_back(std::move(e.contour));
        out.provenance.push_back(std::move(e.origins));
    }
    return out;
}

GlobalModel aggregate(std::span<const LocalModel> models, const AggregateOptions& options) {
    if (models.empty()) throw ParameterError("aggregate: no models");
    std::vector<GlobalModel> globals;
    globals.reserve(models.size());
    for (const auto& m : models) globals.push_back(to_global(m));
    return merge_models(globals, options);
}

std::vector<Point2> regenerate(const Contour& contour, std::uint64_t seed) {
    constexpr std::size_t kProbeDraws = 1'000'000;
    std::vector<Point2> out;
    if (contour.point_count == 0) return out;
    out.reserve(contour.point_count);
    const BBox& box = contour.polygon.bbox();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(box.min_x, box.max_x), uy(box.min_y, box.max_y);
    std::size_t draws = 0;
    while (out.size() < contour.point_count) {
        const Point2 p{ux(rng), uy(rng)};
        ++draws;
        if (point_in_polygon(p, contour.polygon)) out.push_back(p);
        if (draws == kProbeDraws && out.size() * 100 < draws)
            throw DegenerateContourError("regenerate: rejection acceptance below 1%");
    }
    return out;
}

}  // namespace ddc
