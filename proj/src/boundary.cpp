#include "ddc/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <queue>
#include <tuple>
#include <random>

namespace ddc {

void BoundaryConfig::validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ParameterError("boundary: eps must be > 0");
    if (!(aperture > 0.0 && aperture < std::numbers::pi)) throw ParameterError("boundary: aperture must lie in (0, pi)");
    if (min_neighbours < 1) throw ParameterError("boundary: min_neighbours must be >= 1");
    if (!(simplify_factor >= 0.0)) throw ParameterError("boundary: simplify_factor must be >= 0");
    if (!(coverage_factor > 0.0)) throw ParameterError("boundary: coverage_factor must be > 0");
}

Contour Contour::make(Polygon polygon, std::size_t point_count, NodeId node, int cluster, double eps) {
    const double area = polygon_area(polygon);
    return Contour{std::move(polygon), point_count, static_cast<double>(point_count) / area, node, cluster, eps};
}

std::size_t LocalModel::contour_vertex_count() const noexcept {
    std::size_t n = 0;
    for (const auto& c : contours) n += c.polygon.size();
    return n;
}

Vector2 displacement_vector(Point2 p, std::span<const Point2> neighbours) noexcept {
    Vector2 v{};
    for (const auto& q : neighbours) v = v + (p - q);
    return v;
}

Vector2 balance_vector(Vector2 v) noexcept { return normalized(v); }

bool is_boundary(Point2 p, std::span<const Point2> neighbours, Vector2 b, const BoundaryConfig& config) {
    if (b.dx == 0.0 && b.dy == 0.0) return neighbours.size() < config.min_neighbours;
    const double limit = std::cos(config.aperture);
    for (const auto& q : neighbours) {
        if (q == p) continue;
        if (normalized(q - p).dot(b) >= limit) return false;  // a neighbour lies in the cone
    }
    return true;
}

std::vector<std::size_t> extract_boundary_indices(std::span<const Point2> cluster, const BoundaryConfig& config) {
    config.validate();
    std::vector<std::size_t> out;
    if (cluster.empty()) return out;
    const auto index = build_index(cluster, config.eps);
    std::vector<Point2> nb;
    for (std::size_t i = 0; i < cluster.size(); ++i) {
        nb.clear();
        index.for_each_within(cluster[i], config.eps, [&](std::size_t j) { nb.push_back(cluster[j]); });
        const Vector2 b = balance_vector(displacement_vector(cluster[i], nb));
        if (is_boundary(cluster[i], nb, b, config)) out.push_back(i);
    }
    return out;
}

std::vector<Point2> extract_boundary(std::span<const Point2> cluster, const BoundaryConfig& config) {
    std::vector<Point2> out;
    for (std::size_t i : extract_boundary_indices(cluster, config)) out.push_back(cluster[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Ring helpers on raw vertex lists

namespace {

bool ring_contains(const std::vector<Point2>& ring, Point2 p) {
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2 a = ring[j], b = ring[i];
        if ((b.y > p.y) != (a.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

double ring_distance(const std::vector<Point2>& ring, Point2 p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ring.size(); ++i)
        best = std::min(best, distance_to_segment(p, ring[i], ring[(i + 1) % ring.size()]));
    return best;
}

bool covered(const std::vector<Point2>& ring, Point2 p, double tol) {
    return ring_contains(ring, p) || ring_distance(ring, p) <= tol;
}

bool valid_ring(const std::vector<Point2>& ring) {
    if (ring.size() < 3) return false;
    try {
        const Polygon poly(ring);
        return poly.size() == ring.size() && is_simple(poly);
    } catch (const GeometryError&) {
        return false;
    }
}

bool in_closed_triangle(Point2 q, Point2 a, Point2 b, Point2 c) {
    const double d1 = (b - a).cross(q - a), d2 = (c - b).cross(q - b), d3 = (a - c).cross(q - c);
    const bool neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    const bool pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    return !(neg && pos);
}

// Pushes a counter-clockwise ring inward through boundary points, longest edge
// first. An edge (a, b) is replaced by (a, c), (c, b) when c lies strictly
// inside the ring, sits closer to (a, b) than to the neighbouring edges, the
// ring stays simple and every cluster point that loses coverage of (a, b) is
// still within tol of the new edges.
class Carver {
public:
    Carver(std::vector<Point2> hull, const std::vector<Point2>& boundary, std::span<const Point2> cluster, double tol,
           double cover, bool fallback)
        : verts_(std::move(hull)), boundary_(boundary), cluster_(cluster), tol_(tol), cover_(cover), fallback_(fallback),
          boundary_index_(boundary_, tol), cluster_index_(cluster_, tol), used_(boundary_.size(), false) {
        const std::size_t n = verts_.size();
        next_.resize(n);
        prev_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            next_[i] = (i + 1) % n;
            prev_[i] = (i + n - 1) % n;
        }
        for (std::size_t j = 0; j < boundary_.size(); ++j)
            used_[j] = std::binary_search(sorted_hull().begin(), sorted_hull().end(), boundary_[j]);
    }

    std::size_t run() {
        for (std::size_t i = 0; i < verts_.size(); ++i) push_edge(i);
        std::size_t digs = 0;
        while (!queue_.empty()) {
            const auto [len, a, b] = queue_.top();
            queue_.pop();
            if (next_[a] != b) continue;  // stale: edge was already split
            if (try_dig(a)) ++digs;
        }
        return digs;
    }

    std::vector<Point2> ring() const {
        std::vector<Point2> out;
        std::size_t k = 0;
        do {
            out.push_back(verts_[k]);
            k = next_[k];
        } while (k != 0);
        return out;
    }

private:
    const std::vector<Point2>& sorted_hull() {
        if (sorted_hull_.empty()) {
            sorted_hull_ = verts_;
            std::sort(sorted_hull_.begin(), sorted_hull_.end());
        }
        return sorted_hull_;
    }

    void push_edge(std::size_t a) {
        const double len = distance(verts_[a], verts_[next_[a]]);
        if (len > tol_) queue_.push({len, a, next_[a]});
    }

    bool try_dig(std::size_t a) {
        if (dig_with(a, boundary_, boundary_index_, &used_)) return true;
        return fallback_ && dig_with(a, cluster_, cluster_index_, nullptr);
    }

    // One split attempt using candidates from `pts`. With `used` unset the
    // ring-distance check alone keeps existing vertices from being reused.
    bool dig_with(std::size_t a, std::span<const Point2> pts, const GridIndex& index, std::vector<bool>* used) {
        const std::size_t b = next_[a];
        const Point2 pa = verts_[a], pb = verts_[b];
        const Point2 pp = verts_[prev_[a]], pn = verts_[next_[b]];
        const double len = distance(pa, pb);
        const Point2 mid{(pa.x + pb.x) / 2.0, (pa.y + pb.y) / 2.0};

        std::vector<std::pair<double, std::size_t>> cands;
        index.for_each_within(mid, len, [&](std::size_t j) {
            if (used && (*used)[j]) return;
            const Point2 c = pts[j];
            if ((pb - pa).cross(c - pa) <= 0.0) return;
            const double d = distance_to_segment(c, pa, pb);
            if (d >= distance_to_segment(c, pp, pa) || d >= distance_to_segment(c, pb, pn)) return;
            cands.emplace_back(d, j);
        });
        std::sort(cands.begin(), cands.end());
        if (cands.size() > kMaxCandidates) cands.resize(kMaxCandidates);

        std::vector<Point2> current;
        for (const auto& [d, j] : cands) {
            const Point2 c = pts[j];
            if (!keeps_coverage(pa, c, pb)) continue;
            if (current.empty()) current = ring_from(b);
            // current starts at b and ends at a; the candidate closes it.
            if (!ring_contains(current, c) || ring_distance(current, c) <= kGeomTolerance) continue;
            auto trial = current;
            trial.push_back(c);
            if (!valid_ring(trial)) continue;

            const std::size_t id = verts_.size();
            verts_.push_back(c);
            next_.push_back(b);
            prev_.push_back(a);
            next_[a] = id;
            prev_[b] = id;
            if (used) (*used)[j] = true;
            push_edge(a);
            push_edge(id);
            return true;
        }
        return false;
    }

    std::vector<Point2> ring_from(std::size_t from) const {
        std::vector<Point2> out;
        std::size_t k = from;
        do {
            out.push_back(verts_[k]);
            k = next_[k];
        } while (k != from);
        return out;
    }

    bool keeps_coverage(Point2 a, Point2 c, Point2 b) const {
        const Point2 centre{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
        const double cov = cover_;
        const double reach = std::max({distance(centre, a), distance(centre, b), distance(centre, c)}) + tol_;
        bool ok = true;
        cluster_index_.for_each_within(centre, reach, [&](std::size_t j) {
            if (!ok) return;
            const Point2 q = cluster_[j];
            const bool exposed = in_closed_triangle(q, a, c, b) ||
                                 ((b - a).cross(q - a) < 0.0 && distance_to_segment(q, a, b) <= cov);
            if (!exposed) return;
            if (distance_to_segment(q, a, c) > cov && distance_to_segment(q, c, b) > cov) ok = false;
        });
        return ok;
    }

    static constexpr std::size_t kMaxCandidates = 16;

    struct Edge {
        double len;
        std::size_t a, b;
        bool operator<(const Edge& o) const {
            if (len != o.len) return len < o.len;
            return std::tie(o.a, o.b) < std::tie(a, b);  // min id first among equal lengths
        }
    };

    std::vector<Point2> verts_;
    const std::vector<Point2>& boundary_;
    std::span<const Point2> cluster_;
    double tol_;
    double cover_;
    bool fallback_;
    GridIndex boundary_index_;
    GridIndex cluster_index_;
    std::vector<bool> used_;
    std::vector<std::size_t> next_, prev_;
    std::vector<Point2> sorted_hull_;
    std::priority_queue<Edge> queue_;
};

std::vector<Point2> distinct_points(std::span<const Point2> pts) {
    std::vector<Point2> out(pts.begin(), pts.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

ContourBuild chain_contour_detailed(std::span<const Point2> boundary_points, std::span<const Point2> cluster,
                                    const BoundaryConfig& config) {
    config.validate();
    const auto pts = distinct_points(boundary_points);
    if (pts.size() < 3) throw DegenerateContourError("contour needs at least 3 distinct boundary points");

    std::vector<Point2> all = pts;
    all.insert(all.end(), cluster.begin(), cluster.end());
    auto hull = convex_hull(std::move(all));
    if (hull.size() < 3 || !(signed_area(hull) > 0.0)) throw DegenerateContourError("points are collinear");

    Carver carver(std::move(hull), pts, cluster, config.eps, config.coverage_factor * config.eps, config.carve_fallback);
    const std::size_t digs = carver.run();
    auto ring = carver.ring();
    const std::size_t raw = ring.size();
    try {
        return {Polygon(std::move(ring)), digs > 0 ? ContourMethod::carved : ContourMethod::convex_hull, raw};
    } catch (const GeometryError& e) {
        throw DegenerateContourError(e.what());
    }
}

Polygon chain_contour(std::span<const Point2> boundary_points, const BoundaryConfig& config) {
    return chain_contour_detailed(boundary_points, boundary_points, config).polygon;
}

Polygon simplify_contour(const Polygon& poly, std::span<const Point2> cluster, double tolerance) {
    if (!(tolerance > 0.0) || poly.size() <= 3) return poly;
    const auto& v = poly.vertices();
    const std::size_t n = v.size();
    std::vector<std::size_t> next(n), prev(n);
    for (std::size_t i = 0; i < n; ++i) {
        next[i] = (i + 1) % n;
        prev[i] = (i + n - 1) % n;
    }
    std::vector<bool> alive(n, true);
    std::size_t alive_count = n;
    double area = polygon_area(poly);

    std::unique_ptr<GridIndex> index;
    if (!cluster.empty()) index = std::make_unique<GridIndex>(cluster, std::max(tolerance, 1e-9));

    auto current_ring = [&](std::size_t from) {
        std::vector<Point2> ring;
        std::size_t k = from;
        do {
            ring.push_back(v[k]);
            k = next[k];
        } while (k != from);
        return ring;
    };

    auto try_remove = [&](std::size_t i) {
        const std::size_t a = prev[i], b = next[i];
        const Point2 pa = v[a], pv = v[i], pb = v[b];
        if (distance_to_segment(pv, pa, pb) > tolerance) return false;
        const double tri = 0.5 * (pv - pa).cross(pb - pa);
        const double new_area = area - tri;
        if (!(new_area > 0.0)) return false;

        // No fold-back at a or b.
        auto folds = [&](Point2 o, Point2 p, Point2 q) {
            const Vector2 d1 = p - o, d2 = q - p;
            return std::abs(d1.cross(d2)) <= kGeomTolerance * d1.norm() * d2.norm() && d1.dot(d2) < 0.0;
        };
        if (folds(v[prev[a]], pa, pb) || folds(pa, pb, v[next[b]])) return false;

        const Segment chord(pa, pb);
        for (std::size_t k = next[b]; k != prev[a]; k = next[k]) {
            if (segments_intersect(chord, Segment(v[k], v[next[k]]))) return false;
        }
        // The edges touching a and b from outside the triangle only share endpoints,
        // but a vertex of the rest of the ring can still sit on the chord.
        for (std::size_t k = next[b]; k != a; k = next[k]) {
            if (distance_to_segment(v[k], pa, pb) <= kGeomTolerance) return false;
        }

        if (index) {
            std::vector<Point2> ring;
            bool built = false;
            const Point2 c{(pa.x + pv.x + pb.x) / 3.0, (pa.y + pv.y + pb.y) / 3.0};
            const double reach = std::max({distance(c, pa), distance(c, pv), distance(c, pb)}) + tolerance;
            bool ok = true;
            index->for_each_within(c, reach, [&](std::size_t j) {
                if (!ok) return;
                const Point2 p = cluster[j];
                if (distance_to_segment(p, pa, pb) <= tolerance) return;
                if (!built) {
                    ring.clear();
                    for (std::size_t k = b;; k = next[k]) {
                        ring.push_back(v[k]);
                        if (k == a) break;
                    }
                    built = true;
                }
                if (!covered(ring, p, tolerance)) ok = false;
            });
            if (!ok) return false;
        }

        alive[i] = false;
        next[a] = b;
        prev[b] = a;
        --alive_count;
        area = new_area;
        return true;
    };

    bool changed = true;
    while (changed && alive_count > 3) {
        changed = false;
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            order.emplace_back(distance_to_segment(v[i], v[prev[i]], v[next[i]]), i);
        }
        std::sort(order.begin(), order.end());
        std::vector<bool> touched(n, false);
        for (const auto& [dev, i] : order) {
            if (dev > tolerance || alive_count <= 3) break;
            if (!alive[i] || touched[i]) continue;
            const std::size_t a = prev[i], b = next[i];
            if (try_remove(i)) {
                touched[a] = touched[b] = true;
                changed = true;
            }
        }
    }

    std::size_t first = 0;
    while (!alive[first]) ++first;
    return Polygon(current_ring(first));
}

Polygon bounding_triangle(std::span<const Point2> points, double eps) {
    const BBox box = BBox::of(points);
    const double x0 = box.min_x - eps, y0 = box.min_y - eps;
    const double w = box.width() + 2.0 * eps, h = box.height() + 2.0 * eps;
    return Polygon({{x0, y0}, {x0 + 2.0 * w, y0}, {x0, y0 + 2.0 * h}});
}

namespace {

ContourBuild contour_from_boundary(std::span<const Point2> cluster, std::span<const Point2> boundary,
                                   const BoundaryConfig& config) {
    try {
        auto built = chain_contour_detailed(boundary, cluster, config);
        if (config.simplify_factor > 0.0) {
            built.polygon = simplify_contour(built.polygon, cluster, config.simplify_factor * config.eps);
        }
        return built;
    } catch (const DegenerateContourError&) {
        return {bounding_triangle(cluster, config.eps), ContourMethod::bounding_triangle, 3};
    }
}

}  // namespace

ContourBuild cluster_contour(std::span<const Point2> cluster, const BoundaryConfig& config) {
    if (cluster.empty()) throw ParameterError("cluster_contour: empty cluster");
    const auto boundary = extract_boundary(cluster, config);
    return contour_from_boundary(cluster, boundary, config);
}

LocalModel build_local_model(const DatasetFragment& fragment, const ClusteringResult& result,
                             const BoundaryConfig& config, double sample_rate, std::uint64_t seed) {
    config.validate();
    if (!(sample_rate >= 0.0 && sample_rate <= 1.0)) throw ParameterError("sample_rate must lie in [0, 1]");
    if (result.labels.size() != fragment.points.size()) throw ParameterError("labels do not match fragment");

    LocalModel model;
    model.node_id = fragment.node_id;
    std::vector<std::vector<Point2>> members(static_cast<std::size_t>(std::max(result.cluster_count, 0)));
    for (std::size_t i = 0; i < fragment.points.size(); ++i) {
        const int l = result.labels[i];
        if (l != kNoise) members[static_cast<std::size_t>(l)].push_back(fragment.points[i]);
    }

    std::mt19937_64 rng(seed);
    for (std::size_t c = 0; c < members.size(); ++c) {
        const auto& pts = members[c];
        if (pts.empty()) continue;
        const auto boundary_idx = extract_boundary_indices(pts, config);
        std::vector<Point2> boundary;
        std::vector<bool> is_b(pts.size(), false);
        for (std::size_t i : boundary_idx) {
            boundary.push_back(pts[i]);
            is_b[i] = true;
        }
        auto built = contour_from_boundary(pts, boundary, config);
        model.contours.push_back(Contour::make(std::move(built.polygon), pts.size(), fragment.node_id, static_cast<int>(c),
                                                      config.eps));

        if (sample_rate > 0.0) {
            std::vector<Point2> interior;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (!is_b[i]) interior.push_back(pts[i]);
            const auto want = static_cast<std::size_t>(std::floor(sample_rate * static_cast<double>(interior.size())));
            for (std::size_t k = 0; k < want; ++k) {
                std::uniform_int_distribution<std::size_t> pick(k, interior.size() - 1);
                std::swap(interior[k], interior[pick(rng)]);
                model.internal_reps.push_back(interior[k]);
            }
        }
    }
    return model;
}

double reduction_ratio(const LocalModel& model, const DatasetFragment& fragment) {
    if (fragment.points.empty()) throw ParameterError("reduction_ratio: empty fragment");
    return static_cast<double>(model.representative_count()) / static_cast<double>(fragment.points.size());
}

}  // namespace ddc
