#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "ddc/clustering.hpp"
#include "ddc/errors.hpp"
#include "ddc/geometry.hpp"

namespace ddc {

struct BoundaryConfig {
    double eps = 1.0;                           // neighbourhood radius
    double aperture = std::numbers::pi / 2.0;   // cone half-angle, radians
    std::size_t min_neighbours = 4;             // zero balance vector: interior iff |N| >= this
    // Contour vertices may be dropped while every cluster point stays within
    // simplify_factor * eps of the contour. Zero keeps every chained vertex.
    double simplify_factor = 1.0;
    // When no flagged point can deepen a contour edge, try ordinary cluster
    // points. Sparse fragments flag too few points along concave rims.
    bool carve_fallback = true;
    // Carving keeps every cluster point inside the contour or within
    // coverage_factor * eps of it. Smaller values hug the points more closely
    // at the cost of more vertices.
    double coverage_factor = 1.0;

    void validate() const;
};

class DegenerateContourError : public GeometryError {
public:
    using GeometryError::GeometryError;
};

// Boundary polygon of one local cluster plus the metadata needed to merge it.
struct Contour {
    Polygon polygon;
    std::size_t point_count = 0;
    double density = 0.0;  // point_count / area
    NodeId source_node = 0;
    int source_cluster = 0;
    // Neighbourhood radius the contour was built with; zero when unknown.
    // A merged contour keeps the coarsest radius among its members, so it
    // links to anything one of its members would link to.
    double eps = 0.0;

    static Contour make(Polygon polygon, std::size_t point_count, NodeId node, int cluster, double eps = 0.0);
};

struct LocalModel {
    NodeId node_id = 0;
    std::vector<Contour> contours;
    std::vector<Point2> internal_reps;

    std::size_t contour_vertex_count() const noexcept;
    std::size_t representative_count() const noexcept { return contour_vertex_count() + internal_reps.size(); }
};

// Sum of (p - q) over the neighbourhood; points toward the sparse side.
Vector2 displacement_vector(Point2 p, std::span<const Point2> neighbours) noexcept;

// Unit vector along v, zero when |v| <= 1e-12.
Vector2 balance_vector(Vector2 v) noexcept;

// True when the cone of half-angle config.aperture around b holds no
// neighbour other than p itself. A zero balance vector marks p interior when
// the neighbourhood has at least config.min_neighbours points.
bool is_boundary(Point2 p, std::span<const Point2> neighbours, Vector2 b, const BoundaryConfig& config);

// Indices (into cluster) of the boundary points, in input order.
std::vector<std::size_t> extract_boundary_indices(std::span<const Point2> cluster, const BoundaryConfig& config);
std::vector<Point2> extract_boundary(std::span<const Point2> cluster, const BoundaryConfig& config);

enum class ContourMethod { carved, convex_hull, bounding_triangle };

struct ContourBuild {
    Polygon polygon;
    ContourMethod method;
    std::size_t raw_vertices;  // before simplification
};

// Starts from the convex hull of the boundary and cluster points, which covers
// everything, then carves it inward through boundary points: the longest edge
// is repeatedly split at the nearest boundary point inside the ring as long as
// the ring stays simple and every point of `cluster` stays inside or within
// eps. ContourMethod::convex_hull means nothing could be carved. Throws
// DegenerateContourError with fewer than three distinct points or when all
// points are collinear.
ContourBuild chain_contour_detailed(std::span<const Point2> boundary_points, std::span<const Point2> cluster,
                                    const BoundaryConfig& config);
Polygon chain_contour(std::span<const Point2> boundary_points, const BoundaryConfig& config);

// Drops vertices whose removal keeps the ring simple and every point of
// `cluster` inside or within `tolerance` of the ring.
Polygon simplify_contour(const Polygon& ring, std::span<const Point2> cluster, double tolerance);

// Triangle enclosing the bounding box of the points grown by eps.
Polygon bounding_triangle(std::span<const Point2> points, double eps);

// Contour of one cluster: boundary extraction, chaining, simplification,
// bounding-triangle fallback for degenerate clusters.
ContourBuild cluster_contour(std::span<const Point2> cluster, const BoundaryConfig& config);

// One contour per local cluster plus a seeded sample of interior points
// (non-boundary, non-noise) at sample_rate.
LocalModel build_local_model(const DatasetFragment& fragment, const ClusteringResult& result,
                             const BoundaryConfig& config, double sample_rate, std::uint64_t seed);

// (contour vertices + internal representatives) / |fragment|.
double reduction_ratio(const LocalModel& model, const DatasetFragment& fragment);

}  // namespace ddc
