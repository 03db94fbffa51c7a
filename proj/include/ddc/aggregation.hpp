#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ddc/boundary.hpp"

namespace ddc {

// Where a piece of a global cluster came from.
struct ContourOrigin {
    NodeId node = 0;
    int cluster = 0;
    auto operator<=>(const ContourOrigin&) const = default;
};

// Connected component of the overlap graph; indices into the contour list,
// ascending.
struct MergeGroup {
    std::vector<std::size_t> members;
};

struct GlobalModel {
    std::vector<Contour> clusters;
    std::vector<std::vector<ContourOrigin>> provenance;  // parallel to clusters, each sorted
    std::vector<Point2> internal_reps;
    std::size_t total_point_count = 0;

    std::size_t contour_vertex_count() const noexcept;
    std::size_t representative_count() const noexcept { return contour_vertex_count() + internal_reps.size(); }
    double total_area() const noexcept;
};

struct AggregateOptions {
    // Contours whose boundaries come within the link radius are merged as if
    // they overlapped, joined by a thin bridge. The radius for a pair is the
    // larger of merge_radius and eps_factor times the smaller contour eps.
    // Both zero merges on overlap only.
    double merge_radius = 0.0;
    double eps_factor = 0.0;

    double link_radius(double eps_a, double eps_b) const noexcept;
};

// Edge crossing or touching, or one polygon inside the other.
bool contours_overlap(const Contour& a, const Contour& b);

// Smallest distance between the two boundaries (zero when they cross).
double boundary_gap(const Polygon& a, const Polygon& b);

// Overlap, or a boundary gap of at most the pair's link radius.
bool contours_linked(const Contour& a, const Contour& b, const AggregateOptions& options);
bool contours_linked(const Contour& a, const Contour& b, double merge_radius);

// Connected components of the link graph, ordered by smallest member.
std::vector<MergeGroup> find_merge_groups(std::span<const Contour> contours, const AggregateOptions& options);
std::vector<MergeGroup> find_merge_groups(std::span<const Contour> contours, double merge_radius = 0.0);

// Folds polygon_union over the members in ascending index order. Throws
// GeometryError when the members do not form one connected region.
Contour merge_group(const MergeGroup& group, std::span<const Contour> contours, const AggregateOptions& options);
Contour merge_group(const MergeGroup& group, std::span<const Contour> contours, double merge_radius = 0.0);

GlobalModel to_global(const LocalModel& model);

// Merges already-aggregated models, e.g. what a leader receives from its
// group. The result does not depend on the order of `models`.
GlobalModel merge_models(std::span<const GlobalModel> models, const AggregateOptions& options = {});

GlobalModel aggregate(std::span<const LocalModel> models, const AggregateOptions& options = {});

// contour.point_count points drawn uniformly inside the polygon by rejection
// sampling against its bounding box.
std::vector<Point2> regenerate(const Contour& contour, std::uint64_t seed);

}  // namespace ddc
