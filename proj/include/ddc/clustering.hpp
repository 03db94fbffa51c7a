#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ddc/geometry.hpp"

namespace ddc {

using NodeId = int;

// Points held by one node.
struct DatasetFragment {
    NodeId node_id = 0;
    std::vector<Point2> points;
};

struct DbscanParams {
    double eps = 0.0;
    std::size_t min_pts = 4;

    void validate() const;
};

struct KMeansParams {
    std::size_t k = 1;
    std::size_t max_iterations = 100;
    std::uint64_t seed = 0;

    void validate(std::size_t fragment_size) const;
};

inline constexpr int kNoise = -1;

// Per-point cluster id in [0, cluster_count) or kNoise.
struct ClusteringResult {
    std::vector<int> labels;
    int cluster_count = 0;

    std::size_t noise_count() const noexcept;
};

enum class NeighbourSearch {
    grid,             // O(n) memory, grid-indexed eps queries
    distance_matrix,  // materializes the condensed pairwise distance matrix first
};

// Density-based clustering. The neighbourhood of a point includes the point
// itself; clusters are grown in input order and a border point belongs to the
// first core point that reaches it.
ClusteringResult dbscan(const DatasetFragment& fragment, const DbscanParams& params,
                        NeighbourSearch search = NeighbourSearch::grid);

struct KMeansResult {
    ClusteringResult clustering;
    std::vector<Point2> centroids;
    // Sum of squared distances to the assigned centroid after each iteration.
    std::vector<double> objective_history;
    std::size_t iterations = 0;
};

// Lloyd iterations from k distinct seeded input points. Stops at an
// assignment fixpoint or after max_iterations. An empty cluster takes over the
// point farthest from its current centroid.
KMeansResult kmeans_detailed(const DatasetFragment& fragment, const KMeansParams& params);
ClusteringResult kmeans(const DatasetFragment& fragment, const KMeansParams& params);

// Renumbers clusters by the index of their first member.
ClusteringResult relabel_canonical(const ClusteringResult& result);

// Distance from each point to its k-th nearest other point, in input order.
std::vector<double> knn_distances(std::span<const Point2> points, std::size_t k);

double mean_knn_distance(std::span<const Point2> points, std::size_t k);
double median_knn_distance(std::span<const Point2> points, std::size_t k);

enum class EpsHeuristic { mean_knn, median_knn };

// eps = scale x (mean or median) 4-NN distance, min_pts = 4. The median
// variant ignores sparse background noise, which inflates the mean.
DbscanParams default_dbscan_params(std::span<const Point2> points, EpsHeuristic heuristic = EpsHeuristic::mean_knn,
                                   double scale = 2.0);

}  // namespace ddc
