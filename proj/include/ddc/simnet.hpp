#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ddc/aggregation.hpp"
#include "ddc/boundary.hpp"
#include "ddc/clustering.hpp"

namespace ddc {

struct NodeDescriptor {
    NodeId id = 0;
    double capacity = 1.0;
};

// levels[0] is the root group; levels.back() holds the leaf groups. Each
// group's elected leader is the member that moves up a level.
struct TreeTopology {
    std::size_t degree = 2;
    std::vector<std::vector<std::vector<NodeId>>> levels;
    std::vector<std::vector<NodeId>> leaders;  // parallel to levels: one per group
    NodeId root = 0;

    std::size_t height() const noexcept { return levels.size(); }
};

// Highest capacity, ties to the smallest id.
NodeId elect_leader(std::span<const NodeDescriptor> group);

// Groups nodes of ascending id into runs of at most `degree`; with a shuffle
// seed the order inside each level is a seeded permutation instead.
TreeTopology build_tree(std::span<const NodeDescriptor> nodes, std::size_t degree,
                        std::optional<std::uint64_t> shuffle_seed = std::nullopt);

enum class PartitionStrategy { random, spatial_stripes, skewed };

std::optional<PartitionStrategy> parse_partition_strategy(std::string_view text);
std::string_view to_string(PartitionStrategy strategy);

// Dataset indices per node, each list ascending. Throws ParameterError when
// n_nodes is zero or exceeds the dataset size.
std::vector<std::vector<std::size_t>> partition_indices(std::span<const Point2> dataset, std::size_t n_nodes,
                                                        PartitionStrategy strategy, std::uint64_t seed);
std::vector<DatasetFragment> partition(std::span<const Point2> dataset, std::size_t n_nodes, PartitionStrategy strategy,
                                       std::uint64_t seed);

enum class Algorithm { dbscan, kmeans };

struct NodeConfig {
    NodeId id = 0;
    double capacity = 1.0;
    Algorithm algorithm = Algorithm::dbscan;
    std::optional<DbscanParams> dbscan;  // unset: heuristic from the fragment
    EpsHeuristic eps_heuristic = EpsHeuristic::mean_knn;
    double eps_scale = 2.0;
    std::size_t heuristic_min_pts = 4;
    KMeansParams kmeans;
};

struct RunConfig {
    std::vector<NodeConfig> nodes;
    std::size_t degree = 3;
    PartitionStrategy partition = PartitionStrategy::random;
    std::uint64_t partition_seed = 0;
    std::optional<std::uint64_t> group_shuffle_seed;
    // eps <= 0 means "use the node's DBSCAN eps".
    BoundaryConfig boundary{0.0};
    double sample_rate = 0.0;
    AggregateOptions aggregation;
    NeighbourSearch search = NeighbourSearch::grid;
    std::uint64_t seed = 0;  // internal representative sampling

    void validate() const;
};

// Builds a config of n DBSCAN (or K-Means) nodes with equal capacity.
RunConfig uniform_config(std::size_t n_nodes, Algorithm algorithm, std::size_t degree = 3);

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);

struct Message {
    NodeId from = 0;
    NodeId to = 0;
    std::size_t level = 0;
    std::size_t contour_count = 0;
    std::size_t representative_count = 0;
    std::size_t byte_size = 0;  // 16 per representative plus a 64-byte header
};

inline constexpr std::size_t kMessageHeaderBytes = 64;
inline constexpr std::size_t kBytesPerPoint = 16;

struct RunTrace {
    std::vector<Message> messages;
    std::vector<double> node_ms;   // phase one, per node in config order
    double phase_one_ms = 0.0;     // max over nodes
    std::vector<double> level_ms;  // phase two, leaf level first, max over groups
    double wall_ms = 0.0;
    std::size_t total_input_points = 0;
    std::size_t local_representatives = 0;  // sum over phase-one local models
    std::size_t total_representatives_sent = 0;
    std::size_t total_bytes = 0;

    // Exchanged representatives over input points.
    double reduction_ratio() const noexcept;
    double reduction() const noexcept { return 1.0 - reduction_ratio(); }
};

nlohmann::json to_json(const RunTrace& trace);

struct RunResult {
    GlobalModel model;
    RunTrace trace;
    TreeTopology tree;
    std::vector<LocalModel> local_models;  // config order
    // Global cluster index per dataset point; kNoise for local noise.
    std::vector<int> point_labels;
};

// Worker count: DDC_THREADS if set and positive, else hardware concurrency.
std::size_t worker_threads();

RunResult run_ddc(std::span<const Point2> dataset, const RunConfig& config);

}  // namespace ddc
