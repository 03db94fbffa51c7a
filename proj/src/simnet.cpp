#include "ddc/simnet.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "ddc/errors.hpp"

namespace ddc {

NodeId elect_leader(std::span<const NodeDescriptor> group) {
    if (group.empty()) throw ParameterError("elect_leader: empty group");
    const NodeDescriptor* best = &group.front();
    for (const auto& n : group) {
        if (n.capacity > best->capacity || (n.capacity == best->capacity && n.id < best->id)) best = &n;
    }
    return best->id;
}

TreeTopology build_tree(std::span<const NodeDescriptor> nodes, std::size_t degree,
                        std::optional<std::uint64_t> shuffle_seed) {
    if (nodes.empty()) throw ParameterError("build_tree: no nodes");
    if (degree < 2) throw ParameterError("build_tree: degree must be >= 2");
    std::vector<NodeDescriptor> current(nodes.begin(), nodes.end());
    std::sort(current.begin(), current.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < current.size(); ++i)
        if (current[i].id == current[i - 1].id) throw ParameterError("build_tree: duplicate node id");

    std::mt19937_64 rng(shuffle_seed.value_or(0));
    TreeTopology tree;
    tree.degree = degree;
    while (current.size() > 1) {
        if (shuffle_seed) std::shuffle(current.begin(), current.end(), rng);
        std::vector<std::vector<NodeId>> groups;
        std::vector<NodeId> leaders;
        std::vector<NodeDescriptor> next;
        for (std::size_t start = 0; start < current.size(); start += degree) {
            const std::span<const NodeDescriptor> members(current.data() + start,
                                                          std::min(degree, current.size() - start));
            std::vector<NodeId> ids;
            for (const auto& m : members) ids.push_back(m.id);
            const NodeId leader = elect_leader(members);
            groups.push_back(std::move(ids));
            leaders.push_back(leader);
            next.push_back(*std::find_if(members.begin(), members.end(), [&](const auto& m) { return m.id == leader; }));
        }
        tree.levels.push_back(std::move(groups));
        tree.leaders.push_back(std::move(leaders));
        std::sort(next.begin(), next.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        current = std::move(next);
    }
    std::reverse(tree.levels.begin(), tree.levels.end());
    std::reverse(tree.leaders.begin(), tree.leaders.end());
    tree.root = current.front().id;
    return tree;
}

std::optional<PartitionStrategy> parse_partition_strategy(std::string_view text) {
    if (text == "random") return PartitionStrategy::random;
    if (text == "stripes" || text == "spatial-stripes" || text == "spatial_stripes") return PartitionStrategy::spatial_stripes;
    if (text == "skewed") return PartitionStrategy::skewed;
    return std::nullopt;
}

std::string_view to_string(PartitionStrategy strategy) {
    switch (strategy) {
        case PartitionStrategy::random: return "random";
        case PartitionStrategy::spatial_stripes: return "spatial-stripes";
        case PartitionStrategy::skewed: return "skewed";
    }
    return "?";
}

std::vector<std::vector<std::size_t>> partition_indices(std::span<const Point2> dataset, std::size_t n_nodes,
                                                        PartitionStrategy strategy, std::uint64_t seed) {
    const std::size_t n = dataset.size();
    if (n == 0) throw ParameterError("partition: empty dataset");
    if (n_nodes == 0) throw ParameterError("partition: need at least one node");
    if (n_nodes > n) throw ParameterError("partition: more nodes than points");

    std::vector<std::vector<std::size_t>> out(n_nodes);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    auto cut_blocks = [&](const std::vector<std::size_t>& sizes) {
        std::size_t at = 0;
        for (std::size_t k = 0; k < n_nodes; ++k) {
            out[k].assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                          order.begin() + static_cast<std::ptrdiff_t>(at + sizes[k]));
            at += sizes[k];
        }
    };

    switch (strategy) {
        case PartitionStrategy::random: {
            std::uniform_int_distribution<std::size_t> pick(0, n_nodes - 1);
            for (std::size_t i = 0; i < n; ++i) out[pick(rng)].push_back(i);
            return out;
        }
        case PartitionStrategy::spatial_stripes: {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (dataset[a].x != dataset[b].x) return dataset[a].x < dataset[b].x;
                return dataset[a].y < dataset[b].y;
            });
            std::vector<std::size_t> sizes(n_nodes);
            for (std::size_t k = 0; k < n_nodes; ++k) sizes[k] = (k + 1) * n / n_nodes - k * n / n_nodes;
            cut_blocks(sizes);
            break;
        }
        case PartitionStrategy::skewed: {
            // Node k gets a share proportional to 2^-k (largest remainder),
            // then empty nodes borrow one point from the largest.
            std::shuffle(order.begin(), order.end(), rng);
            std::vector<double> weight(n_nodes);
            for (std::size_t k = 0; k < n_nodes; ++k) weight[k] = std::ldexp(1.0, -static_cast<int>(k));
            const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
            std::vector<std::size_t> sizes(n_nodes, 0);
            std::vector<std::pair<double, std::size_t>> rem;
            std::size_t assigned = 0;
            for (std::size_t k = 0; k < n_nodes; ++k) {
                const double exact = static_cast<double>(n) * weight[k] / total;
                sizes[k] = static_cast<std::size_t>(std::floor(exact));
                assigned += sizes[k];
                rem.emplace_back(-(exact - std::floor(exact)), k);
            }
            std::sort(rem.begin(), rem.end());
            for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++sizes[rem[r % n_nodes].second];
            for (std::size_t k = 0; k < n_nodes; ++k) {
                if (sizes[k] > 0) continue;
                --*std::max_element(sizes.begin(), sizes.end());
                sizes[k] = 1;
            }
            cut_blocks(sizes);
            break;
        }
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

std::vector<DatasetFragment> partition(std::span<const Point2> dataset, std::size_t n_nodes, PartitionStrategy strategy,
                                       std::uint64_t seed) {
    std::vector<DatasetFragment> out;
    const auto parts = partition_indices(dataset, n_nodes, strategy, seed);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        DatasetFragment f{static_cast<NodeId>(k), {}};
        for (std::size_t i : parts[k]) f.points.push_back(dataset[i]);
        out.push_back(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

void RunConfig::validate() const {
    if (nodes.empty()) throw ParameterError("config: at least one node required");
    if (degree < 2) throw ParameterError("config: degree must be >= 2");
    std::set<NodeId> ids;
    for (const auto& n : nodes) {
        if (!ids.insert(n.id).second) throw ParameterError("config: duplicate node id " + std::to_string(n.id));
        if (!std::isfinite(n.capacity) || n.capacity < 0.0) throw ParameterError("config: capacity must be finite and >= 0");
        if (n.dbscan) n.dbscan->validate();
        if (n.algorithm == Algorithm::kmeans && n.kmeans.k < 1) throw ParameterError("config: kmeans k must be >= 1");
    }
    if (!(sample_rate >= 0.0 && sample_rate <= 1.0)) throw ParameterError("config: sample_rate must lie in [0, 1]");
    if (!(aggregation.merge_radius >= 0.0)) throw ParameterError("config: merge_radius must be >= 0");
    if (!(aggregation.eps_factor >= 0.0)) throw ParameterError("config: eps_factor must be >= 0");
    if (!(boundary.aperture > 0.0 && boundary.aperture < std::numbers::pi))
        throw ParameterError("config: aperture must lie in (0, 180) degrees");
}

RunConfig uniform_config(std::size_t n_nodes, Algorithm algorithm, std::size_t degree) {
    RunConfig c;
    c.degree = degree;
    for (std::size_t i = 0; i < n_nodes; ++i) {
        NodeConfig n;
        n.id = static_cast<NodeId>(i);
        n.algorithm = algorithm;
        c.nodes.push_back(n);
    }
    return c;
}

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw ParameterError("config: top level must be an object");
        RunConfig c;
        c.degree = get_or<std::size_t>(j, "degree", 3);
        c.seed = get_or<std::uint64_t>(j, "seed", 0);
        for (const auto& jn : j.at("nodes")) {
            NodeConfig n;
            n.id = jn.at("id").get<NodeId>();
            n.capacity = get_or<double>(jn, "capacity", 1.0);
            const auto algo = get_or<std::string>(jn, "algorithm", "dbscan");
            const nlohmann::json params = jn.contains("params") ? jn.at("params") : nlohmann::json::object();
            if (algo == "dbscan") {
                n.algorithm = Algorithm::dbscan;
                if (params.contains("eps")) {
                    n.dbscan = DbscanParams{params.at("eps").get<double>(), get_or<std::size_t>(params, "min_pts", 4)};
                } else {
                    n.heuristic_min_pts = get_or<std::size_t>(params, "min_pts", 4);
                    n.eps_scale = get_or<double>(params, "eps_scale", 2.0);
                }
                const auto h = get_or<std::string>(params, "eps_heuristic", "mean-knn");
                if (h == "mean-knn") n.eps_heuristic = EpsHeuristic::mean_knn;
                else if (h == "median-knn") n.eps_heuristic = EpsHeuristic::median_knn;
                else throw ParameterError("config: eps_heuristic must be mean-knn or median-knn");
            } else if (algo == "kmeans") {
                n.algorithm = Algorithm::kmeans;
                n.kmeans.k = get_or<std::size_t>(params, "k", 1);
                n.kmeans.max_iterations = get_or<std::size_t>(params, "max_iterations", 100);
                n.kmeans.seed = get_or<std::uint64_t>(params, "seed", static_cast<std::uint64_t>(n.id));
            } else {
                throw ParameterError("config: unknown algorithm '" + algo + "'");
            }
            c.nodes.push_back(n);
        }
        if (j.contains("partition")) {
            const auto& p = j.at("partition");
            const auto name = get_or<std::string>(p, "strategy", "random");
            const auto strategy = parse_partition_strategy(name);
            if (!strategy) throw ParameterError("config: unknown partition strategy '" + name + "'");
            c.partition = *strategy;
            c.partition_seed = get_or<std::uint64_t>(p, "seed", 0);
            if (p.contains("group_shuffle_seed")) c.group_shuffle_seed = p.at("group_shuffle_seed").get<std::uint64_t>();
        }
        if (j.contains("boundary")) {
            const auto& b = j.at("boundary");
            c.boundary.eps = get_or<double>(b, "eps", 0.0);
            c.boundary.aperture = get_or<double>(b, "aperture_deg", 90.0) * std::numbers::pi / 180.0;
            c.boundary.min_neighbours = get_or<std::size_t>(b, "min_neighbours", 4);
            c.boundary.simplify_factor = get_or<double>(b, "simplify_factor", 1.0);
            c.boundary.coverage_factor = get_or<double>(b, "coverage_factor", 1.0);
            c.boundary.carve_fallback = get_or<bool>(b, "carve_fallback", true);
            c.sample_rate = get_or<double>(b, "sample_rate", 0.0);
        }
        if (j.contains("aggregation")) {
            c.aggregation.merge_radius = get_or<double>(j.at("aggregation"), "merge_radius", 0.0);
            c.aggregation.eps_factor = get_or<double>(j.at("aggregation"), "eps_factor", 0.0);
        }
        if (j.contains("neighbour_search")) {
            const auto s = j.at("neighbour_search").get<std::string>();
            if (s == "grid") c.search = NeighbourSearch::grid;
            else if (s == "matrix") c.search = NeighbourSearch::distance_matrix;
            else throw ParameterError("config: neighbour_search must be grid or matrix");
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["degree"] = c.degree;
    j["seed"] = c.seed;
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : c.nodes) {
        nlohmann::ordered_json jn;
        jn["id"] = n.id;
        jn["capacity"] = n.capacity;
        jn["algorithm"] = n.algorithm == Algorithm::dbscan ? "dbscan" : "kmeans";
        nlohmann::ordered_json params = nlohmann::ordered_json::object();
        if (n.algorithm == Algorithm::dbscan && n.dbscan) {
            params["eps"] = n.dbscan->eps;
            params["min_pts"] = n.dbscan->min_pts;
        } else if (n.algorithm == Algorithm::dbscan) {
            params["eps_heuristic"] = n.eps_heuristic == EpsHeuristic::mean_knn ? "mean-knn" : "median-knn";
            params["eps_scale"] = n.eps_scale;
            params["min_pts"] = n.heuristic_min_pts;
        } else if (n.algorithm == Algorithm::kmeans) {
            params["k"] = n.kmeans.k;
            params["max_iterations"] = n.kmeans.max_iterations;
            params["seed"] = n.kmeans.seed;
        }
        jn["params"] = params;
        nodes.push_back(jn);
    }
    j["nodes"] = nodes;
    j["partition"] = {{"strategy", to_string(c.partition)}, {"seed", c.partition_seed}};
    if (c.group_shuffle_seed) j["partition"]["group_shuffle_seed"] = *c.group_shuffle_seed;
    j["boundary"] = {{"eps", c.boundary.eps},
                     {"aperture_deg", c.boundary.aperture * 180.0 / std::numbers::pi},
                     {"min_neighbours", c.boundary.min_neighbours},
                     {"simplify_factor", c.boundary.simplify_factor},
                     {"coverage_factor", c.boundary.coverage_factor},
                     {"carve_fallback", c.boundary.carve_fallback},
                     {"sample_rate", c.sample_rate}};
    j["aggregation"] = {{"merge_radius", c.aggregation.merge_radius}, {"eps_factor", c.aggregation.eps_factor}};
    j["neighbour_search"] = c.search == NeighbourSearch::grid ? "grid" : "matrix";
    return j;
}

// ---------------------------------------------------------------------------
// Trace

double RunTrace::reduction_ratio() const noexcept {
    if (total_input_points == 0) return 0.0;
    return std::min(1.0, static_cast<double>(total_representatives_sent) / static_cast<double>(total_input_points));
}

nlohmann::json to_json(const RunTrace& t) {
    nlohmann::ordered_json j;
    j["total_input_points"] = t.total_input_points;
    j["local_representatives"] = t.local_representatives;
    j["total_representatives_sent"] = t.total_representatives_sent;
    j["total_bytes"] = t.total_bytes;
    j["reduction_ratio"] = t.reduction_ratio();
    j["phase_one_ms"] = t.phase_one_ms;
    j["node_ms"] = t.node_ms;
    j["level_ms"] = t.level_ms;
    j["wall_ms"] = t.wall_ms;
    auto msgs = nlohmann::ordered_json::array();
    for (const auto& m : t.messages) {
        msgs.push_back({{"from", m.from},
                        {"to", m.to},
                        {"level", m.level},
                        {"contours", m.contour_count},
                        {"representatives", m.representative_count},
                        {"bytes", m.byte_size}});
    }
    j["messages"] = msgs;
    return j;
}

// ---------------------------------------------------------------------------
// Execution

std::size_t worker_threads() {
    if (const char* env = std::getenv("DDC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Runs fn(i) for i in [0, n) on up to worker_threads() threads. The first
// failure in index order is rethrown after all tasks finish.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    auto guarded = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t threads = std::min(worker_threads(), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) guarded(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) guarded(i);
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Re-raises the active exception with a context prefix, keeping its category.
[[noreturn]] void rethrow_with_context(const std::string& where) {
    try {
        throw;
    } catch (const ParameterError& e) {
        throw ParameterError(where + ": " + e.what());
    } catch (const DegenerateContourError& e) {
        throw DegenerateContourError(where + ": " + e.what());
    } catch (const GeometryError& e) {
        throw GeometryError(where + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(where + ": " + e.what());
    }
}

}  // namespace

RunResult run_ddc(std::span<const Point2> dataset, const RunConfig& input_config) {
    const auto t_start = Clock::now();
    RunConfig config = input_config;
    config.validate();
    std::sort(config.nodes.begin(), config.nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    const std::size_t n_nodes = config.nodes.size();

    RunResult result;
    result.trace.total_input_points = dataset.size();
    const auto parts = partition_indices(dataset, n_nodes, config.partition, config.partition_seed);

    // Phase one: independent local clustering and contour extraction.
    result.local_models.resize(n_nodes);
    std::vector<ClusteringResult> local_labels(n_nodes);
    result.trace.node_ms.assign(n_nodes, 0.0);
    parallel_for(n_nodes, [&](std::size_t k) {
        const auto t0 = Clock::now();
        const NodeConfig& node = config.nodes[k];
        try {
            DatasetFragment fragment{node.id, {}};
            fragment.points.reserve(parts[k].size());
            for (std::size_t i : parts[k]) fragment.points.push_back(dataset[i]);
            if (fragment.points.empty()) {
                result.local_models[k] = LocalModel{node.id, {}, {}};
                return;
            }
            BoundaryConfig boundary = config.boundary;
            if (node.algorithm == Algorithm::dbscan) {
                DbscanParams params;
                if (node.dbscan) {
                    params = *node.dbscan;
                } else {
                    params = default_dbscan_params(fragment.points, node.eps_heuristic, node.eps_scale);
                    params.min_pts = node.heuristic_min_pts;
                }
                local_labels[k] = dbscan(fragment, params, config.search);
                if (!(boundary.eps > 0.0)) boundary.eps = params.eps;
            } else {
                KMeansParams params = node.kmeans;
                params.k = std::min(params.k, fragment.points.size());
                local_labels[k] = kmeans(fragment, params);
                if (!(boundary.eps > 0.0)) boundary.eps = default_dbscan_params(fragment.points, node.eps_heuristic, node.eps_scale).eps;
            }
            result.local_models[k] = build_local_model(fragment, local_labels[k], boundary, config.sample_rate,
                                                       config.seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(k + 1)));
        } catch (...) {
            rethrow_with_context("node " + std::to_string(node.id) + " (phase one)");
        }
        result.trace.node_ms[k] = ms_since(t0);
    });
    for (std::size_t k = 0; k < n_nodes; ++k) {
        result.trace.phase_one_ms = std::max(result.trace.phase_one_ms, result.trace.node_ms[k]);
        result.trace.local_representatives += result.local_models[k].representative_count();
    }

    // Phase two: climb the tree; non-leaders send and retire.
    std::vector<NodeDescriptor> descriptors;
    std::map<NodeId, std::size_t> slot;
    for (std::size_t k = 0; k < n_nodes; ++k) {
        descriptors.push_back({config.nodes[k].id, config.nodes[k].capacity});
        slot[config.nodes[k].id] = k;
    }
    result.tree = build_tree(descriptors, config.degree, config.group_shuffle_seed);
    std::vector<GlobalModel> held(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) held[k] = to_global(result.local_models[k]);

    for (std::size_t depth = result.tree.levels.size(); depth-- > 0;) {
        const auto& groups = result.tree.levels[depth];
        const auto& leaders = result.tree.leaders[depth];
        std::vector<double> group_ms(groups.size(), 0.0);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            for (NodeId member : groups[g]) {
                if (member == leaders[g]) continue;
                const GlobalModel& m = held[slot[member]];
                Message msg;
                msg.from = member;
                msg.to = leaders[g];
                msg.level = depth;
                msg.contour_count = m.clusters.size();
                msg.representative_count = m.representative_count();
                msg.byte_size = kBytesPerPoint * msg.representative_count + kMessageHeaderBytes;
                result.trace.total_representatives_sent += msg.representative_count;
                result.trace.total_bytes += msg.byte_size;
                result.trace.messages.push_back(msg);
            }
        }
        parallel_for(groups.size(), [&](std::size_t g) {
            const auto t0 = Clock::now();
            try {
                std::vector<GlobalModel> inbox;
                for (NodeId member : groups[g]) inbox.push_back(held[slot[member]]);
                held[slot[leaders[g]]] = merge_models(inbox, config.aggregation);
            } catch (...) {
                rethrow_with_context("leader " + std::to_string(leaders[g]) + " (level " + std::to_string(depth) + ")");
            }
            group_ms[g] = ms_since(t0);
        });
        result.trace.level_ms.push_back(groups.empty() ? 0.0 : *std::max_element(group_ms.begin(), group_ms.end()));
    }

    if (result.tree.levels.empty()) {
        // A single node still merges its own contours.
        const auto t0 = Clock::now();
        held[0] = merge_models(std::vector<GlobalModel>{held[0]}, config.aggregation);
        result.trace.level_ms.push_back(ms_since(t0));
    }
    result.model = std::move(held[slot[result.tree.root]]);

    // Global label per input point through contour provenance.
    std::map<ContourOrigin, int> global_of;
    for (std::size_t c = 0; c < result.model.provenance.size(); ++c)
        for (const auto& o : result.model.provenance[c]) global_of[o] = static_cast<int>(c);
    result.point_labels.assign(dataset.size(), kNoise);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        const auto& labels = local_labels[k].labels;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] == kNoise) continue;
            const auto it = global_of.find(ContourOrigin{config.nodes[k].id, labels[j]});
            if (it != global_of.end()) result.point_labels[parts[k][j]] = it->second;
        }
    }
    result.trace.wall_ms = ms_since(t_start);
    return result;
}

}  // namespace ddc
