#include "ddc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>

#include "ddc/errors.hpp"

namespace ddc {

void DbscanParams::validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ParameterError("dbscan: eps must be > 0");
    if (min_pts < 1) throw ParameterError("dbscan: min_pts must be >= 1");
}

void KMeansParams::validate(std::size_t fragment_size) const {
    if (k < 1) throw ParameterError("kmeans: k must be >= 1");
    if (k > fragment_size) throw ParameterError("kmeans: k exceeds fragment size");
    if (max_iterations < 1) throw ParameterError("kmeans: max_iterations must be >= 1");
}

std::size_t ClusteringResult::noise_count() const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

namespace {

// Condensed upper-triangular distance matrix.
class DistanceMatrix {
public:
    explicit DistanceMatrix(std::span<const Point2> pts) : n_(pts.size()), pts_(pts) {
        values_.resize(n_ * (n_ - (n_ > 0 ? 1 : 0)) / 2);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) values_[offset(i, j)] = distance(pts[i], pts[j]);
    }

    std::vector<std::size_t> within(std::size_t i, double eps) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < n_; ++j) {
            const double d = i == j ? 0.0 : values_[offset(std::min(i, j), std::max(i, j))];
            if (d <= eps) out.push_back(j);
        }
        return out;
    }

private:
    std::size_t offset(std::size_t i, std::size_t j) const noexcept {
        return i * n_ - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t n_;
    std::span<const Point2> pts_;
    std::vector<double> values_;
};

template <typename Query>
ClusteringResult run_dbscan(std::size_t n, std::size_t min_pts, Query&& query) {
    constexpr int kUnvisited = -2;
    ClusteringResult out;
    out.labels.assign(n, kUnvisited);
    std::deque<std::size_t> frontier;
    for (std::size_t i = 0; i < n; ++i) {
        if (out.labels[i] != kUnvisited) continue;
        auto seeds = query(i);
        if (seeds.size() < min_pts) {
            out.labels[i] = kNoise;
            continue;
        }
        const int cid = out.cluster_count++;
        out.labels[i] = cid;
        frontier.assign(seeds.begin(), seeds.end());
        while (!frontier.empty()) {
            const std::size_t q = frontier.front();
            frontier.pop_front();
            if (out.labels[q] == kNoise) out.labels[q] = cid;  // border point
            if (out.labels[q] != kUnvisited) continue;
            out.labels[q] = cid;
            auto next = query(q);
            if (next.size() >= min_pts) frontier.insert(frontier.end(), next.begin(), next.end());
        }
    }
    return out;
}

}  // namespace

ClusteringResult dbscan(const DatasetFragment& fragment, const DbscanParams& params, NeighbourSearch search) {
    params.validate();
    const auto& pts = fragment.points;
    if (search == NeighbourSearch::distance_matrix) {
        const DistanceMatrix matrix(pts);
        return run_dbscan(pts.size(), params.min_pts, [&](std::size_t i) { return matrix.within(i, params.eps); });
    }
    const auto index = build_index(pts, params.eps);
    return run_dbscan(pts.size(), params.min_pts, [&](std::size_t i) {
        auto idx = index.query_indices(pts[i], params.eps);
        std::sort(idx.begin(), idx.end());
        return idx;
    });
}

namespace {

double assign_points(const std::vector<Point2>& pts, const std::vector<Point2>& centroids, std::vector<int>& labels) {
    double objective = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double d = squared_distance(pts[i], centroids[c]);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[i] = best;
        objective += best_d;
    }
    return objective;
}

double objective_of(const std::vector<Point2>& pts, const std::vector<Point2>& centroids, const std::vector<int>& labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) total += squared_distance(pts[i], centroids[labels[i]]);
    return total;
}

}  // namespace

KMeansResult kmeans_detailed(const DatasetFragment& fragment, const KMeansParams& params) {
    const auto& pts = fragment.points;
    params.validate(pts.size());
    const std::size_t k = params.k;

    std::mt19937_64 rng(params.seed);
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }

    KMeansResult res;
    res.centroids.resize(k);
    for (std::size_t c = 0; c < k; ++c) res.centroids[c] = pts[idx[c]];

    std::vector<int> labels(pts.size(), -1);
    std::vector<int> previous;
    for (std::size_t it = 0; it < params.max_iterations; ++it) {
        assign_points(pts, res.centroids, labels);
        if (labels == previous) break;
        ++res.iterations;

        std::vector<std::size_t> counts(k, 0);
        for (int l : labels) ++counts[static_cast<std::size_t>(l)];
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
                const double d = squared_distance(pts[i], res.centroids[static_cast<std::size_t>(labels[i])]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            --counts[static_cast<std::size_t>(labels[far])];
            labels[far] = static_cast<int>(c);
            counts[c] = 1;
        }

        std::vector<Point2> sums(k, Point2{0.0, 0.0});
        for (std::size_t i = 0; i < pts.size(); ++i) {
            auto& s = sums[static_cast<std::size_t>(labels[i])];
            s.x += pts[i].x;
            s.y += pts[i].y;
        }
        for (std::size_t c = 0; c < k; ++c) {
            const double m = static_cast<double>(counts[c]);
            res.centroids[c] = {sums[c].x / m, sums[c].y / m};
        }
        res.objective_history.push_back(objective_of(pts, res.centroids, labels));
        previous = labels;
    }

    res.clustering.labels = std::move(labels);
    res.clustering.cluster_count = static_cast<int>(k);
    return res;
}

ClusteringResult kmeans(const DatasetFragment& fragment, const KMeansParams& params) {
    return kmeans_detailed(fragment, params).clustering;
}

ClusteringResult relabel_canonical(const ClusteringResult& result) {
    ClusteringResult out;
    out.labels.resize(result.labels.size());
    std::vector<int> mapping(static_cast<std::size_t>(std::max(result.cluster_count, 0)), -1);
    int next = 0;
    for (std::size_t i = 0; i < result.labels.size(); ++i) {
        const int l = result.labels[i];
        if (l == kNoise) {
            out.labels[i] = kNoise;
            continue;
        }
        if (static_cast<std::size_t>(l) >= mapping.size()) mapping.resize(static_cast<std::size_t>(l) + 1, -1);
        if (mapping[static_cast<std::size_t>(l)] < 0) mapping[static_cast<std::size_t>(l)] = next++;
        out.labels[i] = mapping[static_cast<std::size_t>(l)];
    }
    out.cluster_count = next;
    return out;
}

std::vector<double> knn_distances(std::span<const Point2> points, std::size_t k) {
    const std::size_t n = points.size();
    if (n < 2 || k == 0) return std::vector<double>(n, 0.0);
    const std::size_t kk = std::min(k, n - 1);
    const BBox box = BBox::of(points);
    const double area = std::max(box.width() * box.height(), 1e-12);
    const double cell = std::max(std::sqrt(area / static_cast<double>(n)) * 2.0, 1e-9);
    const GridIndex index(points, cell);

    std::vector<double> out(n);
    std::vector<double> ds;
    for (std::size_t i = 0; i < n; ++i) {
        double r = cell;
        for (;;) {
            ds.clear();
            index.for_each_within(points[i], r, [&](std::size_t j) {
                if (j != i) ds.push_back(distance(points[i], points[j]));
            });
            if (ds.size() >= kk) break;
            r *= 2.0;
        }
        std::nth_element(ds.begin(), ds.begin() + static_cast<std::ptrdiff_t>(kk - 1), ds.end());
        out[i] = ds[kk - 1];
    }
    return out;
}

double mean_knn_distance(std::span<const Point2> points, std::size_t k) {
    if (points.size() < 2 || k == 0) return 0.0;
    const auto d = knn_distances(points, k);
    return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

double median_knn_distance(std::span<const Point2> points, std::size_t k) {
    if (points.size() < 2 || k == 0) return 0.0;
    auto d = knn_distances(points, k);
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid;
}

DbscanParams default_dbscan_params(std::span<const Point2> points, EpsHeuristic heuristic, double scale) {
    DbscanParams p;
    p.min_pts = 4;
    if (!(scale > 0.0)) throw ParameterError("eps scale must be positive");
    p.eps = scale * (heuristic == EpsHeuristic::mean_knn ? mean_knn_distance(points, 4) : median_knn_distance(points, 4));
    if (!(p.eps > 0.0)) p.eps = 1.0;
    return p;
}

}  // namespace ddc
