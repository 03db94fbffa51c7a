#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "ddc/clustering.hpp"
#include "ddc/errors.hpp"

using namespace ddc;

namespace {

std::vector<Point2> blob(Point2 c, double spread, std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-spread, spread);
    std::vector<Point2> out(n);
    for (auto& p : out) p = {c.x + u(rng), c.y + u(rng)};
    return out;
}

// Oracle: textbook all-pairs DBSCAN, neighbours visited in index order.
ClusteringResult naive_dbscan(const std::vector<Point2>& pts, double eps, std::size_t min_pts) {
    const std::size_t n = pts.size();
    auto neighbours = [&](std::size_t i) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < n; ++j)
            if (distance(pts[i], pts[j]) <= eps) out.push_back(j);
        return out;
    };
    ClusteringResult res;
    res.labels.assign(n, -2);
    for (std::size_t i = 0; i < n; ++i) {
        if (res.labels[i] != -2) continue;
        auto nb = neighbours(i);
        if (nb.size() < min_pts) {
            res.labels[i] = kNoise;
            continue;
        }
        const int c = res.cluster_count++;
        res.labels[i] = c;
        std::vector<std::size_t> queue(nb.begin(), nb.end());
        for (std::size_t h = 0; h < queue.size(); ++h) {
            const std::size_t q = queue[h];
            if (res.labels[q] == kNoise) res.labels[q] = c;
            if (res.labels[q] != -2) continue;
            res.labels[q] = c;
            auto more = neighbours(q);
            if (more.size() >= min_pts) queue.insert(queue.end(), more.begin(), more.end());
        }
    }
    return res;
}

std::vector<bool> core_flags(const std::vector<Point2>& pts, double eps, std::size_t min_pts) {
    std::vector<bool> core(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::size_t c = 0;
        for (const auto& q : pts) c += distance(pts[i], q) <= eps;
        core[i] = c >= min_pts;
    }
    return core;
}

}  // namespace

TEST_CASE("dbscan basics") {
    std::mt19937_64 rng(1);
    SUBCASE("tight blob") {
        DatasetFragment f{0, blob({0, 0}, 0.1, 10, rng)};
        const auto r = dbscan(f, {1.0, 3});
        CHECK(r.cluster_count == 1);
        CHECK(r.noise_count() == 0);
    }
    SUBCASE("two blobs and an outlier") {
        auto pts = blob({0, 0}, 0.2, 20, rng);
        const auto b = blob({10, 0}, 0.2, 20, rng);
        pts.insert(pts.end(), b.begin(), b.end());
        pts.push_back({5, 5});
        const auto r = dbscan({0, pts}, {1.0, 3});
        CHECK(r.cluster_count == 2);
        CHECK(r.noise_count() == 1);
        CHECK(r.labels.back() == kNoise);
    }
    SUBCASE("invalid params") {
        DatasetFragment f{0, {{0, 0}}};
        CHECK_THROWS_AS(dbscan(f, {0.0, 3}), ParameterError);
        CHECK_THROWS_AS(dbscan(f, {1.0, 0}), ParameterError);
    }
    SUBCASE("empty fragment") {
        CHECK(dbscan({0, {}}, {1.0, 3}).cluster_count == 0);
    }
}

TEST_CASE("dbscan matches the naive oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const std::size_t n = 200 + seed * 40;
        std::vector<Point2> pts(n);
        for (auto& p : pts) p = {u(rng), u(rng)};
        const double eps = 0.04 + 0.005 * static_cast<double>(seed % 5);
        const auto got = relabel_canonical(dbscan({0, pts}, {eps, 4}));
        const auto want = relabel_canonical(naive_dbscan(pts, eps, 4));
        CHECK(got.labels == want.labels);
        CHECK(got.cluster_count == want.cluster_count);
        const auto matrix = relabel_canonical(dbscan({0, pts}, {eps, 4}, NeighbourSearch::distance_matrix));
        CHECK(matrix.labels == want.labels);
    }
    // 500 points, eps 0.1, min_pts 4
    std::mt19937_64 rng(500);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point2> pts(500);
    for (auto& p : pts) p = {u(rng), u(rng)};
    CHECK(relabel_canonical(dbscan({0, pts}, {0.1, 4})).labels == relabel_canonical(naive_dbscan(pts, 0.1, 4)).labels);
}

TEST_CASE("dbscan core membership is order invariant") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point2> pts(400);
    for (auto& p : pts) p = {u(rng), u(rng)};
    const double eps = 0.05;
    const auto core = core_flags(pts, eps, 4);
    const auto base = dbscan({0, pts}, {eps, 4});

    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::size_t> perm(pts.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Point2> shuffled(pts.size());
        for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = pts[perm[i]];
        const auto other = dbscan({0, shuffled}, {eps, 4});
        // Same partition of core points: label mapping must be a bijection.
        std::map<int, int> fwd, bwd;
        bool consistent = true;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            if (!core[perm[i]]) continue;
            const int a = base.labels[perm[i]];
            const int b = other.labels[i];
            if (fwd.count(a) && fwd[a] != b) consistent = false;
            if (bwd.count(b) && bwd[b] != a) consistent = false;
            fwd[a] = b;
            bwd[b] = a;
        }
        CHECK(consistent);
    }
}

TEST_CASE("dbscan noise shrinks as eps grows") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point2> pts(600);
    for (auto& p : pts) p = {u(rng), u(rng)};
    std::size_t prev = pts.size() + 1;
    for (double eps : {0.01, 0.02, 0.03, 0.05, 0.08, 0.12}) {
        const auto noise = dbscan({0, pts}, {eps, 4}).noise_count();
        CHECK(noise <= prev);
        prev = noise;
    }
}

TEST_CASE("kmeans") {
    std::mt19937_64 rng(9);
    SUBCASE("k = 1 gives the mean") {
        const auto pts = blob({3, 4}, 1.0, 50, rng);
        const auto r = kmeans_detailed({0, pts}, {1, 100, 5});
        CHECK(r.clustering.cluster_count == 1);
        CHECK(std::all_of(r.clustering.labels.begin(), r.clustering.labels.end(), [](int l) { return l == 0; }));
        double mx = 0, my = 0;
        for (auto& p : pts) mx += p.x, my += p.y;
        CHECK(r.centroids[0].x == doctest::Approx(mx / 50));
        CHECK(r.centroids[0].y == doctest::Approx(my / 50));
    }
    SUBCASE("k = n gives singletons") {
        const auto pts = blob({0, 0}, 1.0, 12, rng);
        const auto r = kmeans({0, pts}, {12, 100, 1});
        std::set<int> distinct(r.labels.begin(), r.labels.end());
        CHECK(distinct.size() == 12);
    }
    SUBCASE("k > n rejected") {
        CHECK_THROWS_AS(kmeans({0, {{0, 0}, {1, 1}}}, {3, 100, 1}), ParameterError);
        CHECK_THROWS_AS(kmeans({0, {{0, 0}, {1, 1}}}, {1, 0, 1}), ParameterError);
    }
    SUBCASE("two separated blobs") {
        auto pts = blob({0, 0}, 1.0, 10, rng);
        const auto b = blob({20, 0}, 1.0, 10, rng);
        pts.insert(pts.end(), b.begin(), b.end());
        // Oracle: exhaustive search over all 2-partitions for the minimum objective.
        auto cost = [&](unsigned mask) {
            double sx[2] = {0, 0}, sy[2] = {0, 0}, c[2] = {0, 0};
            for (unsigned i = 0; i < 20; ++i) {
                const int g = (mask >> i) & 1u;
                sx[g] += pts[i].x, sy[g] += pts[i].y, c[g] += 1;
            }
            if (c[0] == 0 || c[1] == 0) return std::numeric_limits<double>::infinity();
            double total = 0;
            for (unsigned i = 0; i < 20; ++i) {
                const int g = (mask >> i) & 1u;
                total += squared_distance(pts[i], {sx[g] / c[g], sy[g] / c[g]});
            }
            return total;
        };
        unsigned best_mask = 0;
        double best = std::numeric_limits<double>::infinity();
        for (unsigned mask = 0; mask < (1u << 19); ++mask) {
            const double c = cost(mask);
            if (c < best) best = c, best_mask = mask;
        }
        REQUIRE(best_mask == 0x3FFu);  // first ten points vs the other ten
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto r = kmeans({0, pts}, {2, 100, seed});
            for (unsigned i = 1; i < 20; ++i) {
                const bool same_group = ((best_mask >> i) & 1u) == (best_mask & 1u);
                CHECK((r.labels[i] == r.labels[0]) == same_group);
            }
        }
    }
    SUBCASE("objective is non-increasing") {
        std::uniform_real_distribution<double> u(0.0, 10.0);
        std::vector<Point2> pts(400);
        for (auto& p : pts) p = {u(rng), u(rng)};
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto r = kmeans_detailed({0, pts}, {8, 100, seed});
            for (std::size_t i = 1; i < r.objective_history.size(); ++i)
                CHECK(r.objective_history[i] <= r.objective_history[i - 1] + 1e-9);
        }
    }
    SUBCASE("empty cluster is re-seeded") {
        // Duplicates force two initial centroids onto the same location.
        std::vector<Point2> pts{{0, 0}, {0, 0}, {0, 0}, {10, 0}};
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            const auto r = kmeans({0, pts}, {2, 100, seed});
            std::set<int> used(r.labels.begin(), r.labels.end());
            CHECK(used.size() == 2);
        }
    }
    SUBCASE("deterministic for a seed") {
        const auto pts = blob({0, 0}, 5.0, 100, rng);
        CHECK(kmeans({0, pts}, {4, 100, 11}).labels == kmeans({0, pts}, {4, 100, 11}).labels);
    }
}

TEST_CASE("relabel_canonical") {
    CHECK(relabel_canonical({{1, 1, 0, 0}, 2}).labels == std::vector<int>{0, 0, 1, 1});
    CHECK(relabel_canonical({{0, kNoise, 0}, 1}).labels == std::vector<int>{0, kNoise, 0});
    const ClusteringResult r{{2, kNoise, 0, 2, 1}, 3};
    const auto once = relabel_canonical(r);
    CHECK(relabel_canonical(once).labels == once.labels);
    CHECK(once.labels == std::vector<int>{0, kNoise, 1, 0, 2});
}

TEST_CASE("default parameters") {
    // Regular grid with unit spacing: 4th nearest neighbour is at distance 1
    // for interior points.
    std::vector<Point2> pts;
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j) pts.push_back({double(i), double(j)});
    const double m = mean_knn_distance(pts, 4);
    CHECK(m >= 1.0);
    CHECK(m <= std::sqrt(2.0));
    const auto p = default_dbscan_params(pts);
    CHECK(p.min_pts == 4);
    CHECK(p.eps == doctest::Approx(2.0 * m));
    CHECK(default_dbscan_params(pts, EpsHeuristic::mean_knn, 1.5).eps == doctest::Approx(1.5 * m));
    CHECK_THROWS_AS(default_dbscan_params(pts, EpsHeuristic::mean_knn, 0.0), ParameterError);
}

TEST_CASE("median heuristic ignores sparse background noise") {
    std::vector<Point2> pts;
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j) pts.push_back({double(i), double(j)});
    const double clean = median_knn_distance(pts, 4);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> far(100.0, 1000.0);
    for (int k = 0; k < 90; ++k) pts.push_back({far(rng), far(rng)});
    CHECK(median_knn_distance(pts, 4) == doctest::Approx(clean).epsilon(0.05));
    CHECK(mean_knn_distance(pts, 4) > 2.0 * clean);
    const auto d = knn_distances(pts, 4);
    CHECK(d.size() == pts.size());
    CHECK(default_dbscan_params(pts, EpsHeuristic::median_knn).eps == doctest::Approx(2.0 * median_knn_distance(pts, 4)));
}
