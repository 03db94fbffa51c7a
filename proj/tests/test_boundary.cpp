#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "ddc/boundary.hpp"

using namespace ddc;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

BoundaryConfig config_with(double eps, double aperture = kHalfPi) {
    BoundaryConfig c;
    c.eps = eps;
    c.aperture = aperture;
    return c;
}

// Oracle: declarative cone test by explicit angles, neighbourhood by linear scan.
bool boundary_by_angles(Point2 p, const std::vector<Point2>& cloud, const BoundaryConfig& cfg) {
    std::vector<Point2> nb;
    for (const auto& q : cloud)
        if (distance(p, q) <= cfg.eps) nb.push_back(q);
    double vx = 0, vy = 0;
    for (const auto& q : nb) vx += p.x - q.x, vy += p.y - q.y;
    const double len = std::hypot(vx, vy);
    if (len <= 1e-12) return nb.size() < cfg.min_neighbours;
    const double b_angle = std::atan2(vy, vx);
    return std::all_of(nb.begin(), nb.end(), [&](Point2 q) {
        if (q == p) return true;
        double diff = std::abs(std::atan2(q.y - p.y, q.x - p.x) - b_angle);
        if (diff > std::numbers::pi) diff = 2.0 * std::numbers::pi - diff;
        // A neighbour exactly on the cone's rim counts as outside, matching the
        // rounding of cos(pi/2) to a tiny positive value.
        return diff >= cfg.aperture - 1e-12;
    });
}

std::vector<Point2> uniform_disk(std::size_t n, double radius, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point2> pts(n);
    for (auto& p : pts) {
        const double r = radius * std::sqrt(u(rng));
        const double t = 2.0 * std::numbers::pi * u(rng);
        p = {r * std::cos(t), r * std::sin(t)};
    }
    return pts;
}

bool contains_within(const Polygon& poly, Point2 p, double tol) {
    return point_in_polygon(p, poly) || distance_to_boundary(p, poly) <= tol;
}

std::vector<Point2> c_shape(std::size_t n, std::uint64_t seed) {
    // Annulus sector of 270 degrees, radii 6..10, opening to the right.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point2> pts;
    while (pts.size() < n) {
        const double r = std::sqrt(36.0 + 64.0 * u(rng));
        const double t = std::numbers::pi / 4.0 + 1.5 * std::numbers::pi * u(rng);
        pts.push_back({r * std::cos(t), r * std::sin(t)});
    }
    return pts;
}

}  // namespace

TEST_CASE("displacement_vector") {
    CHECK(displacement_vector({0, 0}, std::vector<Point2>{{1, 0}, {-1, 0}}) == Vector2{0, 0});
    CHECK(displacement_vector({0, 0}, std::vector<Point2>{{1, 0}}) == Vector2{-1, 0});
    CHECK(displacement_vector({0, 0}, std::vector<Point2>{{1, 0}, {0, 1}}) == Vector2{-1, -1});
    // p itself contributes nothing.
    CHECK(displacement_vector({0, 0}, std::vector<Point2>{{0, 0}, {1, 0}}) == Vector2{-1, 0});
}

TEST_CASE("balance_vector") {
    const auto b = balance_vector({3, 4});
    CHECK(b.dx == doctest::Approx(0.6));
    CHECK(b.dy == doctest::Approx(0.8));
    CHECK(balance_vector({0, 0}) == Vector2{0, 0});
    CHECK(balance_vector({-2, 0}) == Vector2{-1, 0});
    CHECK(std::abs(balance_vector({1e-3, 7}).norm() - 1.0) < 1e-9);
}

TEST_CASE("is_boundary") {
    SUBCASE("edge of a half-line") {
        const std::vector<Point2> nb{{-1, 0}};
        const auto b = balance_vector(displacement_vector({0, 0}, nb));
        CHECK(b == Vector2{1, 0});
        CHECK(is_boundary({0, 0}, nb, b, config_with(2.0)));
    }
    SUBCASE("symmetric interior") {
        std::vector<Point2> nb;
        for (int k = 0; k < 8; ++k) {
            const double a = k * std::numbers::pi / 4.0;
            nb.push_back({std::round(std::cos(a)), std::round(std::sin(a))});
        }
        const auto b = balance_vector(displacement_vector({0, 0}, nb));
        CHECK(b == Vector2{0, 0});
        CHECK_FALSE(is_boundary({0, 0}, nb, b, config_with(2.0)));
    }
    SUBCASE("sparse zero vector is boundary") {
        const std::vector<Point2> nb{{1, 0}, {-1, 0}};
        CHECK(is_boundary({0, 0}, nb, Vector2{0, 0}, config_with(2.0)));
    }
    SUBCASE("narrow aperture against angle oracle") {
        const std::vector<Point2> nb{{0, 0}, {-1, 0}, {1, 0.1}};
        const auto cfg = config_with(2.0, std::numbers::pi / 3.0);
        const auto b = balance_vector(displacement_vector({0, 0}, nb));
        CHECK(is_boundary({0, 0}, nb, b, cfg) == boundary_by_angles({0, 0}, nb, cfg));
    }
    SUBCASE("agrees with the declarative predicate on random neighbourhoods") {
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        int agree = 0;
        for (int trial = 0; trial < 500; ++trial) {
            std::vector<Point2> cloud{{0, 0}};
            const int m = 1 + trial % 9;
            for (int k = 0; k < m; ++k) cloud.push_back({u(rng), u(rng)});
            const double aperture = 0.3 + 2.5 * (trial % 7) / 7.0;
            const auto cfg = config_with(1.5, aperture);
            std::vector<Point2> nb;
            for (const auto& q : cloud)
                if (distance({0, 0}, q) <= cfg.eps) nb.push_back(q);
            const auto b = balance_vector(displacement_vector({0, 0}, nb));
            agree += is_boundary({0, 0}, nb, b, cfg) == boundary_by_angles({0, 0}, cloud, cfg);
        }
        CHECK(agree == 500);
    }
}

TEST_CASE("extract_boundary") {
    SUBCASE("tiny cluster is all boundary") {
        const std::vector<Point2> pts{{0, 0}, {0.5, 0}, {0.2, 0.4}};
        CHECK(extract_boundary(pts, config_with(1.0)).size() == 3);
    }
    SUBCASE("21x21 grid") {
        std::vector<Point2> grid;
        for (int i = 0; i <= 20; ++i)
            for (int j = 0; j <= 20; ++j) grid.push_back({double(i), double(j)});
        const auto cfg = config_with(1.5);
        const auto flagged = extract_boundary(grid, cfg);
        for (Point2 corner : {Point2{0, 0}, Point2{20, 0}, Point2{0, 20}, Point2{20, 20}})
            CHECK(std::find(flagged.begin(), flagged.end(), corner) != flagged.end());
        CHECK(std::find(flagged.begin(), flagged.end(), Point2{10, 10}) == flagged.end());
        // Same set as direct evaluation of the predicate for every point.
        std::vector<Point2> oracle;
        for (const auto& p : grid)
            if (boundary_by_angles(p, grid, cfg)) oracle.push_back(p);
        CHECK(flagged == oracle);
    }
    SUBCASE("disk boundary lies near the rim") {
        // Density fluctuations occasionally tilt an interior balance vector
        // into an empty half-plane, so the rim fraction is checked in aggregate
        // here; the strict per-disk statement lives in the acceptance suite.
        std::size_t flagged_total = 0, near_rim = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto disk = uniform_disk(2000, 10.0, seed);
            const auto flagged = extract_boundary(disk, config_with(1.0));
            CHECK(!flagged.empty());
            CHECK(static_cast<double>(flagged.size()) <= 0.15 * 2000);
            flagged_total += flagged.size();
            for (const auto& p : flagged) near_rim += std::hypot(p.x, p.y) >= 8.0 ? 1 : 0;
        }
        CHECK(static_cast<double>(near_rim) >= 0.95 * static_cast<double>(flagged_total));
    }
    SUBCASE("subset of the cluster and scale invariant") {
        const auto disk = uniform_disk(800, 5.0, 8);
        const auto cfg = config_with(0.8);
        const auto idx = extract_boundary_indices(disk, cfg);
        std::vector<Point2> scaled;
        for (const auto& p : disk) scaled.push_back({p.x * 3.5, p.y * 3.5});
        CHECK(extract_boundary_indices(scaled, config_with(0.8 * 3.5)) == idx);
        for (std::size_t i : idx) CHECK(i < disk.size());
    }
    SUBCASE("acute corners are boundary points") {
        // Every neighbour of a corner with interior angle below 90 degrees sits
        // inside that corner's wedge, so the opposite half-plane is empty.
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const Point2 a{0, 0}, b{10, 0}, c{5, 8.66};
        std::vector<Point2> tri{a, b, c};
        while (tri.size() < 1500) {
            double s1 = u(rng), s2 = u(rng);
            if (s1 + s2 > 1.0) s1 = 1.0 - s1, s2 = 1.0 - s2;
            tri.push_back({a.x + s1 * (b.x - a.x) + s2 * (c.x - a.x), a.y + s1 * (b.y - a.y) + s2 * (c.y - a.y)});
        }
        const auto flagged = extract_boundary(tri, config_with(1.0));
        for (Point2 corner : {a, b, c}) CHECK(std::find(flagged.begin(), flagged.end(), corner) != flagged.end());
    }
}

TEST_CASE("chain_contour") {
    const auto cfg = config_with(2.0);
    SUBCASE("square corners") {
        const std::vector<Point2> corners{{1, 1}, {0, 0}, {1, 0}, {0, 1}};
        const auto poly = chain_contour(corners, config_with(1.5));
        CHECK(poly.size() == 4);
        CHECK(polygon_area(poly) == doctest::Approx(1.0));
    }
    SUBCASE("octagon") {
        std::vector<Point2> pts;
        for (int k : {3, 0, 5, 1, 7, 2, 6, 4}) {
            const double a = k * std::numbers::pi / 4.0;
            pts.push_back({std::cos(a), std::sin(a)});
        }
        const auto poly = chain_contour(pts, config_with(0.8));
        REQUIRE(poly.size() == 8);
        CHECK(is_simple(poly));
        CHECK(polygon_area(poly) == doctest::Approx(2.0 * std::sqrt(2.0)));
    }
    SUBCASE("fewer than three points") {
        const std::vector<Point2> two{{0, 0}, {1, 1}};
        CHECK_THROWS_AS(chain_contour(two, cfg), DegenerateContourError);
        const std::vector<Point2> dup{{0, 0}, {0, 0}, {1, 1}};
        CHECK_THROWS_AS(chain_contour(dup, cfg), DegenerateContourError);
    }
    SUBCASE("C-shape is carved concave") {
        const auto pts = c_shape(1500, 3);
        BoundaryConfig c = config_with(1.0);
        c.simplify_factor = 0.0;
        const auto boundary = extract_boundary(pts, c);
        const auto built = chain_contour_detailed(boundary, pts, c);
        CHECK(built.method == ContourMethod::carved);
        CHECK(is_simple(built.polygon));
        const double hull_area = std::abs(signed_area(convex_hull(pts)));
        CHECK(polygon_area(built.polygon) < hull_area);
        for (const auto& p : pts) CHECK(contains_within(built.polygon, p, c.eps));
        // The opening on the right stays outside.
        CHECK_FALSE(point_in_polygon({8, 0}, built.polygon));
    }
}

TEST_CASE("carving falls back to ordinary cluster points") {
    // A sparse C flags few points on its inner rim; without the fallback the
    // contour cannot reach into the hollow. Greedy carving can still stall,
    // so the hollow is checked over several seeds rather than per seed.
    int hollow_excluded = 0;
    double area_with = 0.0, area_without = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        CAPTURE(seed);
        const auto pts = c_shape(120, seed);
        BoundaryConfig on = config_with(2.5);
        on.simplify_factor = 0.0;
        BoundaryConfig off = on;
        off.carve_fallback = false;
        const auto boundary = extract_boundary(pts, on);
        const auto with = chain_contour_detailed(boundary, pts, on);
        const auto without = chain_contour_detailed(boundary, pts, off);
        CHECK(is_simple(with.polygon));
        CHECK(polygon_area(with.polygon) <= polygon_area(without.polygon) + 1e-9);
        for (const auto& p : pts) CHECK(contains_within(with.polygon, p, on.eps));
        hollow_excluded += !point_in_polygon({0, 0}, with.polygon);
        area_with += polygon_area(with.polygon);
        area_without += polygon_area(without.polygon);
    }
    CHECK(hollow_excluded >= 4);
    CHECK(area_with < 0.8 * area_without);
}

TEST_CASE("coverage factor bounds how far points may sit outside") {
    const auto pts = c_shape(1500, 8);
    for (const double f : {1.0, 0.5, 0.25}) {
        CAPTURE(f);
        BoundaryConfig c = config_with(1.0);
        c.simplify_factor = 0.0;
        c.coverage_factor = f;
        const auto built = chain_contour_detailed(extract_boundary(pts, c), pts, c);
        CHECK(is_simple(built.polygon));
        for (const auto& p : pts) CHECK(contains_within(built.polygon, p, f * c.eps + 1e-9));
    }
    BoundaryConfig bad = config_with(1.0);
    bad.coverage_factor = 0.0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("simplify_contour") {
    const auto pts = c_shape(1500, 5);
    BoundaryConfig c = config_with(1.0);
    c.simplify_factor = 0.0;
    const auto full = cluster_contour(pts, c).polygon;
    const auto simple = simplify_contour(full, pts, 1.0);
    CHECK(simple.size() < full.size());
    CHECK(is_simple(simple));
    for (const auto& p : pts) CHECK(contains_within(simple, p, 1.0 + 1e-9));
    CHECK_FALSE(point_in_polygon({8, 0}, simple));
    // Zero tolerance keeps the ring.
    CHECK(simplify_contour(full, pts, 0.0).size() == full.size());
}

TEST_CASE("cluster_contour fallbacks") {
    SUBCASE("collinear cluster gets the inflated bounding triangle") {
        const std::vector<Point2> line{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
        const auto built = cluster_contour(line, config_with(1.0));
        CHECK(built.method == ContourMethod::bounding_triangle);
        for (const auto& p : line) CHECK(point_in_polygon(p, built.polygon));
    }
    SUBCASE("disk contour covers the points") {
        const auto disk = uniform_disk(1000, 5.0, 17);
        const auto cfg = config_with(1.0);
        const auto built = cluster_contour(disk, cfg);
        CHECK(is_simple(built.polygon));
        for (const auto& p : disk) CHECK(contains_within(built.polygon, p, cfg.eps + 1e-9));
        CHECK(built.polygon.size() <= 20);
    }
}

TEST_CASE("build_local_model and reduction_ratio") {
    const auto disk = uniform_disk(100, 3.0, 2);
    DatasetFragment frag{7, disk};
    ClusteringResult one{std::vector<int>(100, 0), 1};
    const auto cfg = config_with(1.0);

    const auto model = build_local_model(frag, one, cfg, 0.0, 1);
    CHECK(model.node_id == 7);
    REQUIRE(model.contours.size() == 1);
    CHECK(model.internal_reps.empty());
    CHECK(model.contours[0].point_count == 100);
    CHECK(model.contours[0].source_node == 7);
    CHECK(model.contours[0].density == doctest::Approx(100.0 / polygon_area(model.contours[0].polygon)));

    const auto sampled = build_local_model(frag, one, cfg, 0.1, 1);
    CHECK(sampled.internal_reps.size() <= 10);
    CHECK(!sampled.internal_reps.empty());
    CHECK(build_local_model(frag, one, cfg, 0.1, 1).internal_reps == sampled.internal_reps);

    ClusteringResult noise{std::vector<int>(100, kNoise), 0};
    const auto empty = build_local_model(frag, noise, cfg, 0.5, 1);
    CHECK(empty.contours.empty());
    CHECK(empty.internal_reps.empty());
    CHECK(reduction_ratio(empty, frag) == 0.0);

    CHECK_THROWS_AS(build_local_model(frag, one, cfg, 1.5, 1), ParameterError);
    CHECK_THROWS_AS(reduction_ratio(model, DatasetFragment{0, {}}), ParameterError);

    // 100-point fragment, one 10-vertex contour, no internal representatives.
    std::vector<Point2> ring;
    for (int k = 0; k < 10; ++k) ring.push_back({std::cos(k * 0.6283185307179586), std::sin(k * 0.6283185307179586)});
    LocalModel handmade;
    handmade.contours.push_back(Contour::make(Polygon(ring), 100, 0, 0));
    CHECK(reduction_ratio(handmade, frag) == doctest::Approx(0.10));
}

TEST_CASE("boundary extraction scales near n log n") {
    auto median_time = [](std::size_t n) {
        // Constant density: the disk grows with n.
        const auto pts = uniform_disk(n, std::sqrt(static_cast<double>(n) / 20.0), 31);
        const auto cfg = config_with(1.0);
        std::vector<double> times;
        for (int r = 0; r < 5; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto b = extract_boundary_indices(pts, cfg);
            const auto t1 = std::chrono::steady_clock::now();
            CHECK(!b.empty());
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
        }
        std::sort(times.begin(), times.end());
        return times[2];
    };
    const double t2 = median_time(2000), t4 = median_time(4000), t8 = median_time(8000), t16 = median_time(16000);
    CHECK(t4 / t2 <= 2.6);
    CHECK(t8 / t4 <= 2.6);
    CHECK(t16 / t8 <= 2.6);
}
