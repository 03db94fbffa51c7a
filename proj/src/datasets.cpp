#include "ddc/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ddc/errors.hpp"

namespace ddc {

std::optional<BenchmarkKind> parse_benchmark_kind(std::string_view text) {
    if (text == "T1" || text == "t1") return BenchmarkKind::T1;
    if (text == "T2" || text == "t2") return BenchmarkKind::T2;
    if (text == "T3" || text == "t3") return BenchmarkKind::T3;
    if (text == "T4" || text == "t4") return BenchmarkKind::T4;
    return std::nullopt;
}

std::string_view to_string(BenchmarkKind kind) {
    switch (kind) {
        case BenchmarkKind::T1: return "T1";
        case BenchmarkKind::T2: return "T2";
        case BenchmarkKind::T3: return "T3";
        case BenchmarkKind::T4: return "T4";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* what) {
    field = trim(field);
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError(std::string("malformed ") + what + " '" + std::string(field) + "'", line);
    return value;
}

}  // namespace

LabeledDataset parse_csv(std::string_view text, std::string name) {
    LabeledDataset out;
    out.name = std::move(name);
    std::optional<bool> with_labels;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        std::vector<std::string_view> fields;
        for (std::size_t start = 0;;) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 2 && fields.size() != 3)
            throw ParseError("expected 2 or 3 comma-separated fields, got " + std::to_string(fields.size()), line_no);
        const bool labeled = fields.size() == 3;
        if (with_labels && *with_labels != labeled) throw ParseError("inconsistent label column", line_no);
        with_labels = labeled;

        const Point2 p{parse_field<double>(fields[0], line_no, "x"), parse_field<double>(fields[1], line_no, "y")};
        if (!is_finite(p)) throw ValidationError("line " + std::to_string(line_no) + ": non-finite coordinate");
        out.points.push_back(p);
        if (labeled) {
            const int label = parse_field<int>(fields[2], line_no, "label");
            if (label < kNoiseLabel) throw ParseError("label must be >= -1", line_no);
            out.truth_labels.push_back(label);
        }
    }
    if (out.labeled()) {
        std::vector<int> ids;
        for (int l : out.truth_labels)
            if (l != kNoiseLabel) ids.push_back(l);
        std::sort(ids.begin(), ids.end());
        out.expected_clusters = static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
    }
    return out;
}

LabeledDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path.string());
    return parse_csv(buf.str(), path.stem().string());
}

std::string to_csv(const LabeledDataset& data) {
    if (data.labeled() && data.truth_labels.size() != data.points.size())
        throw ParameterError("to_csv: label count does not match point count");
    std::string out;
    char buf[64];
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        for (const double v : {data.points[i].x, data.points[i].y}) {
            const auto res = std::to_chars(buf, buf + sizeof buf, v);
            out.append(buf, res.ptr);
            out += ',';
        }
        if (data.labeled()) {
            out += std::to_string(data.truth_labels[i]);
        } else {
            out.pop_back();
        }
        out += '\n';
    }
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

void save_csv(const LabeledDataset& data, const std::filesystem::path& path) { write_file(path, to_csv(data)); }

void save_sidecar(const LabeledDataset& data, std::uint64_t seed, double noise_fraction,
                  const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["name"] = data.name;
    if (data.expected_clusters) {
        j["expected_clusters"] = *data.expected_clusters;
    } else {
        j["expected_clusters"] = nullptr;
    }
    j["seed"] = seed;
    j["noise_fraction"] = noise_fraction;
    write_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Generators

namespace {

using Rng = std::mt19937_64;

double unit(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

struct Shape {
    std::function<Point2(Rng&)> sample;
    double weight;  // share of the cluster points (area for uniform shapes)
};

Point2 rotate_about(Point2 c, double dx, double dy, double rot) {
    return {c.x + dx * std::cos(rot) - dy * std::sin(rot), c.y + dx * std::sin(rot) + dy * std::cos(rot)};
}

Shape disk(Point2 c, double r) {
    return {[=](Rng& rng) {
                const double rr = r * std::sqrt(unit(rng)), t = 2.0 * std::numbers::pi * unit(rng);
                return Point2{c.x + rr * std::cos(t), c.y + rr * std::sin(t)};
            },
            std::numbers::pi * r * r};
}

Shape ellipse(Point2 c, double a, double b, double rot_deg) {
    const double rot = radians(rot_deg);
    return {[=](Rng& rng) {
                const double rr = std::sqrt(unit(rng)), t = 2.0 * std::numbers::pi * unit(rng);
                return rotate_about(c, a * rr * std::cos(t), b * rr * std::sin(t), rot);
            },
            std::numbers::pi * a * b};
}

// Band between radii r0 and r1, angles a0..a1 degrees counter-clockwise.
Shape arc(Point2 c, double r0, double r1, double a0_deg, double a1_deg) {
    const double a0 = radians(a0_deg), a1 = radians(a1_deg);
    return {[=](Rng& rng) {
                const double rr = std::sqrt(r0 * r0 + unit(rng) * (r1 * r1 - r0 * r0));
                const double t = a0 + (a1 - a0) * unit(rng);
                return Point2{c.x + rr * std::cos(t), c.y + rr * std::sin(t)};
            },
            0.5 * (a1 - a0) * (r1 * r1 - r0 * r0)};
}

Shape bar(Point2 c, double w, double h, double rot_deg) {
    const double rot = radians(rot_deg);
    return {[=](Rng& rng) { return rotate_about(c, (unit(rng) - 0.5) * w, (unit(rng) - 0.5) * h, rot); }, w * h};
}

Shape triangle(Point2 a, Point2 b, Point2 c) {
    return {[=](Rng& rng) {
                double s = unit(rng), t = unit(rng);
                if (s + t > 1.0) s = 1.0 - s, t = 1.0 - t;
                return Point2{a.x + s * (b.x - a.x) + t * (c.x - a.x), a.y + s * (b.y - a.y) + t * (c.y - a.y)};
            },
            0.5 * std::abs((b - a).cross(c - a))};
}

// Normal blob truncated at two standard deviations.
Shape gaussian(Point2 c, double sx, double sy, double rot_deg, double weight) {
    const double rot = radians(rot_deg);
    return {[=](Rng& rng) {
                std::normal_distribution<double> n(0.0, 1.0);
                for (;;) {
                    const double u = n(rng), v = n(rng);
                    if (u * u + v * v <= 4.0) return rotate_about(c, sx * u, sy * v, rot);
                }
            },
            weight};
}

Shape weighted(Shape shape, double weight) {
    shape.weight = weight;
    return shape;
}

// Several pieces sampled in proportion to their weights.
Shape compound(std::vector<Shape> parts) {
    double total = 0.0;
    for (const auto& p : parts) total += p.weight;
    return {[parts, total](Rng& rng) {
                double pick = unit(rng) * total;
                for (const auto& p : parts) {
                    if (pick < p.weight) return p.sample(rng);
                    pick -= p.weight;
                }
                return parts.back().sample(rng);
            },
            total};
}

struct Layout {
    std::vector<Shape> shapes;
    BBox domain;  // noise is drawn uniformly here
};

// Splits `total` by weight with largest remainders so the counts add up exactly.
std::vector<std::size_t> apportion(const std::vector<Shape>& shapes, std::size_t total) {
    double sum = 0.0;
    for (const auto& s : shapes) sum += s.weight;
    std::vector<std::size_t> counts(shapes.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const double exact = static_cast<double>(total) * shapes[i].weight / sum;
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(-(exact - std::floor(exact)), i);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
    return counts;
}

LabeledDataset realise(const Layout& layout, std::size_t total, double noise_fraction, std::uint64_t seed,
                       std::string name) {
    if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) throw ParameterError("noise_fraction must lie in [0, 1)");
    const auto noise = static_cast<std::size_t>(std::llround(noise_fraction * static_cast<double>(total)));
    const auto counts = apportion(layout.shapes, total - noise);

    Rng rng(seed);
    LabeledDataset out;
    out.name = std::move(name);
    for (std::size_t s = 0; s < layout.shapes.size(); ++s) {
        for (std::size_t k = 0; k < counts[s]; ++k) {
            out.points.push_back(layout.shapes[s].sample(rng));
            out.truth_labels.push_back(static_cast<int>(s));
        }
    }
    std::uniform_real_distribution<double> nx(layout.domain.min_x, layout.domain.max_x);
    std::uniform_real_distribution<double> ny(layout.domain.min_y, layout.domain.max_y);
    for (std::size_t k = 0; k < noise; ++k) {
        const double x = nx(rng);
        out.points.push_back({x, ny(rng)});
        out.truth_labels.push_back(kNoiseLabel);
    }
    // Interleave so that input order carries no cluster information.
    std::vector<std::size_t> order(out.points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    LabeledDataset shuffled{{}, {}, out.name, layout.shapes.size()};
    for (std::size_t i : order) {
        shuffled.points.push_back(out.points[i]);
        shuffled.truth_labels.push_back(out.truth_labels[i]);
    }
    return shuffled;
}

Layout layout_t1() {
    return {{gaussian({10, 10}, 1.5, 1.5, 0, 1), gaussian({32, 10}, 3.0, 1.5, 20, 1), gaussian({54, 12}, 1.8, 1.8, 0, 1),
             gaussian({16, 34}, 1.5, 3.0, -30, 1), gaussian({44, 36}, 2.2, 2.2, 0, 1)},
            {0, 0, 64, 46}};
}

Layout layout_t2() {
    // Equal shares: the profile is small and shapes of very different area
    // would otherwise starve the blobs.
    return {{gaussian({8, 8}, 1.2, 1.2, 0, 1), gaussian({26, 8}, 2.0, 1.0, 0, 1), weighted(ellipse({46, 9}, 4, 2.5, 30), 1),
             weighted(bar({10, 30}, 12, 2.5, 0), 1), weighted(arc({34, 26}, 4, 6, 20, 160), 1),
             weighted(disk({52, 30}, 3), 1)},
            {0, 0, 60, 40}};
}

// Ring-in-disk nestings use open rings (240 degrees): an outer contour of a
// closed ring would also enclose its disk.
Layout layout_t3(double s) {
    auto P = [s](double x, double y) { return Point2{x * s, y * s}; };
    return {{disk(P(25, 25), 3 * s), arc(P(25, 25), 7 * s, 10 * s, 60, 300), disk(P(25, 65), 3 * s),
             arc(P(25, 65), 7 * s, 10 * s, -30, 210), disk(P(65, 20), 6 * s), ellipse(P(65, 65), 9 * s, 4 * s, 30),
             bar(P(105, 15), 24 * s, 4 * s, 0), triangle(P(98, 40), P(112, 40), P(105, 52.1)), disk(P(105, 75), 5 * s)},
            {0, 0, 140 * s, 90 * s}};
}

Layout layout_t4() {
    // S-curve: two three-quarter bands meeting at (70, 50).
    Shape s_curve = compound({arc({70, 57.5}, 6, 9, 0, 270), arc({70, 42.5}, 6, 9, -180, 90)});
    Shape l_shape = compound({bar({120, 62}, 30, 4, 0), bar({107, 77}, 4, 26, 0)});
    return {{arc({25, 30}, 8, 11, 0, 180), arc({25, 70}, 8, 11, 180, 360), std::move(s_curve), bar({115, 25}, 30, 4, 45),
             std::move(l_shape), arc({150, 50}, 8, 11, 90, 270)},
            {0, 0, 170, 100}};
}

}  // namespace

LabeledDataset generate_benchmark(BenchmarkKind kind, std::uint64_t seed, double noise_fraction) {
    switch (kind) {
        case BenchmarkKind::T1: return realise(layout_t1(), 700, 0.0, seed, "T1");
        case BenchmarkKind::T2: return realise(layout_t2(), 321, noise_fraction, seed, "T2");
        case BenchmarkKind::T3: return realise(layout_t3(1.0), 10000, noise_fraction, seed, "T3");
        case BenchmarkKind::T4: return realise(layout_t4(), 8000, noise_fraction, seed, "T4");
    }
    throw ParameterError("unknown benchmark kind");
}

LabeledDataset generate_t3_like(std::size_t n, std::uint64_t seed, double noise_fraction) {
    if (n < 100) throw ParameterError("generate_t3_like: need at least 100 points");
    // Stretch the layout so density stays that of the 10,000-point profile.
    const double s = std::sqrt(static_cast<double>(n) / 10000.0);
    return realise(layout_t3(s), n, noise_fraction, seed, "T3-" + std::to_string(n));
}

// ---------------------------------------------------------------------------
// Adjusted Rand index

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw ParameterError("adjusted_rand_index: label vectors differ in length");
    const std::size_t n = a.size();
    auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };

    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [k, v] : table) index += pairs(v);
    for (const auto& [k, v] : rows) sum_rows += pairs(v);
    for (const auto& [k, v] : cols) sum_cols += pairs(v);
    const double total = pairs(static_cast<double>(n));
    if (total == 0.0) return 1.0;
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // both labelings trivial in the same way
    return (index - expected) / (max_index - expected);
}

}  // namespace ddc
