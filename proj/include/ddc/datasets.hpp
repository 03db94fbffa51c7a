#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddc/geometry.hpp"

namespace ddc {

// Ground-truth label for background noise.
inline constexpr int kNoiseLabel = -1;

struct LabeledDataset {
    std::vector<Point2> points;
    std::vector<int> truth_labels;  // empty when the source had no labels
    std::string name;
    std::optional<std::size_t> expected_clusters;

    bool labeled() const noexcept { return !truth_labels.empty(); }
};

enum class BenchmarkKind { T1, T2, T3, T4 };

std::optional<BenchmarkKind> parse_benchmark_kind(std::string_view text);
std::string_view to_string(BenchmarkKind kind);

// Rows "x,y" or "x,y,label" (label -1 is noise); '#' starts a comment, blank
// lines are skipped. Either every row carries a label or none does.
// Throws IoError, ParseError (with line number) or ValidationError for
// non-finite coordinates.
LabeledDataset load_csv(const std::filesystem::path& path);
LabeledDataset parse_csv(std::string_view text, std::string name = "");

// Writes coordinates with round-trip precision.
void save_csv(const LabeledDataset& data, const std::filesystem::path& path);
std::string to_csv(const LabeledDataset& data);

// {name, expected_clusters, seed, noise_fraction}
void save_sidecar(const LabeledDataset& data, std::uint64_t seed, double noise_fraction,
                  const std::filesystem::path& path);

// Seeded synthetic stand-ins for the four benchmark profiles:
//   T1   700 points, 5 round/oval blobs, no noise
//   T2   321 points, 6 mixed shapes (blobs, bar, arc)
//   T3 10000 points, 9 clusters, two of them disks nested in open rings
//   T4  8000 points, 6 non-convex shapes (arcs, S-curve, bars)
// T2-T4 add noise_fraction of the total as uniform background noise.
LabeledDataset generate_benchmark(BenchmarkKind kind, std::uint64_t seed, double noise_fraction = 0.1);

// Scaled T3 layout with n points in total, for scaling runs.
LabeledDataset generate_t3_like(std::size_t n, std::uint64_t seed, double noise_fraction = 0.1);

// Pair-counting agreement corrected for chance; noise is an ordinary label.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace ddc
