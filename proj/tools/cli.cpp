#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddc/datasets.hpp"
#include "ddc/errors.hpp"
#include "svg.hpp"

namespace ddc::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path.string());
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("cannot write " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

fs::path sidecar_path(const fs::path& csv) {
    fs::path p = csv;
    p.replace_extension(".json");
    return p;
}

// Shared by run and compare.
struct RunOptions {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool with_matrix = false;
    std::string partition;
    std::optional<std::size_t> kmeans_k;  // compare only
};

struct Inputs {
    LabeledDataset data;
    RunConfig config;
};

Inputs load_inputs(const RunOptions& o) {
    Inputs in;
    in.config = o.config.empty() ? default_run_config() : run_config_from_json(read_json(o.config));
    if (o.seed) {
        in.config.seed = *o.seed;
        in.config.partition_seed = *o.seed;
    }
    if (!o.partition.empty()) {
        const auto strategy = parse_partition_strategy(o.partition);
        if (!strategy) throw UsageError("--partition must be random, stripes or skewed");
        in.config.partition = *strategy;
    }
    in.config.validate();

    in.data = load_csv(o.data);
    if (in.data.points.empty()) throw ValidationError(o.data + ": no points");
    const fs::path side = sidecar_path(o.data);
    if (fs::exists(side)) {
        const auto j = read_json(side);
        if (j.contains("expected_clusters") && j.at("expected_clusters").is_number_unsigned())
            in.data.expected_clusters = j.at("expected_clusters").get<std::size_t>();
    }
    return in;
}

ordered_json phase_times(const RunTrace& t) {
    ordered_json j;
    j["phase_one_ms"] = t.phase_one_ms;
    j["node_ms"] = t.node_ms;
    j["level_ms"] = t.level_ms;
    j["wall_ms"] = t.wall_ms;
    return j;
}

std::optional<double> ari_of(const LabeledDataset& data, const RunResult& r) {
    if (!data.labeled()) return std::nullopt;
    return adjusted_rand_index(data.truth_labels, r.point_labels);
}

ordered_json make_report(const fs::path& data_path, const Inputs& in, const RunResult& r) {
    ordered_json j;
    j["dataset"] = {{"path", data_path.string()}, {"points", in.data.points.size()}, {"labeled", in.data.labeled()}};
    j["global_cluster_count"] = r.model.clusters.size();
    if (in.data.expected_clusters) j["expected_clusters"] = *in.data.expected_clusters;
    if (const auto ari = ari_of(in.data, r)) j["ari"] = *ari;
    j["reduction_ratio"] = r.trace.reduction_ratio();
    j["phase_times"] = phase_times(r.trace);
    j["messages"] = r.trace.messages.size();
    j["bytes"] = r.trace.total_bytes;
    j["representatives_sent"] = r.trace.total_representatives_sent;
    j["nodes"] = in.config.nodes.size();
    j["degree"] = in.config.degree;
    j["partition"] = to_string(in.config.partition);
    j["neighbour_search"] = in.config.search == NeighbourSearch::grid ? "grid" : "matrix";
    auto clusters = ordered_json::array();
    for (const auto& c : r.model.clusters) {
        clusters.push_back(
            {{"point_count", c.point_count}, {"area", polygon_area(c.polygon)}, {"vertices", c.polygon.size()}});
    }
    j["clusters"] = clusters;
    return j;
}

ordered_json make_trace(const RunResult& r) {
    ordered_json j = to_json(r.trace);
    ordered_json levels = ordered_json::array();
    for (std::size_t l = 0; l < r.tree.levels.size(); ++l)
        levels.push_back({{"groups", r.tree.levels[l]}, {"leaders", r.tree.leaders[l]}});
    j["tree"] = {{"degree", r.tree.degree}, {"root", r.tree.root}, {"levels", levels}};
    return j;
}

int cmd_generate(const std::string& kind_text, std::uint64_t seed, const std::string& out_path, double noise,
                 std::optional<std::size_t> points, std::ostream& out) {
    const auto kind = parse_benchmark_kind(kind_text);
    if (!kind) throw UsageError("unknown dataset kind '" + kind_text + "' (expected T1, T2, T3 or T4)");
    if (!(noise >= 0.0 && noise < 1.0)) throw UsageError("--noise must lie in [0, 1)");
    if (points && *kind != BenchmarkKind::T3) throw UsageError("--points is only available for T3");

    const LabeledDataset data = points ? generate_t3_like(*points, seed, noise) : generate_benchmark(*kind, seed, noise);
    const fs::path csv(out_path);
    if (csv.has_parent_path()) ensure_directory(csv.parent_path());
    save_csv(data, csv);
    save_sidecar(data, seed, *kind == BenchmarkKind::T1 ? 0.0 : noise, sidecar_path(csv));
    out << "wrote " << data.points.size() << " points to " << csv.string() << "\n";
    return kSuccess;
}

int cmd_run(const RunOptions& o, std::ostream& out) {
    Inputs in = load_inputs(o);
    const fs::path dir(o.out);
    ensure_directory(dir);

    const RunResult result = run_ddc(in.data.points, in.config);
    ordered_json report = make_report(o.data, in, result);

    if (o.with_matrix) {
        // Same run twice, once per neighbour search, so the timings can be
        // compared side by side. The clustering itself does not change.
        RunConfig grid_cfg = in.config;
        grid_cfg.search = NeighbourSearch::grid;
        RunConfig matrix_cfg = in.config;
        matrix_cfg.search = NeighbourSearch::distance_matrix;
        const RunResult other = run_ddc(in.data.points, in.config.search == NeighbourSearch::grid ? matrix_cfg : grid_cfg);
        const RunResult& grid = in.config.search == NeighbourSearch::grid ? result : other;
        const RunResult& matrix = in.config.search == NeighbourSearch::grid ? other : result;
        report["matrix_comparison"] = {{"without_matrix", phase_times(grid.trace)},
                                       {"with_matrix", phase_times(matrix.trace)},
                                       {"same_cluster_count", grid.model.clusters.size() == matrix.model.clusters.size()}};
    }

    write_file(dir / "report.json", report.dump(2) + "\n");
    write_file(dir / "trace.json", make_trace(result).dump(2) + "\n");
    const SvgPanel panel{in.data.name + ": " + std::to_string(result.model.clusters.size()) + " clusters",
                         in.data.points, result.point_labels, result.model.clusters};
    write_file(dir / "clusters.svg", render_svg({&panel, 1}));

    out << result.model.clusters.size() << " global clusters";
    if (report.contains("ari")) out << ", ARI " << report["ari"].get<double>();
    out << ", reduction ratio " << result.trace.reduction_ratio() << "\n";
    return kSuccess;
}

RunConfig as_variant(RunConfig c, Algorithm algorithm, std::size_t k, bool with_matrix) {
    for (auto& n : c.nodes) {
        if (algorithm == Algorithm::kmeans && n.algorithm != Algorithm::kmeans) {
            n.kmeans.seed = static_cast<std::uint64_t>(n.id);
        }
        n.algorithm = algorithm;
        if (algorithm == Algorithm::kmeans) n.kmeans.k = k;
    }
    if (with_matrix) c.search = NeighbourSearch::distance_matrix;
    return c;
}

int cmd_compare(const RunOptions& o, std::ostream& out) {
    Inputs in = load_inputs(o);
    const fs::path dir(o.out);
    ensure_directory(dir);

    const RunResult dbscan_run = run_ddc(in.data.points, as_variant(in.config, Algorithm::dbscan, 0, o.with_matrix));
    // Local K-Means has to over-segment: with k at the true count a single
    // centroid straddling two clusters fuses them globally. Three times the
    // known count (or what the density-based variant found) keeps pieces
    // inside one cluster on the convex benchmark.
    const std::size_t reference = in.data.expected_clusters.value_or(dbscan_run.model.clusters.size());
    const std::size_t k = o.kmeans_k.value_or(std::max<std::size_t>(1, 3 * reference));
    if (k == 0) throw UsageError("--kmeans-k must be positive");
    const RunResult kmeans_run = run_ddc(in.data.points, as_variant(in.config, Algorithm::kmeans, k, o.with_matrix));

    auto row = [&](const RunResult& r) {
        ordered_json j;
        j["cluster_count"] = r.model.clusters.size();
        if (const auto ari = ari_of(in.data, r)) j["ari"] = *ari;
        else j["ari"] = nullptr;
        j["reduction"] = r.trace.reduction();
        j["time_ms"] = r.trace.wall_ms;
        return j;
    };
    ordered_json table;
    table["dataset"] = {{"path", o.data}, {"points", in.data.points.size()}, {"labeled", in.data.labeled()}};
    if (in.data.expected_clusters) table["expected_clusters"] = *in.data.expected_clusters;
    table["kmeans_k"] = k;
    table["variants"] = {{"dbscan", row(dbscan_run)}, {"kmeans", row(kmeans_run)}};
    write_file(dir / "compare.json", table.dump(2) + "\n");

    const std::array<SvgPanel, 2> panels{
        SvgPanel{"DDC-DBSCAN: " + std::to_string(dbscan_run.model.clusters.size()) + " clusters", in.data.points,
                 dbscan_run.point_labels, dbscan_run.model.clusters},
        SvgPanel{"DDC-K-Means: " + std::to_string(kmeans_run.model.clusters.size()) + " clusters", in.data.points,
                 kmeans_run.point_labels, kmeans_run.model.clusters},
    };
    write_file(dir / "compare.svg", render_svg(panels));

    out << "dbscan " << dbscan_run.model.clusters.size() << " clusters, kmeans " << kmeans_run.model.clusters.size()
        << " clusters\n";
    return kSuccess;
}

void add_run_options(CLI::App& sub, RunOptions& o) {
    sub.add_option("--config", o.config, "Run configuration JSON (default: 5 DBSCAN nodes)");
    sub.add_option("--data", o.data, "Input CSV (x,y[,label])")->required();
    sub.add_option("--out", o.out, "Output directory")->required();
    sub.add_option("--seed", o.seed, "Overrides the partition and sampling seeds");
    sub.add_flag("--with-distance-matrix", o.with_matrix, "Also time DBSCAN with a materialized distance matrix");
    sub.add_option("--partition", o.partition, "Partition strategy: random, stripes or skewed");
}

}  // namespace

RunConfig default_run_config() {
    RunConfig c = uniform_config(5, Algorithm::dbscan, 3);
    for (auto& n : c.nodes) {
        n.eps_heuristic = EpsHeuristic::median_knn;
        n.eps_scale = 2.0;
        n.heuristic_min_pts = 4;
    }
    return c;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Distributed density-based clustering simulator", "ddc"};
    app.require_subcommand(1);

    std::string kind;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    double noise = 0.1;
    std::optional<std::size_t> points;
    auto* generate = app.add_subcommand("generate", "Write a synthetic benchmark dataset as CSV plus sidecar JSON");
    generate->add_option("kind", kind, "T1, T2, T3 or T4")->required();
    generate->add_option("--seed", gen_seed, "Generator seed");
    generate->add_option("--out", gen_out, "Output CSV path")->required();
    generate->add_option("--noise", noise, "Background noise fraction (T2-T4)");
    generate->add_option("--points", points, "Total points for a scaled T3 layout");

    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Cluster a dataset end to end and write report, trace and plot");
    add_run_options(*run, run_opts);

    RunOptions cmp_opts;
    auto* compare = app.add_subcommand("compare", "Run the DBSCAN and K-Means variants on the same fragments");
    add_run_options(*compare, cmp_opts);
    compare->add_option("--kmeans-k", cmp_opts.kmeans_k, "Local k for the K-Means variant (default 3x the cluster count)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (*generate) return cmd_generate(kind, gen_seed, gen_out, noise, points, out);
        if (*run) return cmd_run(run_opts, out);
        if (*compare) return cmd_compare(cmp_opts, out);
        return kUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParameterError& e) {
        err << "invalid parameter: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << "\n";
        return kIo;
    } catch (const ValidationError& e) {
        err << "input error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

}  // namespace ddc::cli
