#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fastglz/admm.hpp"
#include "fastglz/regpath.hpp"

namespace fastglz::cli {

/// One simultaneity level of the K_s sweep. Times are per problem.
struct SweepRow {
    Index ks = 0;
    Index problems_timed = 0;
    double simultaneous_seconds = 0.0;
    double per_problem_sequential_seconds = 0.0;
    double max_rel_obj_gap = 0.0;  ///< against the one-at-a-time fits of the same problems

    double speedup() const { return per_problem_sequential_seconds / simultaneous_seconds; }
};

/// One lambda of the path benchmark: the whole batch on the path versus the
/// reference solver run problem by problem with warm starts.
struct PathRow {
    double lambda = 0.0;
    double mean_active = 0.0;
    double simultaneous_seconds = 0.0;
    double sequential_seconds = 0.0;
    double max_rel_obj_gap = 0.0;

    double speedup() const { return sequential_seconds / simultaneous_seconds; }
};

struct BenchMeta {
    std::string machine;
    int threads = 1;
    std::uint64_t seed = 0;
    Index features = 0;
    Index trials = 0;
    Index problems = 0;
    std::string family;
    double alpha_mix = 1.0;
    double lambda_fraction = 0.0;
};

struct BenchReport {
    BenchMeta meta;
    std::vector<PathRow> path;
    std::vector<SweepRow> sweep;
};

/// Host name, kernel and core count, for the report header.
std::string machine_description();

/// Fits problems one at a time and then in chunks of each K_s, all through
/// fastglz_fit. At most `max_problems` problems (0 = all) enter the timing;
/// a level whose K_s exceeds that count fits one chunk of K_s problems.
std::vector<SweepRow> ks_sweep(const Matrix& X, const GlzFamily& family, const ProblemFamily& problems,
                               const AdmmConfig& config, const std::vector<Index>& ks_values,
                               Index max_problems = 0);

/// Path of the whole family against warm-started proximal-gradient fits of
/// the first `oracle_problems` problems.
std::vector<PathRow> path_benchmark(const Matrix& X, const GlzFamily& family, const ProblemFamily& problems,
                                    const PathConfig& path, const AdmmConfig& config, Index oracle_problems);

/// TSV columns: K_s, simultaneous_seconds, per_problem_sequential_seconds,
/// speedup, max_rel_obj_gap. The JSON file holds the metadata, both tables
/// and the column layout. Either path may be empty to skip it.
void emit_bench_report(const BenchReport& report, const std::filesystem::path& tsv_path,
                       const std::filesystem::path& json_path);

/// TSV columns: lambda, mean_active, simultaneous_seconds, sequential_seconds,
/// speedup, max_rel_obj_gap.
void emit_path_tsv(const BenchReport& report, const std::filesystem::path& tsv_path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

}  // namespace fastglz::cli
