#include "bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <sys/utsname.h>

#include "json.hpp"

#include "fastglz/error.hpp"
#include "fastglz/matrix_io.hpp"
#include "fastglz/reference_oracle.hpp"

namespace fastglz::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double rel_gap(double value, double reference) {
    return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

std::vector<Index> range(Index begin, Index count) {
    std::vector<Index> out(static_cast<std::size_t>(count));
    std::iota(out.begin(), out.end(), begin);
    return out;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string machine_description() {
    std::string out;
    utsname info{};
    if (uname(&info) == 0) {
        out = std::string(info.nodename) + " " + info.sysname + " " + info.release + " " + info.machine;
    } else {
        out = "unknown";
    }
    out += ", " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads";
    return out;
}

std::vector<SweepRow> ks_sweep(const Matrix& X, const GlzFamily& family, const ProblemFamily& problems,
                               const AdmmConfig& config, const std::vector<Index>& ks_values,
                               Index max_problems) {
    const Index K = problems.problems();
    for (Index ks : ks_values) {
        if (ks < 1 || ks > K) {
            throw ValidationError("K_s = " + std::to_string(ks) + " is outside [1, " + std::to_string(K) + "]");
        }
    }
    const Index budget = max_problems > 0 ? std::min(max_problems, K) : K;

    // Baseline: the same code path, one problem per call.
    std::vector<double> reference(static_cast<std::size_t>(budget));
    const auto start = Clock::now();
    for (Index k = 0; k < budget; ++k) {
        const auto res = fastglz_fit(X, family, select_problems(problems, {k}), config);
        reference[static_cast<std::size_t>(k)] = res[0].objective;
    }
    const double sequential = seconds_since(start) / static_cast<double>(budget);

    std::vector<SweepRow> rows;
    for (Index ks : ks_values) {
        SweepRow row;
        row.ks = ks;
        row.per_problem_sequential_seconds = sequential;
        if (ks == 1) {
            row.problems_timed = budget;
            row.simultaneous_seconds = sequential;
            rows.push_back(row);
            continue;
        }
        const Index chunks = std::max<Index>(1, budget / ks);
        const auto t0 = Clock::now();
        std::vector<FitResult> results;
        for (Index c = 0; c < chunks; ++c) {
            auto part = fastglz_fit(X, family, select_problems(problems, range(c * ks, ks)), config);
            results.insert(results.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        }
        row.problems_timed = chunks * ks;
        row.simultaneous_seconds = seconds_since(t0) / static_cast<double>(row.problems_timed);
        for (Index k = 0; k < std::min(row.problems_timed, budget); ++k) {
            row.max_rel_obj_gap = std::max(row.max_rel_obj_gap, rel_gap(results[static_cast<std::size_t>(k)].objective,
                                                                         reference[static_cast<std::size_t>(k)]));
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<PathRow> path_benchmark(const Matrix& X, const GlzFamily& family, const ProblemFamily& problems,
                                    const PathConfig& path, const AdmmConfig& config, Index oracle_problems) {
    const PathResult fast = fit_path(X, family, problems, path, config);
    const Index m = std::clamp<Index>(oracle_problems, 0, problems.problems());
    std::vector<Vector> warm(static_cast<std::size_t>(m), Vector::Zero(X.rows()));
    oracle::OracleConfig oc;
    oc.tol = 1e-9;

    std::vector<PathRow> rows;
    for (const PathPoint& pt : fast.points) {
        PathRow row;
        row.lambda = pt.lambda;
        row.mean_active = pt.mean_active;
        row.simultaneous_seconds = pt.seconds;
        row.max_rel_obj_gap = pt.failed ? std::numeric_limits<double>::quiet_NaN() : 0.0;
        const auto t0 = Clock::now();
        for (Index k = 0; k < m; ++k) {
            const auto o = oracle::prox_grad_fit(X, family, problems.weights.col(k), problems.responses.col(k),
                                                 pt.lambda1, pt.lambda2, oc, config.groups,
                                                 warm[static_cast<std::size_t>(k)]);
            warm[static_cast<std::size_t>(k)] = o.w;
            if (!pt.failed) {
                row.max_rel_obj_gap =
                    std::max(row.max_rel_obj_gap, rel_gap(pt.results[static_cast<std::size_t>(k)].objective, o.objective));
            }
        }
        // Scale the reference time up to the whole family.
        row.sequential_seconds = m > 0 ? seconds_since(t0) * static_cast<double>(problems.problems()) /
                                             static_cast<double>(m)
                                       : 0.0;
        rows.push_back(row);
    }
    return rows;
}

void emit_bench_report(const BenchReport& report, const std::filesystem::path& tsv_path,
                       const std::filesystem::path& json_path) {
    if (!tsv_path.empty()) {
        std::string tsv = "K_s\tsimultaneous_seconds\tper_problem_sequential_seconds\tspeedup\tmax_rel_obj_gap\n";
        for (const SweepRow& r : report.sweep) {
            tsv += std::to_string(r.ks) + '\t' + format_double(r.simultaneous_seconds) + '\t' +
                   format_double(r.per_problem_sequential_seconds) + '\t' + format_double(r.speedup()) + '\t' +
                   format_double(r.max_rel_obj_gap) + '\n';
        }
        io::write_file_atomic(tsv_path, tsv);
    }
    if (json_path.empty()) return;

    nlohmann::json j;
    j["metadata"] = {{"machine", report.meta.machine},
                     {"threads", report.meta.threads},
                     {"seed", report.meta.seed},
                     {"features", report.meta.features},
                     {"trials", report.meta.trials},
                     {"problems", report.meta.problems},
                     {"family", report.meta.family},
                     {"alpha_mix", report.meta.alpha_mix},
                     {"lambda_fraction", report.meta.lambda_fraction}};
    j["sweep_columns"] = {"K_s", "simultaneous_seconds", "per_problem_sequential_seconds", "speedup",
                          "max_rel_obj_gap"};
    j["sweep"] = nlohmann::json::array();
    for (const SweepRow& r : report.sweep) {
        j["sweep"].push_back({{"K_s", r.ks},
                              {"problems_timed", r.problems_timed},
                              {"simultaneous_seconds", r.simultaneous_seconds},
                              {"per_problem_sequential_seconds", r.per_problem_sequential_seconds},
                              {"speedup", r.speedup()},
                              {"max_rel_obj_gap", r.max_rel_obj_gap}});
    }
    j["path_columns"] = {"lambda", "mean_active", "simultaneous_seconds", "sequential_seconds", "speedup",
                         "max_rel_obj_gap"};
    j["path"] = nlohmann::json::array();
    for (const PathRow& r : report.path) {
        j["path"].push_back({{"lambda", r.lambda},
                             {"mean_active", r.mean_active},
                             {"simultaneous_seconds", r.simultaneous_seconds},
                             {"sequential_seconds", r.sequential_seconds},
                             {"speedup", r.speedup()},
                             {"max_rel_obj_gap", r.max_rel_obj_gap}});
    }
    io::write_file_atomic(json_path, j.dump(2) + "\n");
}

void emit_path_tsv(const BenchReport& report, const std::filesystem::path& tsv_path) {
    std::string tsv = "lambda\tmean_active\tsimultaneous_seconds\tsequential_seconds\tspeedup\tmax_rel_obj_gap\n";
    for (const PathRow& r : report.path) {
        tsv += format_double(r.lambda) + '\t' + format_double(r.mean_active) + '\t' +
               format_double(r.simultaneous_seconds) + '\t' + format_double(r.sequential_seconds) + '\t' +
               format_double(r.speedup()) + '\t' + format_double(r.max_rel_obj_gap) + '\n';
    }
    io::write_file_atomic(tsv_path, tsv);
}

}  // namespace fastglz::cli
